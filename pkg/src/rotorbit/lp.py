"""Exact rational linear programming for tiny problems.

Two-phase tableau simplex over fractions.Fraction with Bland's rule, for
problems in the standard form  max c.x  s.t.  A x = b, x >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: list | None = None
    value: Fraction | None = None


def _pivot(T, basis, r, c):
    piv = T[r][c]
    T[r] = [v / piv for v in T[r]]
    for i in range(len(T)):
        if i != r and T[i][c] != 0:
            f = T[i][c]
            T[i] = [a - f * b for a, b in zip(T[i], T[r])]
    basis[r] = c


def _run(T, basis, n_cols, allowed):
    """Maximise the objective held in the last row (stored as -c)."""
    m = len(T) - 1
    while True:
        obj = T[-1]
        enter = next((j for j in range(n_cols) if allowed[j] and obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], enter)


def solve(A, b, c) -> LPResult:
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    m = len(A)
    n = len(c)
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    # phase 1: artificials n .. n+m-1, maximise -sum(artificials)
    T = [A[i] + [Fraction(int(i == k)) for k in range(m)] + [b[i]] for i in range(m)]
    obj = [Fraction(0)] * (n + m + 1)
    for i in range(m):
        obj = [o - t for o, t in zip(obj, T[i])]
    for k in range(m):
        obj[n + k] = Fraction(0)
    T.append(obj)
    basis = [n + i for i in range(m)]
    _run(T, basis, n + m, [True] * (n + m))
    if T[-1][-1] != 0:
        return LPResult("infeasible")
    # drive artificials out of the basis, dropping redundant rows
    i = 0
    while i < len(basis):
        if basis[i] >= n:
            col = next((j for j in range(n) if T[i][j] != 0), None)
            if col is None:
                del T[i]
                del basis[i]
                continue
            _pivot(T, basis, i, col)
        i += 1
    # phase 2
    T = [row[:n] + [row[-1]] for row in T[:-1]]
    obj = [-v for v in c] + [Fraction(0)]
    for i, bi in enumerate(basis):
        if obj[bi] != 0:
            f = obj[bi]
            obj = [o - f * t for o, t in zip(obj, T[i])]
    T.append(obj)
    status = _run(T, basis, n, [True] * n)
    if status != "optimal":
        return LPResult(status)
    x = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        x[bi] = T[i][-1]
    return LPResult("optimal", x, sum(ci * xi for ci, xi in zip(c, x)))


def rref(rows):
    """Reduced row echelon form over Q; returns (matrix, pivot columns)."""
    M = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    r = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pv = M[r][c]
        M[r] = [v / pv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def nullspace(rows, ncols: int):
    """Basis of {x : rows x = 0} over Q."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    M, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    out = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for r, pc in enumerate(pivots):
            x[pc] = -M[r][f]
        out.append(x)
    return out
