"""Realising rotation vectors: Steinitz reduction, deck-word certificates,
bounded mean-motion streams and periodic-point search.

All certificate arithmetic is over fractions.Fraction and Python integers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import ConvexHull

from . import lp
from .errors import NotFound, NotInterior
from .group import GroupWord, abelianize, dehn_reduce
from .hyperbolic import dist
from .zoo import LiftedMap


def _frac_vec(v):
    return tuple(Fraction(x) for x in v)


@dataclass(frozen=True)
class ExtremalDatum:
    """A deck word g with abelianize(g) = n * w exactly."""

    w: tuple
    word: GroupWord
    n: int

    @classmethod
    def from_word(cls, word, n: int, genus: int) -> ExtremalDatum:
        word = GroupWord.parse(word) if isinstance(word, str) else word
        ab = abelianize(word, genus)
        return cls(tuple(Fraction(int(x), n) for x in ab), word, int(n))

    def check(self, genus: int) -> bool:
        ab = abelianize(self.word, genus)
        return all(Fraction(int(a)) == self.n * w for a, w in zip(ab, self.w))

    def to_dict(self) -> dict:
        return {"w": [str(x) for x in self.w], "word": str(self.word), "n": str(self.n)}

    @classmethod
    def from_dict(cls, d) -> ExtremalDatum:
        return cls(tuple(Fraction(x) for x in d["w"]), GroupWord.parse(d["word"]), int(d["n"]))


# --- Steinitz --------------------------------------------------------------------


def _affine_normal(points, v):
    """A rational normal of the affine hull of points (None if full-dimensional)."""
    dim = len(v)
    rows = [[p[k] - points[0][k] for k in range(dim)] for p in points[1:]]
    ns = lp.nullspace(rows, dim) if rows else lp.nullspace([], dim)
    return ns[0] if ns else None


def _max_min_weight(points, v):
    """max t such that v = sum lam_i p_i, sum lam_i = 1, lam_i >= t.

    Returns (t, lam) or (None, None) when v is outside the affine hull.
    """
    m = len(points)
    dim = len(v)
    # variables: t+, t-, mu_1..mu_m ; lam_i = t + mu_i
    S = [sum(p[k] for p in points) for k in range(dim)]
    A = [[S[k], -S[k]] + [p[k] for p in points] for k in range(dim)]
    A.append([Fraction(m), Fraction(-m)] + [Fraction(1)] * m)
    b = list(v) + [Fraction(1)]
    c = [1, -1] + [0] * m
    res = lp.solve(A, b, c)
    if res.status != "optimal":
        return None, None
    t = res.x[0] - res.x[1]
    lam = [t + mu for mu in res.x[2:]]
    return t, lam


def _separating_direction(points, v):
    """Nonzero rational u with u.(p_i - v) <= 0 for all i, or None."""
    dim = len(v)
    m = len(points)
    normal = _affine_normal(points, v)
    if normal is not None:
        side = sum(normal[k] * (points[0][k] - v[k]) for k in range(dim))
        return [-x for x in normal] if side > 0 else list(normal)
    # variables: u+ (dim), u- (dim), s (m);  u.(p_i - v) + s_i = 0, sum s = 1
    A = []
    for i, p in enumerate(points):
        d = [p[k] - v[k] for k in range(dim)]
        A.append(d + [-x for x in d] + [Fraction(int(i == j)) for j in range(m)])
    A.append([Fraction(0)] * (2 * dim) + [Fraction(1)] * m)
    b = [Fraction(0)] * m + [Fraction(1)]
    res = lp.solve(A, b, [0] * (2 * dim + m))
    if res.status != "optimal":
        return None
    return [res.x[k] - res.x[dim + k] for k in range(dim)]


def interior_weights(points, v):
    """Strictly positive rational weights expressing v, or None if v is not
    interior to a full-dimensional conv(points)."""
    if _affine_normal(points, v) is not None:
        return None
    t, lam = _max_min_weight(points, v)
    if t is None or t <= 0:
        return None
    return lam


def steinitz_decompose(v, candidates):
    """At most 2*dim candidates with v interior to their hull, and exact weights.

    Returns (subset, lam) with every lam_i > 0, sum lam_i = 1 and
    sum lam_i w_i = v.  Raises NotInterior carrying a direction u with
    u.(w_i - v) <= 0 for every candidate when v is not interior.
    """
    v = _frac_vec(v)
    dim = len(v)
    pts = [d.w for d in candidates]
    lam = interior_weights(pts, v) if pts else None
    if lam is None:
        u = _separating_direction(pts, v) if pts else [Fraction(1)] + [Fraction(0)] * (dim - 1)
        raise NotInterior(f"{[str(x) for x in v]} is not interior to the candidate hull", u)
    keep = list(range(len(candidates)))
    while len(keep) > 2 * dim:
        for i in keep:
            trial = [k for k in keep if k != i]
            if interior_weights([pts[k] for k in trial], v) is not None:
                keep = trial
                break
        else:
            keep = _exhaustive(pts, keep, v, 2 * dim)
    lam = interior_weights([pts[k] for k in keep], v)
    return [candidates[k] for k in keep], lam


def _exhaustive(pts, keep, v, size):
    for combo in itertools.combinations(keep, size):
        if interior_weights([pts[k] for k in combo], v) is not None:
            return list(combo)
    raise NotInterior("no interior subset of size 2*dim found", None)


# --- certificates ------------------------------------------------------------------


@dataclass
class RealizationCertificate:
    v: tuple
    data: list
    lam: list
    a: list
    u: list
    N_product: int
    a_Total: int
    h_v: GroupWord = field(repr=False)

    def verify(self, genus: int) -> bool:
        """abelianize(h_v) = a_Total N_product v, computed two ways."""
        target = [self.a_Total * self.N_product * x for x in self.v]
        direct = [Fraction(int(x)) for x in abelianize(self.h_v, genus)]
        weighted = [Fraction(0)] * len(self.v)
        for ai, ui, d in zip(self.a, self.u, self.data):
            ab = abelianize(d.word, genus)
            weighted = [s + ai * ui * int(x) for s, x in zip(weighted, ab)]
        sums_ok = sum(self.lam) == 1 and all(x > 0 for x in self.lam)
        comb = [sum(l * d.w[k] for l, d in zip(self.lam, self.data)) for k in range(len(self.v))]
        return sums_ok and direct == target and weighted == target and comb == list(self.v)

    def to_dict(self) -> dict:
        return {
            "v": [str(x) for x in self.v],
            "data": [d.to_dict() for d in self.data],
            "lambda": [str(x) for x in self.lam],
            "a": [str(x) for x in self.a],
            "u": [str(x) for x in self.u],
            "N_product": str(self.N_product),
            "a_Total": str(self.a_Total),
            "h_v": str(self.h_v),
            "h_v_length": len(self.h_v),
        }

    @classmethod
    def from_dict(cls, d) -> RealizationCertificate:
        return cls(
            tuple(Fraction(x) for x in d["v"]),
            [ExtremalDatum.from_dict(x) for x in d["data"]],
            [Fraction(x) for x in d["lambda"]],
            [int(x) for x in d["a"]],
            [int(x) for x in d["u"]],
            int(d["N_product"]),
            int(d["a_Total"]),
            GroupWord.parse(d["h_v"]),
        )


def compose_certificate(v, subset, lam) -> RealizationCertificate:
    """Clear denominators: a_Total v = sum a_i w_i, then
    h_v = g_1^(a_1 u_1) ... g_k^(a_k u_k) with u_i = N_product / n_i."""
    v = _frac_vec(v)
    lam = [Fraction(x) for x in lam]
    D = reduce(math.lcm, (x.denominator for x in lam), 1)
    a = [int(x * D) for x in lam]
    N_product = math.prod(d.n for d in subset)
    u = [N_product // d.n for d in subset]
    h = GroupWord()
    for ai, ui, d in zip(a, u, subset):
        h = h * d.word ** (ai * ui)
    return RealizationCertificate(v, list(subset), lam, a, u, N_product, D, h)


# --- bounded mean motion -------------------------------------------------------------


@dataclass
class BoundedSequence:
    symbols: np.ndarray
    deviation: np.ndarray
    C_star: float
    C_diameter_form: float
    inradius: float
    step_radius: float

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max()) if self.deviation.size else 0.0

    @property
    def within_bound(self) -> bool:
        return self.max_deviation <= self.C_star + 1e-9


def _affine_inradius(points: np.ndarray, y: np.ndarray) -> float:
    """Radius of the largest ball about y inside conv(points), measured in
    their affine hull; negative when y is outside."""
    centre = points[0]
    diffs = points - centre
    if np.allclose(diffs, 0):
        return 0.0 if np.allclose(y, centre) else -1.0
    _, s, vt = np.linalg.svd(diffs)
    r = int(np.sum(s > 1e-9 * s[0]))
    basis = vt[:r]
    off = (y - centre) - basis.T @ (basis @ (y - centre))
    if np.linalg.norm(off) > 1e-9 * max(1.0, np.linalg.norm(y)):
        return -1.0
    loc = diffs @ basis.T
    yl = basis @ (y - centre)
    if r == 1:
        lo, hi = loc[:, 0].min(), loc[:, 0].max()
        return float(min(yl[0] - lo, hi - yl[0]))
    h = ConvexHull(loc)
    return float(np.min(-(h.equations[:, :-1] @ yl + h.equations[:, -1])))


def bounded_sequence(v, data, steps: int, genus: int | None = None) -> BoundedSequence:
    """Greedy symbol stream with || sum_{k<=n} x_{s_k} - n y || bounded.

    Scaled steps are x_i = u_i abelianize(g_i) = N_product w_i (integers,
    summed exactly) and y = N_product v.  If B(y, r) within the affine hull
    lies in conv(x_i) and R = max |x_i - y|, some x_i has
    (x_i - y).D <= -r |D| for the current deviation D, so greedy keeps
    |D| <= R + R^2 / (2r) =: C_star.  With a single datum (R = 0) C_star = 0.
    """
    genus = genus or (len(data[0].w) // 2)
    N_product = math.prod(d.n for d in data)
    X = np.array([[(N_product // d.n) * int(a) for a in abelianize(d.word, genus)] for d in data], dtype=np.int64)
    y = N_product * np.asarray(v, dtype=float)
    R = float(np.max(np.linalg.norm(X - y, axis=1)))
    if R == 0:
        r = math.inf
        C = 0.0
    else:
        r = _affine_inradius(X.astype(float), y)
        if not r >= 1e-9:
            raise NotInterior("target is not interior to the data hull", None)
        C = R + R * R / (2 * r)
    diam = max((float(np.linalg.norm(a - b)) for a in X for b in X), default=0.0)
    partial = np.zeros(X.shape[1], dtype=np.int64)
    symbols = np.empty(steps, dtype=np.int64)
    dev = np.empty(steps)
    for n in range(1, steps + 1):
        cand = partial + X - n * y
        i = int(np.argmin(np.einsum("ij,ij->i", cand, cand)))
        partial += X[i]
        symbols[n - 1] = i
        dev[n - 1] = float(np.linalg.norm(partial - n * y))
    return BoundedSequence(symbols, dev, C, R + diam, r, R)


# --- periodic points --------------------------------------------------------------------


@dataclass
class PeriodicPointResult:
    N: int
    g: GroupWord
    point: complex
    residual: float

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "g": str(self.g),
            "point": [self.point.real, self.point.imag],
            "residual": self.residual,
        }




def _displaced(M: LiftedMap, g: GroupWord, N: int, p) -> np.ndarray:
    """g^-1 f~^N(p) on disk points.

    f~^N(p) = K.q with q reduced; the deck word g^-1 K is shortened exactly
    (free and Dehn reduction) before it is evaluated, so long words g never
    meet floating point.
    """
    G = M.group
    q, _, K = G.reduce_many(np.asarray(p, dtype=complex).astype(np.clongdouble), words=True)
    for _ in range(N):
        for sh in M.compiled:
            q, _, step = G.reduce_many(sh.apply(q, extended=True), words=True)
            K = [a * b for a, b in zip(K, step)]
    ginv = g.inverse()
    mats = np.full((len(K), 2, 2), np.nan, dtype=np.longdouble)
    for i, k in enumerate(K):
        e = dehn_reduce(ginv * k, G.genus)
        # a point of the polygon can only land back on the polygon's closure
        # through a tile touching it, whose Dehn-reduced word has at most 2g
        # letters; longer elements are left as nan (residual inf)
        if len(e) <= 4 * G.genus:
            mats[i] = G.evaluate(e, extended=True).m
    w = 1j * (1 + q) / (1 - q)
    with np.errstate(invalid="ignore"):
        wn = (mats[:, 0, 0] * w + mats[:, 0, 1]) / (mats[:, 1, 0] * w + mats[:, 1, 1])
        return ((wn - 1j) / (wn + 1j)).astype(complex)


def residuals(M: LiftedMap, g: GroupWord, N: int, p) -> np.ndarray:
    """d(f~^N(p), g.p), evaluated as d(g^-1 f~^N(p), p)."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    d = dist(_displaced(M, g, N, p), p)
    return np.where(np.isnan(d), np.inf, d)


def _refine(M, g, N, p0):
    """Gauss-Newton on the disk displacement g^-1 f~^N(p) - p."""

    def fun(x):
        z = complex(x[0], x[1])
        if abs(z) >= 0.999:
            return np.array([1.0, 1.0])
        d = _displaced(M, g, N, np.array([z]))[0] - z
        if np.isnan(d):
            return np.array([1.0, 1.0])
        return np.array([d.real, d.imag])

    best = (float(residuals(M, g, N, p0)[0]), p0)
    sol = least_squares(fun, [p0.real, p0.imag], xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=100)
    z = complex(sol.x[0], sol.x[1])
    if abs(z) < 0.999:
        r = float(residuals(M, g, N, z)[0])
        if r < best[0]:
            best = (r, z)
    return best


def periodic_point_search(
    M: LiftedMap,
    g,
    N_max: int,
    tol: float = 1e-6,
    N_min: int = 1,
    grid: int = 2000,
    refine: int = 8,
    seed: int = 0,
    hints=(),
) -> PeriodicPointResult:
    """First (N, p) with d(f~^N(p), g.p) < tol: coarse area-uniform grid over the
    polygon, then local least-squares refinement of the best grid points.

    Raises NotFound (an inconclusive outcome, not a disproof) with the best
    attempt attached.
    """
    g = GroupWord.parse(g) if isinstance(g, str) else g
    pts = np.concatenate([np.asarray(hints, dtype=complex).reshape(-1), M.group.sample_area_uniform(np.random.default_rng(seed), grid)])
    best = None
    for N in range(N_min, N_max + 1):
        res = residuals(M, g, N, pts)
        order = np.argsort(res, kind="stable")
        if res[order[0]] < tol:
            return PeriodicPointResult(N, g, complex(pts[order[0]]), float(res[order[0]]))
        for k in order[:refine]:
            r, z = _refine(M, g, N, complex(pts[k]))
            if best is None or r < best.residual:
                best = PeriodicPointResult(N, g, z, r)
            if r < tol:
                return best
    raise NotFound(f"no point with residual < {tol} for N <= {N_max}", best)


def realize_and_verify(M: LiftedMap, cert: RealizationCertificate, tol: float = 1e-6, **kw) -> PeriodicPointResult:
    N = cert.a_Total * cert.N_product
    return periodic_point_search(M, cert.h_v, N, tol, N_min=N, **kw)


def core_candidates(M: LiftedMap, words, tol: float = 1e-6, seed: int = 0):
    """Data (w = [c], c, n = 1) for curve words c and their inverses, each
    validated by a successful search for f~(p) = c.p.  Returns (data, results)."""
    G = M.group
    data, results = [], []
    for w in words:
        w = GroupWord.parse(w) if isinstance(w, str) else w
        for c in (w, w.inverse()):
            try:
                res = periodic_point_search(M, c, 1, tol, seed=seed)
            except NotFound:
                continue
            data.append(ExtremalDatum.from_word(c, 1, G.genus))
            results.append(res)
    return data, results
