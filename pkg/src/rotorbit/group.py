"""Genus-g surface groups acting on the Poincare disk.

The model is the regular 4g-gon centred at the origin with interior angles
2*pi/4g and a vertex on the positive real axis.  Sides are numbered
counterclockwise from that vertex, side j running from vertex j to vertex j+1.
Side pairings follow the boundary pattern a1 b1 a1^-1 b1^-1 ...:

    a_k maps side 4k+2 onto side 4k      (carries P across side 4k)
    b_k maps side 4k+1 onto side 4k+3    (carries P across side 4k+3)

so that a1 b1 A1 B1 ... ag bg Ag Bg = 1.  Generator index 2k-1 is a_k and
index 2k is b_k; homology coordinates use the same order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate

from .errors import BadIndex, NonConvergence, UnsupportedGenus
from .hyperbolic import Isometry, disk_matrix, dist_to_origin

_TOKEN = re.compile(r"^([abAB])(\d+)$")


@dataclass(frozen=True)
class GroupWord:
    """Freely reduced word; letters are (generator index 1..2g, +1 or -1)."""

    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _free_reduce(tuple((int(i), int(e)) for i, e in self.letters)))

    @classmethod
    def parse(cls, text: str) -> GroupWord:
        """'a1 B1 a2' style; uppercase means inverse.  Empty string is the identity."""
        letters = []
        for tok in text.split():
            m = _TOKEN.match(tok)
            if not m or int(m.group(2)) < 1:
                raise ValueError(f"bad letter {tok!r} in word {text!r}")
            k = int(m.group(2))
            idx = 2 * k - 1 if m.group(1) in "aA" else 2 * k
            letters.append((idx, 1 if m.group(1).islower() else -1))
        return cls(tuple(letters))

    def __str__(self) -> str:
        out = []
        for idx, e in self.letters:
            k = (idx + 1) // 2
            c = "a" if idx % 2 else "b"
            out.append(f"{c if e > 0 else c.upper()}{k}")
        return " ".join(out)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: GroupWord) -> GroupWord:
        return GroupWord(self.letters + other.letters)

    def __pow__(self, n: int) -> GroupWord:
        if n < 0:
            return self.inverse() ** (-n)
        return GroupWord(self.letters * n)

    def inverse(self) -> GroupWord:
        return GroupWord(tuple((i, -e) for i, e in reversed(self.letters)))

    def cyclically_reduced(self) -> GroupWord:
        letters = list(self.letters)
        while len(letters) > 1 and letters[0][0] == letters[-1][0] and letters[0][1] == -letters[-1][1]:
            letters = letters[1:-1]
        return GroupWord(tuple(letters))

    def max_index(self) -> int:
        return max((i for i, _ in self.letters), default=0)


def _free_reduce(letters):
    out = []
    for lt in letters:
        if out and out[-1][0] == lt[0] and out[-1][1] == -lt[1]:
            out.pop()
        else:
            out.append(lt)
    return tuple(out)


def abelianize(w: GroupWord, genus: int | None = None) -> np.ndarray:
    """Exponent-sum vector in Z^{2g} (basis a1, b1, ..., ag, bg)."""
    n = 2 * genus if genus is not None else w.max_index() + (w.max_index() % 2)
    v = np.zeros(n, dtype=np.int64)
    for idx, e in w.letters:
        v[idx - 1] += e
    return v


def relator(genus: int) -> GroupWord:
    letters = []
    for k in range(genus):
        a, b = 2 * k + 1, 2 * k + 2
        letters += [(a, 1), (b, 1), (a, -1), (b, -1)]
    return GroupWord(tuple(letters))


@lru_cache(maxsize=None)
def _relator_cycles(genus: int):
    r = relator(genus).letters
    cycles = []
    for base in (r, GroupWord(r).inverse().letters):
        for k in range(len(base)):
            cycles.append(base[k:] + base[:k])
    return tuple(cycles)


def dehn_reduce(w: GroupWord, genus: int) -> GroupWord:
    """Dehn's algorithm: replace any subword that is more than half of a cyclic
    relator by the inverse of the shorter remainder, until none is left.

    The result represents the same element; it is empty iff the element is
    trivial, and it is short when the element moves the polygon a short way.
    """
    n = 4 * genus
    cycles = _relator_cycles(genus)
    letters = list(w.letters)
    changed = True
    while changed:
        changed = False
        for i in range(len(letters)):
            for c in cycles:
                k = 0
                while k < n and i + k < len(letters) and letters[i + k] == c[k]:
                    k += 1
                if 2 * k > n:
                    rest = GroupWord(c[k:]).inverse().letters
                    letters = list(_free_reduce(tuple(letters[:i]) + rest + tuple(letters[i + k :])))
                    changed = True
                    break
            if changed:
                break
    return GroupWord(tuple(letters))


@dataclass(frozen=True)
class FundamentalDomain:
    vertices: tuple
    side_pairings: dict
    circumradius: float
    inradius: float

    @property
    def diameter(self) -> float:
        return 2 * self.circumradius

    def side_circles(self):
        """(centre, radius) of the Euclidean circle carrying each side."""
        n = len(self.vertices)
        t = math.tanh(self.inradius / 2)
        c_abs = (t + 1 / t) / 2
        r = math.sqrt(c_abs**2 - 1)
        return [(c_abs * np.exp(1j * (2 * j + 1) * math.pi / n), r) for j in range(n)]

    def boundary_radius(self, theta):
        """Euclidean radius of the polygon boundary in direction theta."""
        n = len(self.vertices)
        theta = np.asarray(theta, dtype=float)
        j = np.floor(np.mod(theta, 2 * math.pi) / (2 * math.pi / n)).astype(int) % n
        c_abs = (math.tanh(self.inradius / 2) + 1 / math.tanh(self.inradius / 2)) / 2
        mid = (2 * j + 1) * math.pi / n
        proj = c_abs * np.cos(theta - mid)
        return proj - np.sqrt(proj**2 - 1)

    def area(self) -> float:
        """Hyperbolic area by quadrature of 2 rho^2 / (1 - rho^2) dtheta."""
        n = len(self.vertices)
        total = 0.0
        for j in range(n):
            lo, hi = 2 * math.pi * j / n, 2 * math.pi * (j + 1) / n

            def integrand(th):
                rho = float(self.boundary_radius(th))
                return 2 * rho * rho / (1 - rho * rho)

            val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
            total += val
        return total

    def interior_angles(self):
        """Angle between consecutive sides at each vertex."""
        circles = self.side_circles()
        n = len(self.vertices)
        out = []
        for j in range(n):
            v = self.vertices[j]
            c_prev, _ = circles[(j - 1) % n]
            c_next, _ = circles[j]
            # tangent directions are perpendicular to the radii of the side circles
            t1 = 1j * (v - c_prev)
            t2 = 1j * (v - c_next)
            ang = abs(np.angle(t1 / t2))
            out.append(min(ang, math.pi - ang))
        return out


class SurfaceGroup:
    """Standard genus-g surface group with its regular fundamental polygon."""

    def __init__(self, genus: int):
        if genus < 2:
            raise UnsupportedGenus(f"genus must be >= 2, got {genus}")
        self.genus = genus
        n = 4 * genus
        alpha = 2 * math.pi / n
        inradius = math.acosh(math.cos(alpha / 2) / math.sin(math.pi / n))
        circumradius = math.acosh(1 / (math.tan(math.pi / n) * math.tan(alpha / 2)))

        def mid(j):
            return (2 * j + 1) * math.pi / n

        def pairing(src, dst):
            return (
                Isometry.rotation(mid(dst))
                @ Isometry.real_translation(2 * inradius)
                @ Isometry.rotation(math.pi - mid(src))
            )

        gens = []
        sides = {}
        for k in range(genus):
            gens.append(pairing(4 * k + 2, 4 * k))
            gens.append(pairing(4 * k + 1, 4 * k + 3))
            a, b = 2 * k + 1, 2 * k + 2
            sides[4 * k] = GroupWord(((a, 1),))
            sides[4 * k + 2] = GroupWord(((a, -1),))
            sides[4 * k + 3] = GroupWord(((b, 1),))
            sides[4 * k + 1] = GroupWord(((b, -1),))
        self.generators = tuple(gens)
        rv = math.tanh(circumradius / 2)
        verts = tuple(complex(rv * np.exp(2j * math.pi * j / n)) for j in range(n))
        self.domain = FundamentalDomain(verts, dict(sorted(sides.items())), circumradius, inradius)

        # side elements in fixed side order, for descent and membership tests
        self._side_words = [self.domain.side_pairings[j] for j in range(n)]
        self._side_elems = [self.evaluate(w) for w in self._side_words]
        inv = np.array([s.inverse().disk for s in self._side_elems])
        self._side_inv_disk = inv
        self._side_inv_disk_ld = np.array([disk_matrix(s.inverse().m.astype(np.longdouble)) for s in self._side_elems])
        self._side_mats = np.array([s.m for s in self._side_elems])
        ab = np.zeros((n, 2 * genus), dtype=np.int64)
        for j, w in enumerate(self._side_words):
            ab[j] = abelianize(w, genus)
        self._side_ab = ab
        self._translate_cache = {}

    @property
    def rank(self) -> int:
        return 2 * self.genus

    def __repr__(self) -> str:
        return f"SurfaceGroup(genus={self.genus})"

    def generator(self, idx: int, exp: int = 1) -> Isometry:
        if not 1 <= idx <= 2 * self.genus:
            raise BadIndex(f"generator index {idx} outside 1..{2 * self.genus}")
        g = self.generators[idx - 1]
        return g if exp > 0 else g.inverse()

    def evaluate(self, w: GroupWord, extended: bool = False) -> Isometry:
        """Ordered product of generator matrices, optionally in np.longdouble."""
        dtype = np.longdouble if extended else float
        m = np.eye(2, dtype=dtype)
        for idx, e in w.letters:
            m = m @ self.generator(idx, e).m.astype(dtype)
        return Isometry(m)

    def abelianize(self, w: GroupWord) -> np.ndarray:
        if w.max_index() > 2 * self.genus:
            raise BadIndex(f"word {w} uses a generator outside 1..{2 * self.genus}")
        return abelianize(w, self.genus)

    def relator_residual(self) -> float:
        return self.evaluate(relator(self.genus)).distance_to(Isometry.identity())

    # --- domain membership and reduction -------------------------------------

    def side_images(self, z):
        """|s_j^{-1} z| for every side element s_j; shape (..., 4g)."""
        z = np.asarray(z)
        u = self._side_inv_disk_ld if z.dtype == np.clongdouble else self._side_inv_disk
        z = z.astype(u.dtype)[..., None]
        return (u[:, 0, 0] * z + u[:, 0, 1]) / (u[:, 1, 0] * z + u[:, 1, 1])

    def in_domain(self, z, tol: float = 1e-12):
        z = np.asarray(z, dtype=complex)
        imgs = np.abs(self.side_images(z))
        return np.all(np.abs(z)[..., None] <= imgs + tol, axis=-1)

    def reduce_to_domain(self, p) -> tuple[complex, GroupWord]:
        """Return (q, w) with q in the closed polygon and evaluate(w).q = p.

        An np.clongdouble input is reduced in extended precision (q keeps that
        type); this matters for far-away points, whose double representation
        is only good to about 1e-16 * exp(distance to the origin).
        """
        z = p if isinstance(p, np.clongdouble) else complex(p)
        budget = 10 * (1 + dist_to_origin(z))
        letters = []
        steps = 0
        while True:
            imgs = self.side_images(z)
            mods = np.abs(imgs)
            j = int(np.argmin(mods))
            if not mods[j] < abs(z) - 1e-14:
                break
            steps += 1
            if steps > budget:
                raise NonConvergence(f"reduction of {p!r} exceeded {budget:.1f} steps")
            z = imgs[j] if isinstance(z, np.clongdouble) else complex(imgs[j])
            letters.extend(self._side_words[j].letters)
        return z, GroupWord(tuple(letters))

    def reduce_many(self, z, max_steps: int = 200, elements: bool = False, words: bool = False):
        """Vectorized reduction.  Returns (reduced points, homology increments).

        p = g.q with abelianize(g) equal to the returned increment row.  With
        ``elements`` the half-plane matrices of g are appended to the result,
        and with ``words`` a list of the GroupWords g (flattened order).
        """
        z = np.array(z, copy=True)
        if z.dtype != np.clongdouble:
            z = z.astype(complex)
        inc = np.zeros(z.shape + (self.rank,), dtype=np.int64)
        flat = z.reshape(-1)
        flat_inc = inc.reshape(-1, self.rank)
        mats = np.broadcast_to(np.eye(2), (flat.size, 2, 2)).copy() if elements else None
        active = np.arange(flat.size)
        history = []
        for _ in range(max_steps):
            if active.size == 0:
                break
            imgs = self.side_images(flat[active])
            mods = np.abs(imgs)
            j = np.argmin(mods, axis=-1)
            best = mods[np.arange(active.size), j]
            move = best < np.abs(flat[active]) - 1e-14
            if not move.any():
                break
            idx = active[move]
            flat[idx] = imgs[np.nonzero(move)[0], j[move]]
            flat_inc[idx] += self._side_ab[j[move]]
            if elements:
                mats[idx] = mats[idx] @ self._side_mats[j[move]]
            if words:
                history.append((idx, j[move]))
            active = idx
        else:
            raise NonConvergence("vectorized reduction did not settle")
        out = (flat.reshape(z.shape), inc)
        if elements:
            out += (mats.reshape(z.shape + (2, 2)),)
        if words:
            seqs = [[] for _ in range(flat.size)]
            for idx, sides in history:
                for i, s in zip(idx.tolist(), sides.tolist()):
                    seqs[i].extend(self._side_words[s].letters)
            out += ([GroupWord(tuple(s)) for s in seqs],)
        return out

    def sample_area_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n points distributed uniformly for hyperbolic area on the polygon.

        Radii are drawn exactly from the area law of the circumscribed ball
        (area of B(0, r) is proportional to cosh r - 1), then points outside
        the polygon are rejected.
        """
        out = np.empty(0, dtype=complex)
        R = self.domain.circumradius
        while out.size < n:
            m = 2 * (n - out.size) + 16
            u, th = rng.random(m), rng.random(m) * 2 * math.pi
            r = np.arccosh(1 + u * (math.cosh(R) - 1))
            z = np.tanh(r / 2) * np.exp(1j * th)
            out = np.concatenate([out, z[self.in_domain(z, tol=0.0)]])
        return out[:n]

    # --- enumeration ---------------------------------------------------------

    def translates_near(self, radius: float):
        """Elements g with d(0, g.0) <= radius + domain diameter, as (word, isometry).

        Breadth-first over side pairings, pruned at the threshold plus the
        circumradius (every tile crossed by the segment [0, g.0] lies within
        that distance), deduplicated by the orbit point g.0.
        """
        key = round(float(radius), 9)
        if key in self._translate_cache:
            return self._translate_cache[key]
        threshold = radius + self.domain.diameter
        prune = threshold + self.domain.circumradius
        sides = np.array([s.m for s in self._side_elems])
        index = _OrbitIndex()
        index.add(0j)
        words = [GroupWord()]
        mats = [np.eye(2)]
        radii = [0.0]
        frontier = [0]
        while frontier:
            cand = np.einsum("fij,sjk->fsik", np.array([mats[i] for i in frontier]), sides)
            w = (cand[..., 0, 0] * 1j + cand[..., 0, 1]) / (cand[..., 1, 0] * 1j + cand[..., 1, 1])
            centres = (w - 1j) / (w + 1j)
            r = dist_to_origin(centres)
            nxt = []
            for f, s_idx in zip(*np.nonzero(r <= prune)):
                c = complex(centres[f, s_idx])
                if index.contains(c):
                    continue
                index.add(c)
                words.append(words[frontier[f]] * self._side_words[s_idx])
                mats.append(cand[f, s_idx])
                radii.append(float(r[f, s_idx]))
                nxt.append(len(words) - 1)
            frontier = nxt
        order = sorted(range(len(words)), key=lambda i: (round(radii[i], 9), len(words[i]), str(words[i])))
        out = [(words[i], Isometry(mats[i])) for i in order if radii[i] <= threshold + 1e-9]
        self._translate_cache[key] = out
        return out

    @cached_property
    def area(self) -> float:
        return self.domain.area()


class _OrbitIndex:
    """Spatial hash of disk points in hyperboloid coordinates."""

    def __init__(self, tol: float = 1e-6):
        self.tol = tol
        self.cells = {}

    @staticmethod
    def _coords(z):
        s = 2 / (1 - abs(z) ** 2)
        return s * z.real, s * z.imag

    def _cell(self, z):
        x, y = self._coords(z)
        return math.floor(x), math.floor(y)

    def contains(self, z) -> bool:
        cx, cy = self._cell(z)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for q in self.cells.get((cx + dx, cy + dy), ()):
                    if abs(q - z) <= self.tol * (1 - abs(z) ** 2):
                        return True
        return False

    def add(self, z) -> None:
        self.cells.setdefault(self._cell(z), []).append(z)


_GROUPS = {}


def standard_group(genus: int) -> SurfaceGroup:
    if genus not in _GROUPS:
        _GROUPS[genus] = SurfaceGroup(genus)
    return _GROUPS[genus]


def evaluate(w: GroupWord, G: SurfaceGroup) -> Isometry:
    return G.evaluate(w)


def reduce_to_domain(p, G: SurfaceGroup):
    return G.reduce_to_domain(p)


def translates_near(G: SurfaceGroup, radius: float):
    return G.translates_near(radius)
