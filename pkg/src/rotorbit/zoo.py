"""Homeomorphisms isotopic to the identity with explicit natural lifts.

A shear along a closed geodesic gamma acts on each lift of gamma in Fermi
coordinates by (s, d) -> (s + eta(d), d), with

    eta(d) = strength * length(gamma) * (1 - u^2)^2,   u = (d - side_offset) / width,

for |u| < 1 and eta = 0 elsewhere.  In half-plane coordinates of a lift's
frame F this is w -> F(e^eta F^-1 w), so a point on the core d = side_offset
with strength 1 moves by exactly one period of gamma.  Shears of the word and
of its inverse give parallel annuli on the two sides of the geodesic turning
in opposite directions.

Every shear is evaluated on a point first reduced into the fundamental
polygon, against the lifts whose strips reach the polygon; the lift of the
composition is the product of the reduction elements with the final point,
which makes it commute with deck transformations by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CurveClass, geodesic_of, lifts_meeting_ball
from .errors import EmptySpec, NotAreaPreserving, StripsOverlap
from .group import GroupWord, SurfaceGroup
from .hyperbolic import dist, geodesic_distance, to_disk, to_half_plane

PROFILES = ("bump",)


@dataclass(frozen=True)
class ShearSpec:
    curve: CurveClass
    width: float
    strength: float = 1.0
    side_offset: float = 0.0
    profile: str = "bump"

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("shear width must be positive")
        if self.side_offset < 0:
            raise ValueError("side_offset must be >= 0")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")

    def eta(self, d):
        d = np.asarray(d)
        u = (d - self.side_offset) / self.width
        return np.where(np.abs(u) < 1, self.strength * self.curve.length * (1 - u * u) ** 2, np.zeros((), d.dtype))

    def inverse(self) -> ShearSpec:
        return ShearSpec(self.curve, self.width, -self.strength, self.side_offset, self.profile)


@dataclass(frozen=True)
class MapSpec:
    shears: tuple = ()

    def inverse(self) -> MapSpec:
        return MapSpec(tuple(s.inverse() for s in reversed(self.shears)))


def two_way_shears(words, G: SurfaceGroup, width: float, side_offset: float, strength: float = 1.0) -> MapSpec:
    """For every word, one annulus turning along it and one along its inverse."""
    out = []
    for w in words:
        w = GroupWord.parse(w) if isinstance(w, str) else w
        out.append(ShearSpec(geodesic_of(w, G), width, strength, side_offset))
        out.append(ShearSpec(geodesic_of(w.inverse(), G), width, strength, side_offset))
    return MapSpec(tuple(out))


class _CompiledShear:
    """Lifts of one shear whose strips can reach the fundamental polygon."""

    def __init__(self, spec: ShearSpec, G: SurfaceGroup):
        self.spec = spec
        reach = spec.side_offset + spec.width
        lifts = lifts_meeting_ball(spec.curve, G, G.domain.circumradius + reach)
        min_gap = math.inf
        for i in range(len(lifts)):
            for j in range(i + 1, len(lifts)):
                min_gap = min(min_gap, geodesic_distance(lifts[i].geodesic, lifts[j].geodesic))
        if not min_gap > 2 * reach:
            raise StripsOverlap(
                f"translates of {spec.curve.word} come within {min_gap:.4g} < 2*(width+side_offset) = {2 * reach:.4g}"
            )
        self.min_gap = min_gap
        frames = [lift.geodesic.frame() for lift in lifts]
        self.fwd = np.array([f.m for f in frames])
        self.inv = np.array([f.inverse().m for f in frames])

    def apply(self, q: np.ndarray, extended: bool = False) -> np.ndarray:
        """Shear points of the (closed) fundamental polygon.

        With ``extended`` the whole evaluation runs in np.clongdouble.  The map
        can stretch by several orders of magnitude where strips cross, so
        double rounding in one shear shows up far above 1e-12 downstream.
        """
        cdt = np.clongdouble if extended else complex
        q = np.asarray(q).astype(cdt)
        out = q.copy()
        if self.inv.shape[0] == 0:
            return out
        inv = self.inv.astype(np.longdouble) if extended else self.inv
        fwd = self.fwd.astype(np.longdouble) if extended else self.fwd
        w = (1j * (1 + q) / (1 - q))[:, None]
        a, b, c, d = (inv[:, i, j] for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
        u = (a * w + b) / (c * w + d)
        dist_n = np.arcsinh(-u.real / u.imag)
        eta = self.spec.eta(dist_n)
        k = np.argmax(np.abs(eta), axis=1)
        rows = np.arange(q.size)
        e = eta[rows, k]
        hit = e != 0
        if hit.any():
            uu = u[rows[hit], k[hit]] * np.exp(e[hit])
            f = fwd[k[hit]]
            wn = (f[:, 0, 0] * uu + f[:, 0, 1]) / (f[:, 1, 0] * uu + f[:, 1, 1])
            out[hit] = (wn - 1j) / (wn + 1j)
        return out


@dataclass
class LiftedMap:
    spec: MapSpec
    group: SurfaceGroup
    compiled: list = field(repr=False)
    certificate: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.group.rank

    @property
    def displacement_bound(self) -> float:
        """Sup of d(p, f(p)): a point at normal distance d moved by eta along
        the hypercycle is displaced by 2 asinh(cosh(d) sinh(eta/2))."""
        total = 0.0
        for s in self.spec.shears:
            eta = abs(s.strength) * s.curve.length
            total += 2 * math.asinh(math.cosh(s.side_offset + s.width) * math.sinh(eta / 2))
        return total

    def step(self, q: np.ndarray):
        """One iterate on the surface: reduced points in, reduced points and
        homology increments out."""
        q = np.asarray(q, dtype=complex)
        inc = np.zeros(q.shape + (self.dim,), dtype=np.int64)
        for sh in self.compiled:
            q, di = self.group.reduce_many(sh.apply(q))
            inc += di
        return q, inc

    def __call__(self, z):
        """The lift on arbitrary disk points."""
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        q, _, mats = self.group.reduce_many(flat.astype(np.clongdouble), elements=True)
        for sh in self.compiled:
            q, _, m = self.group.reduce_many(sh.apply(q, extended=True), elements=True)
            mats = mats @ m
        w = to_half_plane(q.astype(complex))
        out = to_disk((mats[:, 0, 0] * w + mats[:, 0, 1]) / (mats[:, 1, 0] * w + mats[:, 1, 1]))
        return out.reshape(z.shape) if z.ndim else complex(out[0])

    def orbit_lift(self, z, n: int):
        """f~^n on disk points."""
        for _ in range(n):
            z = self(z)
        return z

    def inverse(self) -> LiftedMap:
        return build_map(self.spec.inverse(), self.group, certify=False)


def eval_lift(M: LiftedMap, p):
    return M(p)


def build_map(spec: MapSpec, G: SurfaceGroup, certify: bool = True, seed: int = 0, allow_empty: bool = True) -> LiftedMap:
    if not spec.shears and not allow_empty:
        raise EmptySpec("map spec has no shears")
    M = LiftedMap(spec, G, [_CompiledShear(s, G) for s in spec.shears])
    if certify:
        M.certificate = equivariance_certificate(M, np.random.default_rng(seed))
    return M


def random_words(rng: np.random.Generator, G: SurfaceGroup, n: int, max_len: int = 3):
    out = []
    for _ in range(n):
        L = int(rng.integers(1, max_len + 1))
        letters = [(int(rng.integers(1, G.rank + 1)), int(rng.choice([-1, 1]))) for _ in range(L)]
        out.append(GroupWord(tuple(letters)))
    return out


def lift_with_word(M: LiftedMap, z) -> tuple:
    """f~(z) as (W, q) with q in the polygon and f~(z) = evaluate(W).q.

    Keeping the deck part as a word avoids storing far-away points in disk
    coordinates, whose resolution decays like exp(-distance to the origin).
    """
    G = M.group
    q, word = G.reduce_to_domain(np.clongdouble(z))
    for sh in M.compiled:
        q, w = G.reduce_to_domain(sh.apply(np.array([q]), extended=True)[0])
        word = word * w
    return word, q


def equivariance_certificate(M: LiftedMap, rng: np.random.Generator, n: int = 1000, max_len: int = 3) -> dict:
    """max d(f~(g p), g f~(p)) over random polygon points and short deck words.

    With f~(g p) = W1.q1 and f~(p) = W2.q2 the distance equals
    d(q1, (W1^-1 g W2).q2); the relative word is freely reduced first.
    """
    G = M.group
    p = G.sample_area_uniform(rng, n)
    words = random_words(rng, G, n, max_len)
    err = np.zeros(n)
    disp = np.zeros(n)
    for k, (g, z) in enumerate(zip(words, p)):
        # g.p is formed in extended precision: in doubles its error alone,
        # amplified by the map's local stretching, would approach the tolerance
        gz = G.evaluate(g, extended=True).apply(np.clongdouble(z))
        w1, q1 = lift_with_word(M, gz)
        w2, q2 = lift_with_word(M, z)
        rel = w1.inverse() * g * w2
        err[k] = dist(complex(q1), complex(G.evaluate(rel, extended=True).apply(q2)))
        disp[k] = dist(z, G.evaluate(w2).apply(complex(q2)))
    return {
        "pairs": n,
        "max_word_length": max_len,
        "max_error": float(np.max(err)) if n else 0.0,
        "max_sampled_displacement": float(np.max(disp)) if n else 0.0,
        "displacement_bound": M.displacement_bound,
        "tolerance": 1e-9,
    }


def jacobian_defect(M: LiftedMap, q: np.ndarray, h: float = 1e-7) -> np.ndarray:
    """|det Df - 1| in the hyperbolic area form, per polygon point.

    Central differences (in extended precision) are taken for each shear
    separately on the reduced point it actually sees, reductions being
    isometries, and the area factors are multiplied; this keeps roundoff small
    even where the composition stretches strongly.
    """
    q = np.asarray(q).astype(np.clongdouble)
    h = np.longdouble(h)
    total = np.ones(q.shape, dtype=np.longdouble)
    for sh in M.compiled:
        fx = (sh.apply(q + h, True) - sh.apply(q - h, True)) / (2 * h)
        fy = (sh.apply(q + 1j * h, True) - sh.apply(q - 1j * h, True)) / (2 * h)
        det = fx.real * fy.imag - fx.imag * fy.real
        img = sh.apply(q, True)
        rho_ratio = ((1 - np.abs(q) ** 2) / (1 - np.abs(img) ** 2)) ** 2
        total *= det * rho_ratio
        q, _ = M.group.reduce_many(img)
    return np.abs(total - 1).astype(float)


def area_preserving(M: LiftedMap, n: int = 1000, seed: int = 0, tol: float = 1e-6, strict: bool = False):
    """Monte-Carlo Jacobian check; returns (passed, max defect)."""
    q = M.group.sample_area_uniform(np.random.default_rng(seed), n)
    worst = float(np.max(jacobian_defect(M, q))) if n else 0.0
    ok = worst < tol
    if strict and not ok:
        raise NotAreaPreserving(f"Jacobian defect {worst:.3g} exceeds {tol}")
    return ok, worst


# --- flat torus ---------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Periodic function on R/Z: zero, constant, cosine or plateau."""

    kind: str = "zero"
    amplitude: float = 0.0
    plateau: float = 0.25

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "constant":
            return np.full_like(t, self.amplitude)
        if self.kind == "cosine":
            return self.amplitude * (1 - np.cos(2 * np.pi * t)) / 2
        if self.kind == "plateau":
            # 0 on [0, p], ramps up to amplitude on [p, 1/2], flat on [1/2, 1/2 + p], ramps down
            p = self.plateau
            ramp = 0.5 - p
            up = np.clip((t - p) / ramp, 0, 1)
            down = np.clip((1 - t) / ramp, 0, 1)
            return self.amplitude * np.minimum(up, down)
        raise ValueError(f"unknown torus profile {self.kind!r}")


@dataclass(frozen=True)
class TorusMapSpec:
    """(x, y) -> (x + phi(y), y), then (x, y) -> (x, y + psi(x))."""

    phi: Profile = Profile()
    psi: Profile = Profile()


def torus_lift(spec: TorusMapSpec, p):
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    x = x + spec.phi(y)
    y = y + spec.psi(x)
    return np.stack([x, y], axis=-1)


class TorusSystem:
    """The torus lift as a system on the unit square with integer increments."""

    dim = 2

    def __init__(self, spec: TorusMapSpec):
        self.spec = spec

    def sample_domain(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.random((n, 2))

    def step(self, q):
        p = torus_lift(self.spec, q)
        fl = np.floor(p)
        return p - fl, fl.astype(np.int64)


class SurfaceSystem:
    """Adapter exposing a LiftedMap to the rotation estimators."""

    def __init__(self, M: LiftedMap):
        self.map = M
        self.dim = M.dim

    def sample_domain(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.map.group.sample_area_uniform(rng, n)

    def step(self, q):
        return self.map.step(q)


def as_system(obj):
    if isinstance(obj, LiftedMap):
        return SurfaceSystem(obj)
    if isinstance(obj, TorusMapSpec):
        return TorusSystem(obj)
    return obj

