"""Homological displacement, rotation vectors and rotation-set estimates.

Psi^n(p) is the homology class of the deck element g with f~^n(p~) in g.P,
where p~ is the lift of p in the fundamental polygon P.  It is accumulated
exactly, as integer increments returned by each step of a system (see
``zoo.SurfaceSystem`` and ``zoo.TorusSystem``).  Every estimator below only
needs ``dim``, ``sample_domain(rng, n)`` and ``step(states)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls
from scipy.spatial import ConvexHull
from scipy.stats import norm, qmc

from .errors import NotAreaPreserving, NotSupporting
from .hyperbolic import dist, dist_to_origin
from .zoo import LiftedMap, SurfaceSystem, area_preserving, as_system

SLOPE_FLAG = 0.01
SUPPORT_TOL = 1e-3


@dataclass(frozen=True)
class RotationConfig:
    n_iters: int = 1024
    n_samples: int = 1000
    seed: int = 0
    n_directions: int = 512
    basepoint: str = "origin"

    def arc_constant(self, system) -> float:
        """Length bound for the projected radial arcs from the basepoint."""
        if isinstance(system, SurfaceSystem):
            return system.map.group.domain.circumradius
        return math.sqrt(2.0)


def checkpoint_grid(n: int, linear: int = 0) -> list:
    """Powers of two up to n, n itself, and optionally a linear grid."""
    pts = {n}
    k = 1
    while k <= n:
        pts.add(k)
        k *= 2
    if linear:
        pts.update(int(round(x)) for x in np.linspace(1, n, linear))
    return sorted(p for p in pts if p >= 1)


def orbit_sums(system, q0, checkpoints):
    """Psi^n for every start state and checkpoint n.

    Returns (sums of shape (len(checkpoints), N, dim), final states).
    """
    system = as_system(system)
    q = np.array(q0, copy=True)
    total = np.zeros((len(q), system.dim), dtype=np.int64)
    out = np.zeros((len(checkpoints), len(q), system.dim), dtype=np.int64)
    done = 0
    for c, n in enumerate(checkpoints):
        for _ in range(n - done):
            q, inc = system.step(q)
            total += inc
        done = n
        out[c] = total
    return out, q


def displacement_class(M, p, n: int) -> np.ndarray:
    """Psi^n(p) for a disk point p (lifted into the polygon first)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    system = as_system(M)
    q0 = _start_state(system, p)
    sums, _ = orbit_sums(system, q0, [n])
    return sums[0, 0]


def _start_state(system, p):
    if isinstance(system, SurfaceSystem):
        q, _ = system.map.group.reduce_to_domain(p)
        return np.array([complex(q)])
    p = np.asarray(p, dtype=float)
    return (p - np.floor(p))[None, :]


def rotation_vector(M, p, n: int):
    """(Psi^n(p)/n, diagnostics) with the Cauchy gap between n/2 and n."""
    system = as_system(M)
    q0 = _start_state(system, p)
    half = max(1, n // 2)
    sums, _ = orbit_sums(system, q0, sorted({half, n}))
    v = sums[-1, 0] / n
    gap = float(np.linalg.norm(v - sums[0, 0] / half))
    return v, {"n": n, "cauchy_gap": gap, "half": half}


# --- convex geometry ------------------------------------------------------------


def direction_net(dim: int, n_extra: int, seed: int) -> np.ndarray:
    """Axis directions and their negatives, then scrambled Sobol directions."""
    eye = np.eye(dim)
    dirs = [eye, -eye]
    if n_extra:
        u = qmc.Sobol(d=dim, scramble=True, seed=seed).random(n_extra)
        g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        dirs.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    return np.vstack(dirs)


def affine_rank(points: np.ndarray, rel_tol: float = 1e-6) -> int:
    points = np.asarray(points, dtype=float)
    if len(points) <= 1:
        return 0
    s = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def hull_vertices(points: np.ndarray) -> tuple:
    """(vertices, facet equations or None) of conv(points)."""
    points = np.unique(np.asarray(points, dtype=float), axis=0)
    dim = points.shape[1]
    r = affine_rank(points)
    if r == dim and len(points) > dim:
        h = ConvexHull(points)
        return points[np.sort(h.vertices)], h.equations
    if r == 0:
        return points[:1], None
    # lower-dimensional: hull inside the affine span
    centre = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - centre)
    basis = vt[:r]
    local = (points - centre) @ basis.T
    if r == 1:
        idx = [int(np.argmin(local[:, 0])), int(np.argmax(local[:, 0]))]
    else:
        idx = ConvexHull(local).vertices
    return points[np.sort(np.unique(idx))], None


def distance_to_hull(x: np.ndarray, vertices: np.ndarray, weight: float = 1e4) -> float:
    """Euclidean distance from x to conv(vertices) (NNLS with a sum-to-one row)."""
    V = np.asarray(vertices, dtype=float)
    A = np.vstack([V.T, weight * np.ones(len(V))])
    b = np.concatenate([np.asarray(x, dtype=float), [weight]])
    lam, _ = nnls(A, b)
    lam = lam / lam.sum()
    return float(np.linalg.norm(V.T @ lam - x))


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Hausdorff distance between conv(A) and conv(B); attained at vertices."""
    a = max(distance_to_hull(x, B) for x in np.atleast_2d(A))
    b = max(distance_to_hull(x, A) for x in np.atleast_2d(B))
    return max(a, b)


@dataclass
class RotationSetEstimate:
    cloud: np.ndarray
    n: int
    directions: np.ndarray
    support: np.ndarray
    vertices: np.ndarray
    equations: np.ndarray | None
    seed: int
    starts: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.cloud.shape[1]

    def support_fn(self, v) -> float:
        return float(np.max(self.cloud @ np.asarray(v, dtype=float)))

    def argmax(self, v) -> np.ndarray:
        return self.cloud[int(np.argmax(self.cloud @ np.asarray(v, dtype=float)))]

    def margin(self, x) -> float:
        """Distance from x to the hull boundary, positive inside.

        Only meaningful for a full-dimensional hull; otherwise -inf.
        """
        if self.equations is None:
            return -math.inf
        x = np.asarray(x, dtype=float)
        return float(np.min(-(self.equations[:, :-1] @ x + self.equations[:, -1])))

    def to_dict(self) -> dict:
        return {
            "n_iters": self.n,
            "n_samples": int(len(self.cloud)),
            "seed": self.seed,
            "dimension": hull_dimension(self),
            "vertices": self.vertices.tolist(),
            "margin_of_origin": self.margin(np.zeros(self.dim)),
            "mean": self.cloud.mean(axis=0).tolist(),
            "resolution": 1.0 / self.n,
        }


def estimate_from_cloud(cloud: np.ndarray, n: int, seed: int, n_directions: int = 512, starts=None):
    dirs = direction_net(cloud.shape[1], n_directions, seed)
    proj = cloud @ dirs.T
    support = proj.max(axis=0)
    cand = cloud[np.unique(proj.argmax(axis=0))]
    verts, eqs = hull_vertices(cand)
    return RotationSetEstimate(cloud, n, dirs, support, verts, eqs, seed, starts)


def mz_estimate(M, cfg: RotationConfig) -> RotationSetEstimate:
    """Cloud of Psi^n/n at n = n_iters from area-uniform starts, and its hull."""
    system = as_system(M)
    rng = np.random.default_rng(cfg.seed)
    q0 = system.sample_domain(rng, cfg.n_samples)
    sums, _ = orbit_sums(system, q0, [cfg.n_iters])
    cloud = sums[0] / cfg.n_iters
    return estimate_from_cloud(cloud, cfg.n_iters, cfg.seed, cfg.n_directions, q0)


def hull_dimension(est: RotationSetEstimate) -> int:
    return affine_rank(est.vertices)


def measure_vector_lebesgue(M, cfg: RotationConfig, check_area: bool = True):
    """Mean of Psi^1 over area-uniform samples, with a 3-sigma radius."""
    system = as_system(M)
    if check_area and isinstance(M, LiftedMap):
        ok, worst = area_preserving(M, seed=cfg.seed)
        if not ok:
            raise NotAreaPreserving(f"Jacobian defect {worst:.3g}")
    rng = np.random.default_rng(cfg.seed + 1)
    q0 = system.sample_domain(rng, cfg.n_samples)
    _, inc = system.step(q0)
    inc = inc.astype(float)
    mean = inc.mean(axis=0)
    radius = 3 * math.sqrt(float(np.trace(np.atleast_2d(np.cov(inc.T)))) / len(inc))
    return mean, radius


@dataclass
class DeviationReport:
    omega: np.ndarray
    v_H: np.ndarray
    checkpoints: list
    max_deviation: np.ndarray  # max over samples at each checkpoint
    running_max: np.ndarray
    slope: float
    flagged: bool

    @property
    def maximum(self) -> float:
        return float(self.running_max[-1])

    def to_dict(self) -> dict:
        return {
            "omega": np.asarray(self.omega, dtype=float).tolist(),
            "v_H": np.asarray(self.v_H, dtype=float).tolist(),
            "max": self.maximum,
            "slope": self.slope,
            "slope_threshold": SLOPE_FLAG,
            "flagged": self.flagged,
        }


def fit_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def validate_support(est: RotationSetEstimate, omega, v_H, tol: float = SUPPORT_TOL):
    v = np.asarray(v_H, dtype=float)
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise NotSupporting("v_H must be a unit vector")
    gap = est.support_fn(v) - float(np.dot(omega, v))
    if abs(gap) > tol:
        raise NotSupporting(f"omega.v_H misses the support value by {gap:.3g}")


def deviations_from_sums(sums, checkpoints, omega, v_H) -> DeviationReport:
    """Deviation statistics from precomputed Psi^n (checkpoints x samples x dim)."""
    v = np.asarray(v_H, dtype=float)
    ns = np.asarray(checkpoints, dtype=float)
    dev = sums @ v - ns[:, None] * float(np.dot(omega, v))
    mx = dev.max(axis=1)
    run = np.maximum.accumulate(mx)
    slope = fit_slope(ns, run)
    return DeviationReport(np.asarray(omega, dtype=float), v, list(checkpoints), mx, run, slope, slope > SLOPE_FLAG)


def deviation_stat(M, cfg: RotationConfig, omega, v_H, est: RotationSetEstimate | None = None, linear: int = 64):
    """max over samples of (Psi^n(p) - n omega).v_H along a checkpoint grid.

    The samples are the same seeded starts mz_estimate uses, and when ``est``
    is given omega is validated against its support function.
    """
    if est is not None:
        validate_support(est, omega, v_H)
    system = as_system(M)
    rng = np.random.default_rng(cfg.seed)
    q0 = system.sample_domain(rng, cfg.n_samples)
    cps = checkpoint_grid(cfg.n_iters, linear)
    sums, _ = orbit_sums(system, q0, cps)
    return deviations_from_sums(sums, cps, omega, v_H)


# --- basepoint convention -------------------------------------------------------


def basepoint_cells(M: LiftedMap, q: np.ndarray, b: complex):
    """For polygon points q, the deck element k minimising d(q, k.b).

    Returns (homology of k per point, bound 2 max |ab(k)| over candidates).
    Changing the basepoint from the origin to b replaces Psi^n(p) by
    Psi^n(p) + ab(k(q_n)) - ab(k(q_0)).
    """
    G = M.group
    # d(q, k.b) <= d(q, b) forces d(0, k.0) <= 2 circumradius + 2 d(0, b)
    radius = 2 * dist_to_origin(b) + 1e-9
    cands = G.translates_near(radius)
    imgs = np.array([g.apply(b) for _, g in cands])
    ab = np.array([G.abelianize(w) for w, _ in cands])
    d = dist(np.asarray(q)[:, None], imgs[None, :])
    best = d.argmin(axis=1)
    bound = 2 * float(np.max(np.linalg.norm(ab, axis=1)))
    return ab[best], bound


def random_directions(dim: int, k: int, seed: int) -> np.ndarray:
    g = np.random.default_rng(seed).standard_normal((k, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def union_cloud(sums, checkpoints, union_from: int) -> np.ndarray:
    """All Psi^n/n with n >= union_from: the finite stage of the limit of
    closed unions over n >= m that defines the rotation set."""
    rows = [sums[c] / n for c, n in enumerate(checkpoints) if n >= union_from]
    return np.vstack(rows)


def deviation_suite(M, cfg: RotationConfig, n_random: int = 8, linear: int = 64, union_from: int | None = -1):
    """Deviation reports for every axis direction, its negative and
    ``n_random`` random directions, all from one seeded orbit run.

    The hull estimate is the union of Psi^n/n over checkpoints n >= union_from
    of that same run (default n_iters // 64; None keeps only n = n_iters) and
    each omega is its support point in the given direction, so omega is a
    boundary point of the estimate by construction.
    Returns (estimate, list of DeviationReport).
    """
    system = as_system(M)
    rng = np.random.default_rng(cfg.seed)
    q0 = system.sample_domain(rng, cfg.n_samples)
    cps = checkpoint_grid(cfg.n_iters, linear)
    sums, _ = orbit_sums(system, q0, cps)
    return suite_from_sums(sums, cps, q0, cfg, n_random, union_from)


def suite_from_sums(sums, cps, q0, cfg: RotationConfig, n_random: int = 8, union_from: int | None = -1):
    """The body of deviation_suite for an orbit run already in hand."""
    if union_from == -1:
        union_from = max(1, cfg.n_iters // 64)
    cloud = sums[-1] / cfg.n_iters if union_from is None else union_cloud(sums, cps, union_from)
    est = estimate_from_cloud(cloud, cfg.n_iters, cfg.seed, cfg.n_directions, q0)
    dim = sums.shape[-1]
    eye = np.eye(dim)
    dirs = np.vstack([eye, -eye, random_directions(dim, n_random, cfg.seed + 7)])
    reports = []
    for v in dirs:
        omega = est.argmax(v)
        validate_support(est, omega, v)
        reports.append(deviations_from_sums(sums, cps, omega, v))
    return est, reports
