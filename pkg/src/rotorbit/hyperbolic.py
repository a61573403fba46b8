"""Poincare disk arithmetic.

Isometries are stored as real det-1 matrices acting on the upper half-plane H
and transported to the unit disk D by the fixed Cayley map

    H -> D,  w |-> (w - i) / (w + i),

which sends i to the origin, the imaginary axis (oriented 0 -> oo) onto the
real diameter (oriented -1 -> +1) and oo to the boundary point 1.  Disk points
are plain Python/numpy complex numbers; boundary points are angles.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IdentityInput, NotHyperbolic

ALGEBRAIC_TOL = 1e-12
LONG_PRODUCT_TOL = 1e-9
PARABOLIC_BAND = 1e-9

_K = np.array([[1.0, -1j], [1.0, 1j]])
_KINV = np.array([[1j, 1j], [-1.0, 1.0]]) / 2j


class ParabolicWarning(RuntimeWarning):
    """|trace| landed inside the parabolic band around 2."""


def to_half_plane(z):
    """Disk -> upper half-plane."""
    return 1j * (1 + z) / (1 - z)


def to_disk(w):
    """Upper half-plane -> disk."""
    return (w - 1j) / (w + 1j)


def check_disk_point(z) -> complex:
    z = complex(z)
    if not abs(z) < 1.0:
        raise ValueError(f"{z!r} is not inside the unit disk")
    return z


class Isometry:
    """Orientation-preserving isometry, real SL(2) representative on H."""

    __slots__ = ("m",)

    def __init__(self, m, normalize: bool = True):
        m = np.asarray(m)
        m = m.astype(np.longdouble if m.dtype == np.longdouble else float).reshape(2, 2)
        if normalize:
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if not det > 0:
                raise ValueError(f"matrix with det {det} is not orientation preserving")
            m = m / np.sqrt(det)
        self.m = m
        self.m.setflags(write=False)

    @classmethod
    def identity(cls) -> Isometry:
        return cls(np.eye(2), normalize=False)

    @classmethod
    def from_disk(cls, u) -> Isometry:
        """From an SU(1,1)-type complex matrix acting on the disk."""
        m = _KINV @ np.asarray(u, dtype=complex) @ _K
        return cls(m.real)

    @classmethod
    def rotation(cls, angle: float) -> Isometry:
        """Rotation of the disk about the origin, z |-> e^{i angle} z."""
        e = np.exp(0.5j * angle)
        return cls.from_disk([[e, 0], [0, e.conjugate()]])

    @classmethod
    def real_translation(cls, distance: float) -> Isometry:
        """Translation by ``distance`` along the real diameter, toward +1."""
        c, s = math.cosh(distance / 2), math.sinh(distance / 2)
        return cls.from_disk([[c, s], [s, c]])

    @property
    def disk(self) -> np.ndarray:
        return disk_matrix(self.m)

    @property
    def extended(self) -> bool:
        return self.m.dtype == np.longdouble

    @property
    def trace(self) -> float:
        return float(self.m[0, 0] + self.m[1, 1])

    @property
    def det(self) -> float:
        m = self.m
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def __matmul__(self, other: Isometry) -> Isometry:
        return Isometry(self.m @ other.m)

    def to_extended(self) -> Isometry:
        return Isometry(self.m.astype(np.longdouble), normalize=False)

    def inverse(self) -> Isometry:
        (a, b), (c, d) = self.m
        return Isometry([[d, -b], [-c, a]], normalize=False)

    def power(self, n: int) -> Isometry:
        if n < 0:
            return self.inverse().power(-n)
        out = np.eye(2, dtype=self.m.dtype)
        base = self.m
        while n:
            if n & 1:
                out = out @ base
            base = base @ base
            n >>= 1
        return Isometry(out)

    def apply(self, z):
        """Act on disk point(s); extended-precision input keeps its precision."""
        if np.asarray(z).dtype == np.clongdouble or self.extended:
            u = disk_matrix(self.m.astype(np.longdouble))
        else:
            u = self.disk
        return (u[0, 0] * z + u[0, 1]) / (u[1, 0] * z + u[1, 1])

    def apply_half_plane(self, w):
        (a, b), (c, d) = self.m
        return (a * w + b) / (c * w + d)

    def apply_boundary(self, angle):
        z = np.exp(1j * np.asarray(angle, dtype=float))
        return np.mod(np.angle(self.apply(z)), 2 * np.pi)

    def distance_to(self, other: Isometry) -> float:
        """Matrix distance modulo the sign ambiguity of PSL(2,R)."""
        return float(min(np.abs(self.m - other.m).max(), np.abs(self.m + other.m).max()))

    def is_identity(self, tol: float = ALGEBRAIC_TOL) -> bool:
        return self.distance_to(Isometry.identity()) <= tol

    def __repr__(self) -> str:
        return f"Isometry({self.m.tolist()!r})"


def disk_matrix(m):
    """K m K^-1 in closed form, in the precision of m."""
    (a, b), (c, d) = m
    one = np.ones((), dtype=np.result_type(m.dtype, np.complex128))
    i = 1j * one
    return 0.5 * np.array(
        [[(a + d) + i * (b - c), (a - d) - i * (b + c)], [(a - d) + i * (b + c), (a + d) - i * (b - c)]]
    )


def compose(a: Isometry, b: Isometry) -> Isometry:
    """a o b, renormalized to determinant one."""
    return a @ b


class Kind(enum.Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


def classify(g: Isometry, tol: float = ALGEBRAIC_TOL) -> Kind:
    if g.is_identity(tol):
        raise IdentityInput("identity has no classification")
    t = abs(g.trace)
    if t > 2 + PARABOLIC_BAND:
        return Kind.HYPERBOLIC
    if t < 2 - PARABOLIC_BAND:
        return Kind.ELLIPTIC
    warnings.warn(f"|trace| = {t!r} within {PARABOLIC_BAND} of 2", ParabolicWarning, stacklevel=2)
    return Kind.PARABOLIC


def _require_hyperbolic(g: Isometry) -> None:
    if abs(g.trace) <= 2 + PARABOLIC_BAND:
        raise NotHyperbolic(f"|trace| = {abs(g.trace)!r} is not > 2")


def translation_length(g: Isometry) -> float:
    _require_hyperbolic(g)
    return 2.0 * math.acosh(abs(g.trace) / 2.0)


def dist(p, q):
    """Hyperbolic distance in the disk (curvature -1); vectorized."""
    p = np.asarray(p)
    q = np.asarray(q)
    x = np.abs(p - q) / np.abs(1 - np.conj(p) * q)
    x = np.minimum(x, 1.0)
    out = 2 * np.arctanh(x)
    return float(out) if out.ndim == 0 else out


def dist_to_origin(p):
    r = np.minimum(np.abs(np.asarray(p)), 1.0)
    out = 2 * np.arctanh(r)
    return float(out) if out.ndim == 0 else out


class FermiCoords(NamedTuple):
    s: float
    d: float


@dataclass(frozen=True)
class Geodesic:
    """Oriented geodesic from boundary angle ``start`` to ``end``."""

    start: float
    end: float

    def __post_init__(self):
        a = float(self.start) % (2 * math.pi)
        b = float(self.end) % (2 * math.pi)
        if _angle_gap(a, b) < 1e-15:
            raise ValueError("geodesic endpoints coincide")
        object.__setattr__(self, "start", a)
        object.__setattr__(self, "end", b)

    def reversed(self) -> Geodesic:
        return Geodesic(self.end, self.start)

    def same_carrier(self, other: Geodesic, tol: float = 1e-9) -> bool:
        fwd = _angle_gap(self.start, other.start) + _angle_gap(self.end, other.end)
        bwd = _angle_gap(self.start, other.end) + _angle_gap(self.end, other.start)
        return min(fwd, bwd) <= tol

    def same_oriented(self, other: Geodesic, tol: float = 1e-9) -> bool:
        return _angle_gap(self.start, other.start) + _angle_gap(self.end, other.end) <= tol

    def frame(self) -> Isometry:
        """Isometry taking the real diameter (toward +1) onto this geodesic.

        The origin goes to the point of the geodesic closest to the origin,
        which is therefore the zero of the arclength coordinate.
        """
        half = ((self.end - self.start) % (2 * math.pi)) / 2
        mid = self.start + half
        shift = math.atanh(math.cos(half))
        return Isometry.rotation(mid) @ Isometry.real_translation(shift) @ Isometry.rotation(math.pi / 2)

    def map(self, g: Isometry) -> Geodesic:
        a, b = g.apply_boundary([self.start, self.end])
        return Geodesic(float(a), float(b))

    def distance_from_origin(self) -> float:
        half = ((self.end - self.start) % (2 * math.pi)) / 2
        return abs(math.atanh(math.cos(half)))


def _angle_gap(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def axis(g: Isometry) -> Geodesic:
    """Invariant geodesic of a hyperbolic g, oriented repelling -> attracting."""
    _require_hyperbolic(g)
    vals, vecs = np.linalg.eig(g.m)
    order = np.argsort(np.abs(vals))
    ends = []
    for k in order:
        p, q = vecs[:, k].real
        ends.append(float(np.angle((p - 1j * q) / (p + 1j * q))))
    return Geodesic(ends[0], ends[1])


def axial_translation(geo: Geodesic, t: float) -> Isometry:
    """Hyperbolic isometry with axis ``geo`` translating by t along it."""
    f = geo.frame()
    return f @ Isometry.real_translation(t) @ f.inverse()


def fermi_from_half_plane(w):
    """Fermi coordinates relative to the imaginary axis (oriented up)."""
    s = np.log(np.abs(w))
    d = np.arcsinh(-w.real / w.imag)
    return s, d


def half_plane_from_fermi(s, d):
    return np.exp(s) * (-np.tanh(d) + 1j / np.cosh(d))


def to_fermi(p, ref: Geodesic) -> FermiCoords:
    """(arclength, signed normal distance); positive d is left of travel."""
    f = ref.frame()
    w = f.inverse().apply_half_plane(to_half_plane(np.asarray(p, dtype=complex)))
    s, d = fermi_from_half_plane(w)
    return FermiCoords(float(s), float(d))


def from_fermi(coords, ref: Geodesic) -> complex:
    s, d = coords
    w = ref.frame().apply_half_plane(half_plane_from_fermi(s, d))
    return complex(to_disk(w))


def geodesic_distance(g1: Geodesic, g2: Geodesic) -> float:
    """Distance between two geodesics; 0 if they cross or share an endpoint."""
    f = g1.frame().inverse()
    x, y = (_boundary_to_real(a, f) for a in (g2.start, g2.end))
    if not (np.isfinite(x) and np.isfinite(y)) or x == 0 or y == 0:
        return 0.0
    if x * y < 0:
        return 0.0
    return float(math.asinh(2 * math.sqrt(x * y) / abs(y - x)))


def _boundary_to_real(angle: float, g: Isometry) -> float:
    """Image of a boundary point under g, as a point of R u {oo} on dH."""
    z = np.exp(1j * angle)
    u = g.disk
    num = u[0, 0] * z + u[0, 1]
    den = u[1, 0] * z + u[1, 1]
    zz = num / den
    if abs(1 - zz) < 1e-15:
        return math.inf
    return float((1j * (1 + zz) / (1 - zz)).real)
