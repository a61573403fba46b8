"""Closed geodesics, their lifts, arrangements and the filling test.

A closed geodesic on S is represented by its axis in D together with the
fundamental segment [0, length) measured in the axis frame (s = 0 is the point
of the axis closest to the origin).  Every point where two geodesics cross on S
has exactly one lift on the fundamental segment of each branch, which is how
intersections are counted without duplication.

Lifts of a geodesic near a compact set are found by walking the fundamental
segment through the tiling: if the segment is sampled every ``step`` and
sample y lies in tile k.P, every point of the segment is within step/2 of some
such tile, so every lift meeting B(0, r) is e.k^-1.axis with
d(0, e.0) <= r + circumradius + step/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateCurve, NoIntersections, NotHyperbolic, TangencyDetected, TrivialWord
from .group import GroupWord, SurfaceGroup
from .hyperbolic import (
    Geodesic,
    Isometry,
    axis,
    dist_to_origin,
    to_disk,
    to_fermi,
    translation_length,
)

TANGENCY_TOL = 1e-6
SAMPLE_STEP = 0.25
DEDUP_TOL = 1e-7


@dataclass(frozen=True)
class CurveClass:
    word: GroupWord
    element: Isometry = field(repr=False)
    geodesic: Geodesic
    length: float

    def point_at(self, s):
        f = self.geodesic.frame()
        return to_disk(f.apply_half_plane(1j * np.exp(np.asarray(s, dtype=float))))


def geodesic_of(word, G: SurfaceGroup) -> CurveClass:
    if isinstance(word, str):
        word = GroupWord.parse(word)
    if len(word) == 0:
        raise TrivialWord("the empty word has no geodesic")
    g = G.evaluate(word)
    if abs(g.trace) <= 2 + 1e-9:
        raise NotHyperbolic(f"evaluate({word}) has |trace| {abs(g.trace)!r}")
    return CurveClass(word, g, axis(g), translation_length(g))


@dataclass(frozen=True)
class ExtendedLift:
    """The lift conj.axis(base) of a closed geodesic."""

    base: CurveClass
    conj: GroupWord
    element: Isometry = field(repr=False)
    geodesic: Geodesic

    def same_as(self, other: ExtendedLift, tol: float = 1e-9) -> bool:
        return self.geodesic.same_carrier(other.geodesic, tol)


def segment_tiles(curve: CurveClass, G: SurfaceGroup, step: float = SAMPLE_STEP):
    """Tiles (word, element) met by samples of the fundamental segment."""
    n = max(2, int(math.ceil(curve.length / step)) + 1)
    pts = curve.point_at(np.linspace(0.0, curve.length, n))
    seen = {}
    for p in pts:
        _, w = G.reduce_to_domain(p)
        g = G.evaluate(w)
        key = _point_key(g.apply(0j))
        seen.setdefault(key, (w, g))
    return list(seen.values())


def _point_key(z, digits=7):
    return (round(z.real, digits), round(z.imag, digits))


def lifts_meeting_ball(curve: CurveClass, G: SurfaceGroup, r: float, step: float = SAMPLE_STEP):
    """All lifts of ``curve`` at distance <= r from the origin."""
    radius = max(0.0, r + G.domain.circumradius + step / 2 - G.domain.diameter)
    near = G.translates_near(radius)
    tiles = segment_tiles(curve, G, step)
    out = []
    for kw, k in tiles:
        kinv = k.inverse()
        base = curve.geodesic.map(kinv)
        for ew, e in near:
            geo = base.map(e)
            if geo.distance_from_origin() > r + 1e-12:
                continue
            if any(geo.same_carrier(o.geodesic, 1e-9) for o in out):
                continue
            out.append(ExtendedLift(curve, ew * kw.inverse(), e @ kinv, geo))
    return out


@dataclass(frozen=True)
class Crossing:
    """A transverse crossing of two branches, lifted to the first curve's segment.

    ``point`` lies on the fundamental segment of ``first`` at arclength s1.
    ``deck2`` carries it to the fundamental segment of ``second`` (arclength
    s2).  Angles are Euclidean tangent directions in the disk at ``point``.
    """

    first: int
    second: int
    point: complex
    s1: float
    s2: float
    angle1: float
    angle2: float
    deck2: Isometry = field(repr=False)
    crossing_angle: float


def _tangent_angle(frame: Isometry, w: complex, v: complex) -> float:
    """Disk direction of the H-vector v at w, pushed forward by frame then Cayley."""
    (a, b), (c, d) = frame.m
    u = (a * w + b) / (c * w + d)
    dF = 1 / (c * w + d) ** 2
    dK = 2j / (u + 1j) ** 2
    return float(np.angle(v * dF * dK))


def _crossings_on_segment(c1: CurveClass, c2: CurveClass, G: SurfaceGroup, same: bool, step: float):
    frame1 = c1.geodesic.frame()
    finv = frame1.inverse()
    lifts2 = lifts_meeting_ball(c2, G, G.domain.circumradius + step / 2, step)
    tiles = segment_tiles(c1, G, step)
    seen = []
    found = []
    for _, k in tiles:
        for lift in lifts2:
            geo = lift.geodesic.map(k)
            if any(geo.same_carrier(o, 1e-9) for o in seen):
                continue
            seen.append(geo)
            if geo.same_carrier(c1.geodesic, 1e-9):
                if same:
                    continue
                raise DuplicateCurve(f"{c1.word} and {c2.word} are the same closed geodesic")
            x, y = (finv.apply_half_plane(to_half(geo_pt)) for geo_pt in (geo.start, geo.end))
            x, y = x.real, y.real
            if not (np.isfinite(x) and np.isfinite(y)) or x * y >= 0:
                continue
            t = math.sqrt(-x * y)
            s1 = math.log(t)
            if not 0.0 <= s1 < c1.length:
                continue
            centre, rad = (x + y) / 2, abs(y - x) / 2
            cross = math.acos(min(1.0, abs(centre) / rad))
            if cross < TANGENCY_TOL:
                raise TangencyDetected(f"{c1.word} and {c2.word} meet at angle {cross:.3g}")
            w = 1j * t
            v1 = 1j
            v2 = complex(t, centre) if x < y else complex(-t, -centre)
            h = k @ lift.element
            p = complex(to_disk(frame1.apply_half_plane(w)))
            back = h.inverse().apply(p)
            s2 = to_fermi(back, c2.geodesic).s
            m = -math.floor(s2 / c2.length)
            s2 += m * c2.length
            if s2 >= c2.length:
                s2 -= c2.length
                m -= 1
            deck2 = c2.element.power(m) @ h.inverse()
            found.append(
                Crossing(-1, -1, p, s1, s2, _tangent_angle(frame1, w, v1), _tangent_angle(frame1, w, v2), deck2, cross)
            )
    return found


def to_half(angle: float) -> complex:
    """Boundary angle as a point of the extended real line (complex, may be inf)."""
    z = complex(math.cos(angle), math.sin(angle))
    if abs(1 - z) < 1e-15:
        return complex(math.inf, 0)
    return 1j * (1 + z) / (1 - z)


def intersections(c1: CurveClass, c2: CurveClass, G: SurfaceGroup, step: float = SAMPLE_STEP):
    """Transverse intersection points of two closed geodesics on S.

    Self-intersections are returned when c1 and c2 are the same curve; each
    double point then appears once.  Points are listed on c1's segment.
    """
    same = c1.word == c2.word
    found = _crossings_on_segment(c1, c2, G, same, step)
    out = []
    for c in found:
        if same and not c.s1 < c.s2:
            continue
        if any(abs(c.s1 - o.s1) < DEDUP_TOL and abs(c.s2 - o.s2) < DEDUP_TOL for o in out):
            continue
        out.append(c)
    out.sort(key=lambda c: (c.s1, c.s2))
    return out


# --- arrangement ------------------------------------------------------------


@dataclass(frozen=True)
class Occurrence:
    curve: int
    s: float
    vertex: int
    angle: float
    deck: Isometry = field(repr=False)  # carries the vertex's canonical lift onto the curve's segment


@dataclass(frozen=True)
class Edge:
    curve: int
    tail: int  # occurrence index
    head: int
    transition: Isometry = field(repr=False)


@dataclass
class Arrangement:
    curves: list
    points: list  # canonical lift of each vertex (on the first branch's segment)
    reduced: list  # the same vertices reduced into the fundamental polygon
    occurrences: list
    edges: list
    rotation: dict  # vertex -> darts in counterclockwise order
    lonely: list  # indices of curves without any vertex

    @property
    def V(self) -> int:
        return len(self.points)

    @property
    def E(self) -> int:
        return len(self.edges)

    def darts(self):
        """Dart (e, +1) leaves the tail occurrence, (e, -1) enters the head."""
        out = []
        for e in range(len(self.edges)):
            out += [(e, 1), (e, -1)]
        return out

    def dart_vertex(self, d) -> int:
        e = self.edges[d[0]]
        occ = e.tail if d[1] > 0 else e.head
        return self.occurrences[occ].vertex

    def dart_angle(self, d) -> float:
        e = self.edges[d[0]]
        if d[1] > 0:
            return self.occurrences[e.tail].angle
        return self.occurrences[e.head].angle + math.pi


def check_distinct(curves, G: SurfaceGroup) -> None:
    """Reject repeated or freely homotopic curves (either orientation)."""
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            for lift in lifts_meeting_ball(curves[j], G, curves[i].geodesic.distance_from_origin() + 1e-6):
                if lift.geodesic.same_carrier(curves[i].geodesic, 1e-9):
                    raise DuplicateCurve(f"curves {curves[i].word} and {curves[j].word} coincide on S")


def build_arrangement(curves, G: SurfaceGroup, step: float = SAMPLE_STEP, allow_empty: bool = False) -> Arrangement:
    curves = list(curves)
    check_distinct(curves, G)
    points, occs = [], []
    for i, ci in enumerate(curves):
        for j in range(i, len(curves)):
            for c in intersections(ci, curves[j], G, step):
                v = len(points)
                points.append(c.point)
                occs.append(Occurrence(i, c.s1, v, c.angle1, Isometry.identity()))
                occs.append(Occurrence(j, c.s2, v, c.angle2, c.deck2))
    if not points and not allow_empty:
        raise NoIntersections("curve system has no intersection points")
    edges = []
    lonely = []
    for ci, curve in enumerate(curves):
        mine = sorted((k for k, o in enumerate(occs) if o.curve == ci), key=lambda k: occs[k].s)
        if not mine:
            lonely.append(ci)
            continue
        for a, b in zip(mine, mine[1:] + mine[:1]):
            ka, kb = occs[a].deck, occs[b].deck
            if b == mine[0]:
                kb = curve.element @ kb
            edges.append(Edge(ci, a, b, ka.inverse() @ kb))
    arr = Arrangement(curves, points, [G.reduce_to_domain(p)[0] for p in points], occs, edges, {}, lonely)
    rotation = {}
    for d in arr.darts():
        rotation.setdefault(arr.dart_vertex(d), []).append(d)
    for v, ds in rotation.items():
        angles = [arr.dart_angle(d) % (2 * math.pi) for d in ds]
        order = np.argsort(angles)
        srt = sorted(angles)
        gaps = np.diff(srt + [srt[0] + 2 * math.pi])
        if len(ds) != 4:
            raise TangencyDetected(f"vertex {v} has valence {len(ds)}; only transverse double points are supported")
        if gaps.min() < TANGENCY_TOL:
            raise TangencyDetected(f"branches at vertex {v} are tangent")
        rotation[v] = [ds[k] for k in order]
    arr.rotation = rotation
    return arr


def trace_faces(darts, vertex_of, rotation):
    """Orbits of d -> sigma(alpha(d)) with alpha reversing the edge and sigma
    the counterclockwise successor around the vertex."""
    succ = {}
    for ds in rotation.values():
        for k, d in enumerate(ds):
            succ[d] = ds[(k + 1) % len(ds)]
    faces = []
    seen = set()
    for d0 in darts:
        if d0 in seen:
            continue
        face = []
        d = d0
        while d not in seen:
            seen.add(d)
            face.append(d)
            d = succ[(d[0], -d[1])]
        faces.append(face)
    return faces


@dataclass
class FillingReport:
    is_filling: bool
    V: int
    E: int
    F: int
    euler: int
    genus: int
    connected: bool
    witnesses: list
    face_degrees: list

    def to_dict(self) -> dict:
        return {
            "is_filling": self.is_filling,
            "V": self.V,
            "E": self.E,
            "F": self.F,
            "euler": self.euler,
            "expected_euler": 2 - 2 * self.genus,
            "connected": self.connected,
            "witnesses": list(self.witnesses),
            "face_degrees": list(self.face_degrees),
        }


def _connected(arr: Arrangement) -> bool:
    if arr.lonely:
        return False
    parent = list(range(arr.V))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in arr.edges:
        a = find(arr.occurrences[e.tail].vertex)
        b = find(arr.occurrences[e.head].vertex)
        parent[a] = b
    return len({find(v) for v in range(arr.V)}) == 1


def _face_closes(arr: Arrangement, face, tol: float = 1e-7) -> bool:
    g = Isometry.identity()
    for e, sign in face:
        t = arr.edges[e].transition
        g = g @ (t if sign > 0 else t.inverse())
    return g.is_identity(tol)


def filling_check(curves, G: SurfaceGroup, step: float = SAMPLE_STEP) -> FillingReport:
    """Cellular-embedding test: connected graph with V - E + F = 2 - 2g."""
    arr = build_arrangement(curves, G, step, allow_empty=True)
    if arr.V == 0:
        return FillingReport(False, 0, 0, 0, 0, G.genus, False, [], [])
    faces = trace_faces(arr.darts(), arr.dart_vertex, arr.rotation)
    euler = arr.V - arr.E + len(faces)
    connected = _connected(arr)
    witnesses = [k for k, f in enumerate(faces) if not _face_closes(arr, f)]
    return FillingReport(
        connected and euler == 2 - 2 * G.genus,
        arr.V,
        arr.E,
        len(faces),
        euler,
        G.genus,
        connected,
        witnesses,
        [len(f) for f in faces],
    )


def lifted_union_connected(curves, G: SurfaceGroup, step: float = SAMPLE_STEP) -> bool:
    """Whether the full preimage of the curve union is connected with bounded
    complementary pieces.

    Decided without the Euler count: the graph on S must be connected and
    every face boundary walk must close up in the universal cover (its deck
    holonomy is trivial), which is what makes each face a disk.
    """
    arr = build_arrangement(curves, G, step, allow_empty=True)
    if arr.V == 0 or not _connected(arr):
        return False
    faces = trace_faces(arr.darts(), arr.dart_vertex, arr.rotation)
    return all(_face_closes(arr, f) for f in faces)


# --- flat torus baseline ------------------------------------------------------


def torus_filling(lines):
    """Face count for straight closed lines on the flat torus.

    ``lines`` is a list of (offset (x, y), primitive integer direction (p, q)).
    Returns (V, E, F, euler, faces close up).
    """
    occs = []  # (line, t, vertex, angle, lattice shift)
    V = 0
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            (oi, ui), (oj, uj) = lines[i], lines[j]
            det = ui[0] * uj[1] - ui[1] * uj[0]
            if det == 0:
                continue
            box = abs(ui[0]) + abs(ui[1]) + abs(uj[0]) + abs(uj[1]) + 2
            seen = set()
            for nx in range(-box, box + 1):
                for ny in range(-box, box + 1):
                    rx = oj[0] - oi[0] + nx
                    ry = oj[1] - oi[1] + ny
                    t = (rx * uj[1] - ry * uj[0]) / det
                    s = (rx * ui[1] - ry * ui[0]) / det
                    if not (0 <= t < 1 and 0 <= s < 1):
                        continue
                    key = (round(t, 12), round(s, 12))
                    if key in seen:
                        continue
                    seen.add(key)
                    occs.append((i, t, V, math.atan2(ui[1], ui[0]), (0, 0)))
                    occs.append((j, s, V, math.atan2(uj[1], uj[0]), (-nx, -ny)))
                    V += 1
    edges = []
    for li, (_, u) in enumerate(lines):
        mine = sorted((k for k, o in enumerate(occs) if o[0] == li), key=lambda k: occs[k][1])
        for a, b in zip(mine, mine[1:] + mine[:1]):
            sa, sb = occs[a][4], occs[b][4]
            wrap = u if b == mine[0] else (0, 0)
            edges.append((a, b, (sb[0] + wrap[0] - sa[0], sb[1] + wrap[1] - sa[1])))
    darts = [(e, s) for e in range(len(edges)) for s in (1, -1)]

    def vertex_of(d):
        a, b, _ = edges[d[0]]
        return occs[a if d[1] > 0 else b][2]

    def angle_of(d):
        a, b, _ = edges[d[0]]
        return occs[a][3] if d[1] > 0 else occs[b][3] + math.pi

    rotation = {}
    for d in darts:
        rotation.setdefault(vertex_of(d), []).append(d)
    for v in rotation:
        rotation[v].sort(key=lambda d: angle_of(d) % (2 * math.pi))
    faces = trace_faces(darts, vertex_of, rotation)
    closes = all(
        sum(edges[e][2][0] * s for e, s in f) == 0 and sum(edges[e][2][1] * s for e, s in f) == 0 for f in faces
    )
    return V, len(edges), len(faces), V - len(edges) + len(faces), closes
