import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorbit.errors import IdentityInput
from rotorbit.hyperbolic import (
    Isometry,
    Kind,
    ParabolicWarning,
    axial_translation,
    axis,
    classify,
    disk_matrix,
    dist,
    dist_to_origin,
    from_fermi,
    geodesic_distance,
    to_disk,
    to_fermi,
    to_half_plane,
    translation_length,
)

radius = st.floats(0.0, 0.95)
angle = st.floats(-math.pi, math.pi)


def disk_point(r, t):
    return r * complex(math.cos(t), math.sin(t))


def random_isometry(rng):
    m = rng.normal(size=(2, 2))
    if np.linalg.det(m) < 0:
        m[0] *= -1
    return Isometry(m)


@given(radius, angle)
def test_cayley_round_trip(r, t):
    z = disk_point(r, t)
    assert abs(to_disk(to_half_plane(z)) - z) < 1e-12


@given(radius, angle)
def test_dist_to_origin_closed_form(r, t):
    z = disk_point(r, t)
    assert math.isclose(dist_to_origin(z), 2 * math.atanh(r), abs_tol=1e-9)


def test_isometries_preserve_distance():
    rng = np.random.default_rng(1)
    for _ in range(50):
        g = random_isometry(rng)
        p, q = (disk_point(0.9 * rng.random(), rng.uniform(-3, 3)) for _ in range(2))
        assert math.isclose(dist(g.apply(p), g.apply(q)), dist(p, q), rel_tol=1e-8, abs_tol=1e-9)


def test_disk_matrix_matches_half_plane_action():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = random_isometry(rng)
        z = disk_point(0.7 * rng.random(), rng.uniform(-3, 3))
        (a, b), (c, d) = disk_matrix(g.m)
        via_disk = (a * z + b) / (c * z + d)
        via_half = to_disk(g.apply_half_plane(to_half_plane(z)))
        assert abs(via_disk - via_half) < 1e-10


def test_extended_apply_agrees():
    g = Isometry.real_translation(1.3) @ Isometry.rotation(0.4)
    z = 0.3 + 0.2j
    assert abs(complex(g.to_extended().apply(np.clongdouble(z))) - g.apply(z)) < 1e-14


def test_classification():
    with pytest.raises(IdentityInput):
        classify(Isometry.identity())
    assert classify(Isometry.rotation(0.7)) is Kind.ELLIPTIC
    assert classify(Isometry.real_translation(1.0)) is Kind.HYPERBOLIC
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always", ParabolicWarning)
        assert classify(Isometry(np.array([[1.0, 1.0], [0.0, 1.0]]))) is Kind.PARABOLIC


@given(st.floats(0.05, 8.0))
def test_translation_length_of_real_translation(L):
    assert math.isclose(translation_length(Isometry.real_translation(L)), L, rel_tol=1e-9)


def test_axis_is_invariant_and_translated_by_length():
    g = Isometry.rotation(0.3) @ Isometry.real_translation(2.1) @ Isometry.rotation(-1.0)
    geo = axis(g)
    assert geo.same_carrier(geo.map(g))
    p = from_fermi((0.4, 0.0), geo)
    fc = to_fermi(g.apply(p), geo)
    assert abs(fc.d) < 1e-9
    assert math.isclose(fc.s - 0.4, translation_length(g), rel_tol=1e-9)


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(-2, 2))
def test_fermi_round_trip(s, d):
    geo = axis(Isometry.rotation(1.1) @ Isometry.real_translation(1.5) @ Isometry.rotation(-0.2))
    p = from_fermi((s, d), geo)
    fc = to_fermi(p, geo)
    assert math.isclose(fc.s, s, abs_tol=1e-8)
    assert math.isclose(fc.d, d, abs_tol=1e-8)


def test_axial_translation_moves_along_axis():
    geo = axis(Isometry.real_translation(1.0))
    t = axial_translation(geo, 0.75)
    p = from_fermi((0.1, 0.3), geo)
    fc = to_fermi(t.apply(p), geo)
    assert math.isclose(fc.s, 0.85, abs_tol=1e-9)
    assert math.isclose(fc.d, 0.3, abs_tol=1e-9)


def test_geodesic_distance_between_ultraparallel_axes():
    # two axes through i*e^{+-c}-symmetric configuration: the imaginary axis and
    # its image under a translation perpendicular to it
    g1 = Isometry.real_translation(1.0)
    a1 = axis(g1)
    shift = Isometry.rotation(math.pi / 2) @ Isometry.real_translation(1.7) @ Isometry.rotation(-math.pi / 2)
    a2 = a1.map(shift)
    assert math.isclose(geodesic_distance(a1, a2), 1.7, rel_tol=1e-8)


def test_non_orientation_preserving_rejected():
    with pytest.raises(ValueError):
        Isometry(np.array([[1.0, 0.0], [0.0, -1.0]]))
