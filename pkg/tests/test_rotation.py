import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorbit.curves import geodesic_of
from rotorbit.errors import NotSupporting
from rotorbit.rotation import (
    RotationConfig,
    affine_rank,
    basepoint_cells,
    checkpoint_grid,
    deviation_stat,
    displacement_class,
    distance_to_hull,
    estimate_from_cloud,
    hausdorff,
    hull_dimension,
    hull_vertices,
    measure_vector_lebesgue,
    mz_estimate,
    orbit_sums,
    rotation_vector,
    validate_support,
)
from rotorbit.zoo import MapSpec, Profile, ShearSpec, TorusMapSpec, TorusSystem, build_map

SEGMENT = np.array([[0.0, 0.0], [1.0, 0.0]])


def cosine_shear():
    return TorusSystem(TorusMapSpec(Profile("cosine", 1.0), Profile()))


def test_checkpoint_grid():
    assert checkpoint_grid(10) == [1, 2, 4, 8, 10]
    g = checkpoint_grid(100, linear=5)
    assert g[0] == 1 and g[-1] == 100 and g == sorted(set(g))


def test_affine_rank():
    assert affine_rank(np.zeros((3, 4))) == 0
    assert affine_rank(np.array([[0, 0], [1, 1], [2, 2.0]])) == 1
    assert affine_rank(np.eye(4)) == 3
    assert affine_rank(np.vstack([np.eye(4), np.zeros(4)])) == 4


def test_hull_of_cube_corners_and_interior():
    corners = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=float)
    pts = np.vstack([corners, np.random.default_rng(0).random((50, 3))])
    verts, eqs = hull_vertices(pts)
    assert len(verts) == 8 and eqs is not None


def test_lower_dimensional_hull():
    pts = np.array([[0, 0, 0], [1, 1, 0], [0.5, 0.5, 0], [2, 2, 0.0]])
    verts, eqs = hull_vertices(pts)
    assert eqs is None
    assert sorted(map(tuple, verts)) == [(0, 0, 0), (2, 2, 0)]


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_distance_to_segment(x, y):
    d = distance_to_hull(np.array([x, y]), SEGMENT)
    cx = min(max(x, 0.0), 1.0)
    assert math.isclose(d, math.hypot(x - cx, y), abs_tol=1e-6)


def test_hausdorff_between_segments():
    assert hausdorff(SEGMENT, SEGMENT) < 1e-9
    assert math.isclose(hausdorff(SEGMENT, np.array([[0, 0.0], [1.2, 0]])), 0.2, abs_tol=1e-6)
    assert math.isclose(hausdorff(SEGMENT, SEGMENT + [0, 0.3]), 0.3, abs_tol=1e-6)


def test_torus_single_shear_rotation_vectors():
    sysm = cosine_shear()
    for y in (0.0, 0.25, 0.5, 0.8):
        v, diag = rotation_vector(sysm, np.array([0.3, y]), 400)
        phi = (1 - math.cos(2 * math.pi * y)) / 2
        assert abs(v[0] - phi) <= 1 / 400 + 1e-12
        assert v[1] == 0


def test_torus_pipeline_recovers_segment():
    est = mz_estimate(cosine_shear(), RotationConfig(n_iters=1000, n_samples=2000, seed=3))
    assert hull_dimension(est) == 1
    assert hausdorff(est.vertices, SEGMENT) <= 0.05


def test_torus_rectangle_from_two_plateau_shears():
    # with flat pieces at 0 and at full amplitude, fixed points and (1,0), (0,1)
    # and (1,1) translations all occur, so the rotation set is the unit square
    spec = TorusMapSpec(Profile("plateau", 1.0, 0.25), Profile("plateau", 1.0, 0.25))
    est = mz_estimate(TorusSystem(spec), RotationConfig(n_iters=400, n_samples=4000, seed=1))
    square = np.array([[0, 0], [1, 0], [0, 1], [1, 1.0]])
    assert hausdorff(est.vertices, square) <= 0.05


def test_torus_deviation_along_support_direction_is_bounded():
    sysm = cosine_shear()
    cfg = RotationConfig(n_iters=2000, n_samples=300, seed=0)
    rep = deviation_stat(sysm, cfg, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    # horizontal displacement is at most n * max phi, up to the cell rounding
    assert rep.maximum <= 1.0
    assert not rep.flagged


def test_validate_support_rejects_interior_omega():
    sysm = cosine_shear()
    est = mz_estimate(sysm, RotationConfig(n_iters=200, n_samples=500, seed=0))
    with pytest.raises(NotSupporting):
        validate_support(est, np.array([0.5, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(NotSupporting):
        validate_support(est, est.argmax([1.0, 0.0]), np.array([2.0, 0.0]))


def test_lebesgue_vector_of_torus_shear():
    mean, radius = measure_vector_lebesgue(cosine_shear(), RotationConfig(n_samples=20000, seed=0))
    # mean horizontal step is the average of phi, 1/2, seen through integer increments
    assert abs(mean[0] - 0.5) < radius + 0.01 and mean[1] == 0


def test_surface_core_point_rotation_vector(G2):
    c = geodesic_of("a1 a2", G2)
    M = build_map(MapSpec((ShearSpec(c, width=0.3),)), G2, certify=False)
    p = c.point_at(0.2)
    ab = G2.abelianize(c.word)
    n = 50
    psi = displacement_class(M, p, n)
    # basepoint convention moves Psi^n by at most the cell bound
    _, bound = basepoint_cells(M, np.array([0j]), 0.3 + 0.1j)
    assert np.linalg.norm(psi - n * ab) <= 2 + bound
    v, diag = rotation_vector(M, p, 400)
    assert np.linalg.norm(v - ab) < 0.05


def test_orbit_sums_consistent_with_steps(chain_map, G2):
    q0 = G2.sample_area_uniform(np.random.default_rng(0), 20)
    sums, q = orbit_sums(chain_map, q0, [3, 7])
    qq, total = q0, np.zeros((20, 4), dtype=np.int64)
    for _ in range(7):
        qq, inc = chain_map.step(qq)
        total += inc
    assert np.array_equal(sums[1], total)
    assert np.allclose(q, qq)


def test_estimate_from_cloud_support_function():
    cloud = np.random.default_rng(0).random((500, 3))
    est = estimate_from_cloud(cloud, 10, seed=0, n_directions=64)
    for v in est.directions[:10]:
        assert math.isclose(est.support_fn(v), float(np.max(est.vertices @ v)), rel_tol=1e-12)
    assert est.margin(np.full(3, 0.5)) > 0


def test_additivity_of_displacement(chain_map, G2):
    q0 = G2.sample_area_uniform(np.random.default_rng(8), 30)
    m, n = 5, 9
    whole, _ = orbit_sums(chain_map, q0, [m + n])
    first, qm = orbit_sums(chain_map, q0, [m])
    second, _ = orbit_sums(chain_map, qm, [n])
    assert np.array_equal(whole[0], first[0] + second[0])


def test_identity_map_has_zero_rotation(G2):
    M = build_map(MapSpec(()), G2, certify=False)
    est = mz_estimate(M, RotationConfig(n_iters=5, n_samples=20))
    assert np.all(est.cloud == 0) and hull_dimension(est) == 0
    v, diag = rotation_vector(M, 0.1 + 0.1j, 8)
    assert not v.any() and diag["cauchy_gap"] == 0


def test_point_outside_strips_is_fixed(G2):
    c = geodesic_of("a1", G2)
    M = build_map(MapSpec((ShearSpec(c, width=0.05),)), G2, certify=False)
    v, diag = rotation_vector(M, 0j, 16)
    assert not v.any() and diag["cauchy_gap"] == 0


def test_symmetric_two_way_shear_has_zero_lebesgue_vector(G2):
    from rotorbit.zoo import two_way_shears

    M = build_map(two_way_shears(["a1"], G2, width=0.15, side_offset=0.2), G2, certify=False)
    mean, radius = measure_vector_lebesgue(M, RotationConfig(n_samples=4000, seed=2))
    assert np.linalg.norm(mean) <= radius


def test_basepoint_change_moves_cloud_by_bounded_amount(chain_map, G2):
    n = 64
    rng = np.random.default_rng(9)
    q0 = G2.sample_area_uniform(rng, 100)
    sums, qn = orbit_sums(chain_map, q0, [n])
    b = 0.25 - 0.1j
    k0, bound = basepoint_cells(chain_map, q0, b)
    kn, _ = basepoint_cells(chain_map, qn, b)
    moved = sums[0] + kn - k0
    diff = np.linalg.norm(moved - sums[0], axis=1)
    assert np.all(diff <= bound)
    assert np.all(np.linalg.norm(moved / n - sums[0] / n, axis=1) <= bound / n)
