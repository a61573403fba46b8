import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorbit.errors import BadIndex, UnsupportedGenus
from rotorbit.group import GroupWord, abelianize, dehn_reduce, relator, standard_group
from rotorbit.hyperbolic import dist, dist_to_origin

letters2 = st.lists(st.tuples(st.integers(1, 4), st.sampled_from([1, -1])), max_size=12)


@pytest.mark.parametrize("genus", [2, 3, 4])
def test_relator_and_area(genus):
    G = standard_group(genus)
    assert G.relator_residual() <= 1e-9
    assert abs(G.domain.area() - 4 * math.pi * (genus - 1)) <= 1e-6


@pytest.mark.parametrize("genus", [2, 3])
def test_interior_angles_sum_to_two_pi(genus):
    G = standard_group(genus)
    assert math.isclose(sum(G.domain.interior_angles()), 2 * math.pi, rel_tol=1e-9)


def test_genus_one_rejected():
    with pytest.raises(UnsupportedGenus):
        standard_group(1)


def test_bad_generator_index(G2):
    with pytest.raises(BadIndex):
        G2.generator(5)
    with pytest.raises(BadIndex):
        G2.abelianize(GroupWord.parse("a3"))


@given(letters2)
def test_word_string_round_trip(lts):
    w = GroupWord(tuple(lts))
    assert GroupWord.parse(str(w)) == w


def test_parse_and_free_reduction():
    assert str(GroupWord.parse("a1 B1 b1 a2")) == "a1 a2"
    assert len(GroupWord.parse("")) == 0
    with pytest.raises(ValueError):
        GroupWord.parse("c1")


@given(letters2, letters2)
def test_abelianize_is_a_homomorphism(x, y):
    u, v = GroupWord(tuple(x)), GroupWord(tuple(y))
    assert np.array_equal(abelianize(u * v, 2), abelianize(u, 2) + abelianize(v, 2))
    assert np.array_equal(abelianize(u.inverse(), 2), -abelianize(u, 2))


def test_relator_abelianizes_to_zero():
    for g in (2, 3, 4):
        assert not abelianize(relator(g), g).any()


@settings(max_examples=60, deadline=None)
@given(letters2)
def test_dehn_reduce_preserves_element(lts):
    G = standard_group(2)
    w = GroupWord(tuple(lts))
    r = dehn_reduce(w, 2)
    assert len(r) <= len(w)
    assert G.evaluate(r).distance_to(G.evaluate(w)) < 1e-6 * max(1.0, abs(G.evaluate(w).trace))


def test_dehn_reduce_kills_relator_conjugates():
    r = relator(2)
    h = GroupWord.parse("a1 b2 A2")
    assert len(dehn_reduce(h * r * h.inverse(), 2)) == 0
    assert len(dehn_reduce(r * r.inverse() * r, 2)) == 0


def test_reduce_round_trip(G2):
    rng = np.random.default_rng(0)
    for _ in range(200):
        z = 0.999 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        q, w = G2.reduce_to_domain(z)
        assert G2.in_domain(q, tol=1e-9)
        assert dist(G2.evaluate(w).apply(q), z) < 1e-8


def test_reduce_many_matches_scalar(G2):
    rng = np.random.default_rng(1)
    z = 0.99 * np.sqrt(rng.random(300)) * np.exp(2j * np.pi * rng.random(300))
    q, inc, mats, words = G2.reduce_many(z, elements=True, words=True)
    for k in range(z.size):
        q1, w1 = G2.reduce_to_domain(z[k])
        assert abs(q1 - q[k]) < 1e-9
        assert np.array_equal(G2.abelianize(w1), inc[k])
        assert words[k] == w1
        assert dist(G2.evaluate(words[k]).apply(q[k]), z[k]) < 1e-8


def test_reduction_is_equivariant(G2):
    rng = np.random.default_rng(2)
    g = G2.evaluate(GroupWord.parse("a1 b2"))
    for _ in range(50):
        z = G2.sample_area_uniform(rng, 1)[0]
        q1, _ = G2.reduce_to_domain(z)
        q2, _ = G2.reduce_to_domain(g.apply(z))
        assert abs(q1 - q2) < 1e-9


def _brute_force_orbit(G, threshold, max_len):
    pts = []
    gens = [(i, e) for i in range(1, 2 * G.genus + 1) for e in (1, -1)]
    frontier = [GroupWord()]
    seen = {GroupWord()}
    for _ in range(max_len + 1):
        nxt = []
        for w in frontier:
            p = G.evaluate(w).apply(0j)
            if dist_to_origin(p) <= threshold + 1e-9:
                pts.append(p)
            for lt in gens:
                u = w * GroupWord((lt,))
                if len(u) == len(w) + 1 and u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    uniq = []
    for p in pts:
        if all(dist(p, q) > 1e-6 for q in uniq):
            uniq.append(p)
    return uniq


def test_translates_near_matches_word_enumeration(G2):
    threshold = G2.domain.diameter
    oracle = _brute_force_orbit(G2, threshold, 5)
    found = [g.apply(0j) for _, g in G2.translates_near(0.0)]
    assert len(found) == len(oracle) == 49
    for p in oracle:
        assert min(dist(p, q) for q in found) < 1e-6


def test_translates_near_counts(G2):
    assert len(G2.translates_near(1.0)) == 81


def test_area_uniform_sampler(G2):
    rng = np.random.default_rng(3)
    z = G2.sample_area_uniform(rng, 4000)
    assert G2.in_domain(z).all()
    # area of {d(0, p) <= r} inside the polygon equals 2 pi (cosh r - 1) when r <= inradius
    r = G2.domain.inradius
    frac = np.mean(dist_to_origin(z) <= r)
    expected = 2 * math.pi * (math.cosh(r) - 1) / G2.domain.area()
    assert abs(frac - expected) < 4 * math.sqrt(expected * (1 - expected) / z.size)


def test_side_pairings_glue_sides(G2):
    verts = G2.domain.vertices
    n = len(verts)
    for j, w in G2.domain.side_pairings.items():
        g = G2.evaluate(w)
        # g maps the polygon to the tile across side j, so side j's endpoints are images of polygon vertices
        for v in (verts[j], verts[(j + 1) % n]):
            assert min(abs(g.apply(u) - v) for u in verts) < 1e-9
