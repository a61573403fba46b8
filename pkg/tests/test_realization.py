import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from rotorbit.curves import geodesic_of
from rotorbit.errors import NotFound, NotInterior
from rotorbit.group import GroupWord, abelianize
from rotorbit.realization import (
    ExtremalDatum,
    RealizationCertificate,
    bounded_sequence,
    compose_certificate,
    core_candidates,
    periodic_point_search,
    realize_and_verify,
    residuals,
    steinitz_decompose,
)
from rotorbit.zoo import MapSpec, ShearSpec, build_map


def axis_data(genus=2):
    out = []
    for k in range(2 * genus):
        for s in (1, -1):
            out.append(ExtremalDatum.from_word(GroupWord(((k + 1, s),)), 1, genus))
    return out


def test_datum_identity():
    d = ExtremalDatum.from_word("a1 a1 b2", 3, 2)
    assert d.w == (F(2, 3), 0, 0, F(1, 3))
    assert d.check(2)
    bad = ExtremalDatum((F(1), 0, 0, 0), GroupWord.parse("b1"), 1)
    assert not bad.check(2)


def test_vertex_target_not_interior():
    data = axis_data()
    with pytest.raises(NotInterior) as err:
        steinitz_decompose(data[0].w, data)
    u = err.value.direction
    v = data[0].w
    assert any(x != 0 for x in u)
    for d in data:
        assert sum(a * (b - c) for a, b, c in zip(u, d.w, v)) <= 0


def test_outside_target_gets_separating_direction():
    data = axis_data()
    v = (F(1), F(1), 0, 0)
    with pytest.raises(NotInterior) as err:
        steinitz_decompose(v, data)
    u = err.value.direction
    for d in data:
        assert sum(a * (b - c) for a, b, c in zip(u, d.w, v)) <= 0


def test_lower_dimensional_candidates_not_interior():
    data = [d for d in axis_data() if d.w[2] == 0 and d.w[3] == 0]
    with pytest.raises(NotInterior) as err:
        steinitz_decompose((0, 0, 0, 0), data)
    u = err.value.direction
    assert all(sum(a * b for a, b in zip(u, d.w)) == 0 for d in data)


def test_symmetric_origin():
    subset, lam = steinitz_decompose((0, 0, 0, 0), axis_data())
    assert len(subset) <= 8
    assert lam == [F(1, 8)] * 8


def _check_exact(v, subset, lam):
    assert sum(lam) == 1 and all(x > 0 for x in lam)
    for k in range(len(v)):
        assert sum(l * d.w[k] for l, d in zip(lam, subset)) == F(v[k])


def test_quarter_target_exact():
    v = (F(1, 4), F(1, 4), 0, 0)
    subset, lam = steinitz_decompose(v, axis_data())
    _check_exact(v, subset, lam)
    cert = compose_certificate(v, subset, lam)
    assert cert.verify(2)
    ab = abelianize(cert.h_v, 2)
    assert [F(int(x)) for x in ab] == [cert.a_Total * cert.N_product * x for x in v]


def test_steinitz_reduces_to_four_g():
    # many redundant candidates: all (+-1, +-1, 0, 0)-type sums plus axes
    data = axis_data()
    for w in ["a1 b1", "A1 B1", "a1 B1", "A1 b1", "a2 b2", "A2 B2", "a1 a2", "A1 A2"]:
        data.append(ExtremalDatum.from_word(w, 1, 2))
    v = (F(1, 5), F(1, 7), F(-1, 9), F(1, 11))
    subset, lam = steinitz_decompose(v, data)
    assert len(subset) <= 8
    _check_exact(v, subset, lam)


def test_certificate_for_origin_is_trivial_in_homology():
    subset, lam = steinitz_decompose((0, 0, 0, 0), axis_data())
    cert = compose_certificate((0, 0, 0, 0), subset, lam)
    assert cert.verify(2)
    assert not abelianize(cert.h_v, 2).any()


def test_mixed_periods():
    data = [
        ExtremalDatum.from_word("a1", 2, 2),
        ExtremalDatum.from_word("A1", 2, 2),
        ExtremalDatum.from_word("b1", 3, 2),
        ExtremalDatum.from_word("B1", 3, 2),
        ExtremalDatum.from_word("a2", 2, 2),
        ExtremalDatum.from_word("A2", 2, 2),
        ExtremalDatum.from_word("b2", 3, 2),
        ExtremalDatum.from_word("B2", 3, 2),
    ]
    v = (F(1, 10), F(1, 12), 0, F(-1, 20))
    subset, lam = steinitz_decompose(v, data)
    cert = compose_certificate(v, subset, lam)
    assert cert.N_product == math.prod(d.n for d in subset)
    assert all(u * d.n == cert.N_product for u, d in zip(cert.u, subset))
    assert cert.verify(2)


def test_certificate_json_round_trip():
    v = (F(1, 4), F(1, 4), 0, 0)
    subset, lam = steinitz_decompose(v, axis_data())
    cert = compose_certificate(v, subset, lam)
    text = json.dumps(cert.to_dict(), sort_keys=True)
    back = RealizationCertificate.from_dict(json.loads(text))
    assert back.verify(2)
    assert json.dumps(back.to_dict(), sort_keys=True) == text


def test_bounded_sequence_single_datum():
    d = ExtremalDatum.from_word("a1", 1, 2)
    bs = bounded_sequence(np.array([1.0, 0, 0, 0]), [d], 100)
    assert bs.C_star == 0 and bs.max_deviation == 0
    assert set(bs.symbols.tolist()) == {0}


def test_bounded_sequence_midpoint_alternates():
    data = [ExtremalDatum.from_word("a1", 1, 2), ExtremalDatum.from_word("b1", 1, 2)]
    bs = bounded_sequence(np.array([0.5, 0.5, 0, 0]), data, 1000)
    assert bs.max_deviation <= math.sqrt(2) / 2 + 1e-12
    assert np.all(bs.symbols[1:] != bs.symbols[:-1])
    assert bs.within_bound


def test_bounded_sequence_irrational_target():
    v = np.array([math.sqrt(2) / 10, 0.1, -math.sqrt(3) / 20, 0.05])
    bs = bounded_sequence(v, axis_data(), 20000)
    assert bs.within_bound
    assert bs.max_deviation < bs.C_star


def test_bounded_sequence_outside_hull():
    with pytest.raises(NotInterior):
        bounded_sequence(np.array([2.0, 0, 0, 0]), axis_data(), 10)


def test_identity_map_empty_word(G2):
    M = build_map(MapSpec(()), G2, certify=False)
    res = periodic_point_search(M, GroupWord(), 1, 1e-6, grid=10)
    assert res.residual == 0


def test_single_shear_core_point(G2):
    c = geodesic_of("a1", G2)
    M = build_map(MapSpec((ShearSpec(c, width=0.3),)), G2, certify=False)
    res = periodic_point_search(M, c.word, 1, 1e-9, grid=500)
    assert res.N == 1 and res.residual < 1e-9


def test_identity_map_trivial_certificate(G2):
    M = build_map(MapSpec(()), G2, certify=False)
    triv = compose_certificate((0, 0, 0, 0), [ExtremalDatum.from_word("", 1, 2)], [F(1)])
    assert triv.verify(2)
    res = realize_and_verify(M, triv, 1e-6, grid=10)
    assert res.residual == 0


def test_not_found_is_reported(G2):
    M = build_map(MapSpec(()), G2, certify=False)
    with pytest.raises(NotFound) as err:
        periodic_point_search(M, GroupWord.parse("a1"), 1, 1e-6, grid=20, refine=2)
    assert err.value.best is not None and err.value.best.residual > 1e-6


def test_chain_generator_search_and_conjugation(chain_map, G2):
    res = periodic_point_search(chain_map, "a1", 1, 1e-6)
    assert res.residual < 1e-6
    rng = np.random.default_rng(0)
    for _ in range(3):
        h = GroupWord(tuple((int(rng.integers(1, 5)), int(rng.choice([1, -1]))) for _ in range(2)))
        p = G2.evaluate(h).apply(res.point)
        g = h * res.g * h.inverse()
        assert residuals(chain_map, g, res.N, p)[0] < 1e-6


def test_core_candidates_span_the_chain(chain_map):
    data, found = core_candidates(chain_map, ["a1", "b1"])
    assert [str(d.word) for d in data] == ["a1", "A1", "b1", "B1"]
    assert all(r.residual < 1e-6 for r in found)


def test_single_shear_one_datum_certificate(G2):
    c = geodesic_of("a1", G2)
    M = build_map(MapSpec((ShearSpec(c, width=0.3),)), G2, certify=False)
    d = ExtremalDatum.from_word("a1", 1, 2)
    cert = compose_certificate(d.w, [d], [F(1)])
    assert cert.verify(2)
    res = realize_and_verify(M, cert, 1e-9, grid=500)
    assert res.residual < 1e-9
