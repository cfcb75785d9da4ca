import json
import random
from fractions import Fraction

import numpy as np
import pytest

from ssgraph.cellmodel import parse_cell_spec
from ssgraph.ratfun import INF, Polynomial, RationalFunction
from ssgraph.transfer import (
    TransferError, check_fixed_points, check_zeroes_lemma, compute_transfer, first_passage_identity, first_return,
    series_sanity,
)

Z = RationalFunction.z()

# computed once from the bundled specs and frozen: (numerator, denominator) integer forms
GOLDEN = {
    "sierpinski": {"d": ([0, 0, -1], [-4, 3]), "f": ([-8, 2, 1], [-8, 2, 3])},
    "vicsek": {"d": ([0, 0, 0, -1], [-36, 60, -27, 2]),
               "f": ([-108, 144, -51, 3], [-108, 144, -21, -21, 2])},
}


def test_line_functions(transfers):
    t = transfers["line2"]
    assert t.d == Z**2 / (2 - Z**2)
    assert t.f == RationalFunction(2) / (2 - Z**2)
    assert t.h[("m", "b0")] == Z / 2
    assert t.h[("m", "m")] == RationalFunction(1)
    assert t.poles_cell == []
    assert t.zeroes_f == []
    assert t.poles_f == pytest.approx([-2**0.5, 2**0.5])


@pytest.mark.parametrize("name", ["sierpinski", "vicsek"])
def test_golden_functions(transfers, name):
    t = transfers[name]
    assert t.d.integer_form() == GOLDEN[name]["d"]
    assert t.f.integer_form() == GOLDEN[name]["f"]


def test_sierpinski_is_classical_map(transfers):
    assert transfers["sierpinski"].d == Z**2 / (4 - 3 * Z)


def neumann(spec, absorbing, source, target, z, terms=60):
    idx = {v: i for i, v in enumerate(spec.vertices)}
    n = len(idx)
    Q = np.zeros((n, n))
    for v, nb in spec.adjacency.items():
        if v in absorbing:
            continue
        for w in nb:
            Q[idx[v], idx[w]] = 1 / len(nb)
    acc = np.zeros(n)
    vec = np.zeros(n)
    vec[idx[source]] = 1
    for _ in range(terms):
        acc += vec
        vec = z * vec @ Q
    return acc[idx[target]]


@pytest.mark.parametrize("name", ["line2", "sierpinski", "vicsek"])
def test_neumann_cross_check(specs, transfers, name):
    s, t = specs[name], transfers[name]
    v, w = s.boundary[0], s.boundary[1]
    absorbing = set(s.boundary) - {v}
    z = 0.1
    assert abs(float(t.d.exact_value(Fraction(1, 10))) - (s.theta - 1) * neumann(s, absorbing, v, w, z)) < 1e-12
    assert abs(float(t.f.exact_value(Fraction(1, 10))) - neumann(s, absorbing, v, v, z)) < 1e-12


def test_fixed_point_checks(transfers):
    line = check_fixed_points(transfers["line2"])
    assert (line.order_at_zero, line.diam_boundary, line.d_at_one, line.d_prime_at_one) == (2, 2, 1, 4)
    assert check_fixed_points(transfers["sierpinski"]).d_at_one == 1
    vic = check_fixed_points(transfers["vicsek"])
    # computed, not assumed: the corners of the Vicsek cell are 3 apart
    assert vic.diam_boundary == 3 and vic.order_at_zero == 3
    assert all(check_fixed_points(t).ok for t in transfers.values())


def test_zeroes_lemma(transfers):
    for t in transfers.values():
        assert check_zeroes_lemma(t)
    assert transfers["line2"].zeroes_f == []


def test_first_passage(transfers, specs):
    assert first_return(specs["line2"]) == Z**2 / 2
    for t in transfers.values():
        assert first_passage_identity(t)


def test_series_are_probabilities(transfers):
    for t in transfers.values():
        assert series_sanity(t, 30)


def test_f_normalisation(transfers):
    for t in transfers.values():
        assert t.f.exact_value(0) == 1
        assert t.d.exact_value(0) == 0


def test_reversibility_of_h_tilde(transfers, specs):
    for name, t in transfers.items():
        deg = specs[name].degree
        for (w, y), g in t.h_tilde.items():
            assert g * deg[w] == t.h[(y, w)] * deg[y]


def test_poles_are_real_outside_disc(transfers):
    for t in transfers.values():
        for p in t.poles_f + t.poles_cell:
            assert p == INF or (abs(p.imag) <= 1e-9 * (1 + abs(p.real)) and abs(p) >= 1 - 1e-9)


def permuted(spec, seed):
    rng = random.Random(seed)
    raw = spec.to_json()
    raw.pop("origin_vertex", None)
    raw.pop("star_multiplicity", None)
    maps = []
    for m in raw["substitution_maps"]:
        m = list(m)
        rng.shuffle(m)
        maps.append(m)
    raw["substitution_maps"] = maps
    return parse_cell_spec(json.dumps(raw))


@pytest.mark.parametrize("seed", [0, 1])
def test_substitution_map_invariance(specs, transfers, seed):
    for name, s in specs.items():
        t2 = compute_transfer(permuted(s, seed))
        t = transfers[name]
        assert t2.d == t.d and t2.f == t.f
        assert sorted(map(str, t2.h.values())) == sorted(map(str, t.h.values()))


def test_refuses_unbounded_geometry():
    s = parse_cell_spec(json.dumps({
        "name": "fork", "theta": 2, "vertices": ["b0", "m", "n", "b1"], "boundary": ["b0", "b1"],
        "cliques": [["b0", "m"], ["b0", "n"], ["m", "b1"], ["n", "m"]], "origin_clique": 0,
        "substitution_maps": [["b0", "m"], ["b0", "n"], ["m", "b1"], ["n", "m"]]}))
    with pytest.raises(TransferError):
        compute_transfer(s)


def test_refuses_asymmetric_cell():
    s = parse_cell_spec(json.dumps({
        "name": "asym", "theta": 2, "vertices": ["b0", "m1", "m2", "b1", "t"], "boundary": ["b0", "b1"],
        "cliques": [["b0", "m1"], ["m1", "m2"], ["m2", "b1"], ["m1", "t"]], "origin_clique": 0,
        "substitution_maps": [["b0", "m1"], ["m1", "m2"], ["m2", "b1"], ["m1", "t"]]}))
    with pytest.raises(TransferError):
        compute_transfer(s)


def test_pair_dependence_detected(specs, monkeypatch):
    import ssgraph.transfer as tr

    real = tr.solve_resolvent
    calls = {"n": 0}

    def skewed(Q, rows, cols):
        out = real(Q, rows, cols)
        calls["n"] += 1
        if calls["n"] == 2:
            out[0] = [g * 2 for g in out[0]]
        return out

    monkeypatch.setattr(tr, "solve_resolvent", skewed)
    with pytest.raises(TransferError):
        tr.compute_transfer(specs["sierpinski"])


def test_poles_of_cell_from_denominators(transfers):
    t = transfers["sierpinski"]
    assert sorted(p.real for p in t.poles_cell) == pytest.approx([-4.0, 2.0])
    assert Polynomial([8, -2, -1]).evaluate(2.0) == 0
