import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssgraph.cellmodel import SelfSimilarGraph
from ssgraph.dynamics import NotInBasin
from ssgraph.green import (
    AccuracyUnreachable, GreenEvaluator, PoleHit, VertexRef, base_green_series, check_functional_equation_numeric,
    evaluate_green, shell_conductance_check, singularity_probe, walk_series,
)

O = "0::o"

# least-squares exponents from singularity_probe(k_max=20), frozen
GROWTH_GOLDEN = {"line2": -0.499994713447, "sierpinski": -0.317389312000, "vicsek": -0.405615675673}


def line_green(k, z):
    """Simple random walk on Z: G(0,k|z)."""
    s = cmath.sqrt(1 - z * z)
    return ((1 - s) / z) ** abs(k) / s if k else 1 / s


def test_line_examples(transfers):
    t = transfers["line2"]
    r = evaluate_green(t, O, O, 0.6)
    assert abs(r.value - 1.25) <= max(r.error, 1e-10)
    assert r.error <= 1e-10
    assert evaluate_green(t, O, O, 0).value == 1
    r = evaluate_green(t, O, O, 2 + 0.5j)
    assert abs(r.value - line_green(0, 2 + 0.5j)) <= 1e-9


@pytest.mark.parametrize("ref", ["1:0:m", "1:1:m", "1:0:b1", "2:0.0:m", "2:1.1:b1", "3:0.1.0:m"])
def test_line_off_diagonal(specs, transfers, ref):
    model = SelfSimilarGraph(specs["line2"])
    level, label = model.parse_ref(ref)
    k = model.approximation(level).distances([model.default_origin(level)])[label]
    for z in (0.6, 0.3 + 0.4j, -0.9):
        r = evaluate_green(transfers["line2"], O, ref, z)
        assert abs(r.value - line_green(k, z)) <= r.error + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_line_matches_closed_form(re, im):
    z = complex(re, im)
    if abs(im) < 0.05 and abs(re) >= 0.95:
        return
    t = _line()
    try:
        r = evaluate_green(t, O, O, z)
    except (NotInBasin, PoleHit):
        return
    assert abs(r.value - line_green(0, z)) <= 1e-8


_T = {}


def _line():
    if not _T:
        from ssgraph.cellmodel import bundled_spec
        from ssgraph.transfer import compute_transfer
        _T["t"] = compute_transfer(bundled_spec("line2"))
    return _T["t"]


def test_vertex_ref():
    ref = VertexRef.parse("2:0.1:b0")
    assert ref == VertexRef(2, (0, 1), "b0")
    assert str(ref) == "2:0.1:b0"
    assert VertexRef.parse("0:ε:o").address == ()
    with pytest.raises(ValueError):
        VertexRef.parse("2:0")


def test_base_series_line(specs):
    model = SelfSimilarGraph(specs["line2"])
    o = model.default_origin(3)
    assert base_green_series(model, o, o, 6, 3)[:5] == [1, 0, Fraction(1, 2), 0, Fraction(3, 8)]


@pytest.mark.parametrize("name", ["line2", "sierpinski", "vicsek"])
def test_walk_series_first_step(specs, name):
    model = SelfSimilarGraph(specs[name])
    o = model.default_origin(3)
    level, src, dists = walk_series(model, 3, o, 3)
    nbrs = model.neighbours(src, level)
    assert dists[0] == {src: 1}
    assert set(dists[1]) == set(nbrs)
    assert all(p == Fraction(1, len(nbrs)) for p in dists[1].values())
    for p in dists:
        assert sum(p.values()) == 1


def test_resolvent_column_identity(transfers):
    # G(x,y) = δ(x,y) + z Σ_w p(x,w) G(w,y)
    t = transfers["sierpinski"]
    ev = GreenEvaluator(t)
    level = 3
    o = ev.model.default_origin(level)
    z = 0.4 + 0.3j
    g = lambda x: ev.evaluate((level, x), (level, o), z, 1e-12)
    for x in [o] + list(ev.model.neighbours(o, level))[:2]:
        nb = ev.model.neighbours(x, level)
        rhs = (1 if x == o else 0) + z * sum(g(w).value for w in nb) / len(nb)
        assert abs(g(x).value - rhs) <= 1e-9


@pytest.mark.parametrize("name", ["line2", "sierpinski", "vicsek"])
def test_reversibility(transfers, name):
    ev = GreenEvaluator(transfers[name])
    level = 3
    o = ev.model.default_origin(level)
    nb = ev.model.neighbours(o, level)
    x = nb[0]
    far = [v for v in ev.model.neighbours(x, level) if v != o][0]
    z = 0.7 - 0.2j
    for a, b in [(o, x), (o, far), (x, far)]:
        gab = ev.evaluate((level, a), (level, b), z, 1e-12)
        gba = ev.evaluate((level, b), (level, a), z, 1e-12)
        da, db = len(ev.model.neighbours(a, level)), len(ev.model.neighbours(b, level))
        assert abs(da * gab.value - db * gba.value) <= 1e-9


def test_conjugate_symmetry(transfers):
    t = transfers["vicsek"]
    z = 0.5 + 0.6j
    a = evaluate_green(t, O, O, z).value
    b = evaluate_green(t, O, O, z.conjugate()).value
    assert abs(a - b.conjugate()) <= 1e-10


@pytest.mark.parametrize("name", ["sierpinski", "vicsek"])
def test_base_radius_consistency(transfers, name):
    for z in (0.8, 1.5 + 0.5j, -0.9 + 0.2j):
        a = evaluate_green(transfers[name], O, O, z, base_radius=0.5)
        b = evaluate_green(transfers[name], O, O, z, base_radius=0.25)
        assert abs(a.value - b.value) <= a.error + b.error + 1e-12


def test_functional_equation_residual(transfers):
    for name, t in transfers.items():
        for v, w in [(O, O), (O, "1:0:" + t.spec.boundary[1])]:
            res = check_functional_equation_numeric(t, v, w, 0.3 + 0.2j)
            assert res.ok, (name, res)


def test_pole_and_basin_errors(transfers):
    s = transfers["sierpinski"]
    with pytest.raises(PoleHit):
        evaluate_green(s, O, O, -2.0)
    # -4 maps exactly to the repelling fixed point 1
    with pytest.raises(NotInBasin):
        evaluate_green(s, O, O, -4.0)
    with pytest.raises(NotInBasin):
        evaluate_green(transfers["line2"], O, O, 1.0)
    with pytest.raises(NotInBasin):
        evaluate_green(transfers["line2"], O, O, 2**0.5)


def test_accuracy_errors(transfers):
    s = transfers["sierpinski"]
    with pytest.raises(AccuracyUnreachable):
        evaluate_green(s, O, O, 0.5, acc=1e-30)
    with pytest.raises(AccuracyUnreachable):
        evaluate_green(s, O, O, 0.5, series_cap=3)
    with pytest.raises(ValueError):
        evaluate_green(s, O, O, 0.5, acc=0)
    with pytest.raises(ValueError):
        GreenEvaluator(s, base_radius=1.0)


def test_error_bound_is_honest(transfers):
    t = transfers["line2"]
    for z in (0.9, 0.99, 0.5 + 0.5j):
        r = evaluate_green(t, O, O, z, acc=1e-6)
        assert abs(r.value - line_green(0, z)) <= r.error


@pytest.mark.parametrize("name", sorted(GROWTH_GOLDEN))
def test_probe_golden(transfers, name):
    rep = singularity_probe(transfers[name])
    assert rep.monotone
    assert not rep.integer_pole_fit
    assert rep.growth_exponent == pytest.approx(GROWTH_GOLDEN[name], abs=1e-8)
    assert all(e <= 1e-9 * v for e, v in zip(rep.errors, rep.values))


def test_probe_line_exponent_is_half(transfers):
    rep = singularity_probe(transfers["line2"])
    assert abs(rep.growth_exponent + 0.5) < 1e-4
    assert rep.values[0] == pytest.approx(1 / math.sqrt(0.75), abs=1e-10)


def test_probe_first_passage(transfers):
    rep = singularity_probe(transfers["line2"], O, "1:0:m", k_max=10)
    r = rep.radii[-1]
    assert rep.first_passage == pytest.approx((1 - math.sqrt(1 - r * r)) / r, abs=1e-9)


@pytest.mark.parametrize("name,a", [("line2", 2), ("sierpinski", 8), ("vicsek", 6)])
def test_shell_conductances(specs, name, a):
    rep = shell_conductance_check(specs[name], 6)
    assert rep.a == [a] * 7
    assert rep.bounded and rep.bounded_by == a
    assert rep.partial_sums[-1] == pytest.approx(7 / a)
