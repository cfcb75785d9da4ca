from fractions import Fraction

import pytest

from ssgraph.cellmodel import build_ncell
from ssgraph.oracle import (
    AbsorbingWalkProblem, functional_equation_series_check, green_ncell, verify_decimation_identities,
)
from ssgraph.ratfun import RationalFunction, compose, solve_resolvent

Z = RationalFunction.z()


def test_green_ncell_line_examples(specs, transfers):
    t = transfers["line2"]
    g1 = build_ncell(specs["line2"], 1)
    b0, b1 = ((), "b0"), ((), "b1")
    assert green_ncell(AbsorbingWalkProblem(g1, frozenset({b1}), b0, b0)) == t.f
    assert green_ncell(AbsorbingWalkProblem(g1, frozenset({b1}), b0, b1)) == t.d
    g2 = build_ncell(specs["line2"], 2)
    assert green_ncell(AbsorbingWalkProblem(g2, frozenset({b1}), b0, b1)) == compose(t.d, t.d)
    assert green_ncell(AbsorbingWalkProblem(g2, frozenset({b1}), b0, b0)) == t.f * compose(t.f, t.d)


def test_absorbing_must_be_boundary(specs):
    g = build_ncell(specs["line2"], 1)
    with pytest.raises(ValueError):
        AbsorbingWalkProblem(g, frozenset({((), "m")}), ((), "b0"), ((), "b0"))
    with pytest.raises(ValueError):
        AbsorbingWalkProblem(g, frozenset(), ((), "nope"), ((), "b0"))


@pytest.mark.parametrize("name", ["line2", "sierpinski", "vicsek"])
def test_decimation_identities(specs, transfers, name):
    report = verify_decimation_identities(specs[name], 3, transfers[name])
    assert report.ok, [c.diff for c in report.checks if not c.ok][:3]
    assert report.largest_verified == 3
    kinds = {c.identity for c in report.checks}
    assert kinds == {"transition", "return", "inner"}


def test_resolvent_identity_on_ncell(specs):
    g = build_ncell(specs["sierpinski"], 2)
    absorb = list(g.boundary[1:])
    Q = g.transition(absorb)
    verts = list(g.vertices)
    G = solve_resolvent(Q, verts, verts)
    for i, x in enumerate(verts):
        for j, y in enumerate(verts):
            acc = G[i][j]
            for k, u in enumerate(verts):
                q = Q.get(x, {}).get(u, 0)
                if q:
                    acc = acc - Z * q * G[k][j]
            assert acc == RationalFunction(1 if i == j else 0)


def test_reversibility_on_ncell(specs):
    g = build_ncell(specs["vicsek"], 1)
    absorb = [g.boundary[0]]
    inner = [v for v in g.vertices if v not in absorb]
    G = solve_resolvent(g.transition(absorb), inner, inner)
    deg = g.degree
    for i, x in enumerate(inner):
        for j, y in enumerate(inner):
            assert G[i][j] * deg[x] == G[j][i] * deg[y]


@pytest.mark.parametrize("name", ["line2", "sierpinski", "vicsek"])
def test_functional_equation_series(specs, transfers, name):
    report = functional_equation_series_check(specs[name], 12, transfers[name])
    assert report.ok, [(c.pair, c.first_mismatch()) for c in report.comparisons if not c.ok]
    assert len(report.comparisons) == 4


def test_line_return_series(specs, transfers):
    report = functional_equation_series_check(specs["line2"], 8, transfers["line2"])
    oo = report.comparisons[0]
    assert oo.direct[:5] == [1, 0, Fraction(1, 2), 0, Fraction(3, 8)]


def test_series_coefficients_are_probabilities(specs, transfers):
    for name in specs:
        report = functional_equation_series_check(specs[name], 10, transfers[name])
        for c in report.comparisons:
            assert all(0 <= a <= 1 for a in c.direct)


def test_order_zero_and_cap(specs, transfers):
    report = functional_equation_series_check(specs["sierpinski"], 0, transfers["sierpinski"])
    assert report.ok
    assert report.comparisons[0].direct == [1]
    with pytest.raises(ValueError):
        functional_equation_series_check(specs["sierpinski"], 30, transfers["sierpinski"])
