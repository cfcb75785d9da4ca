import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssgraph.dynamics import (
    approximate_julia, backward_orbit, classify_julia, exceptional_set, forward_orbit, laplacian, preimages,
    spectrum_bounds,
)
from ssgraph.ratfun import INF, is_inf

# frozen from a depth-8 run: (size, min, max)
EXCEPTIONAL_GOLDEN = {
    "line2": (1022, -325.949834779, 325.949834779),
    "sierpinski": (1789, -23588.730029971, 14771.436064267),
    "vicsek": (49695, -3.0, 13.684658438),
}


def test_forward_orbit_examples(transfers):
    d = transfers["line2"].d
    orb = forward_orbit(d, 0.9)
    assert orb.converges_to_zero and orb.iterations == 2
    assert orb.orbit[1] == pytest.approx(0.81 / 1.19)
    assert not forward_orbit(d, 1.0).converges_to_zero
    assert not forward_orbit(d, 1.5).converges_to_zero
    assert forward_orbit(d, 0.1).iterations == 0


def test_preimage_examples(transfers):
    d = transfers["line2"].d
    assert preimages(d, 1) == [-1, 1]
    assert preimages(d, 0) == [0, 0]
    assert [p.real for p in preimages(d, 2**0.5)] == pytest.approx([-1.0823922002923940, 1.0823922002923940])
    # d(z) = -1 has no finite solution: both preimages sit at ∞
    assert all(is_inf(p) for p in preimages(d, -1))


def test_preimages_of_infinity(transfers):
    pre = preimages(transfers["sierpinski"].d, INF)
    assert sorted(p.real for p in pre if not is_inf(p)) == pytest.approx([4 / 3])
    assert sum(map(is_inf, pre)) == 1


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-50, max_value=50).filter(lambda w: abs(w) > 1e-3))
def test_preimages_map_back(w):
    d = _sierpinski_d()
    for z in preimages(d, w):
        if is_inf(z):
            continue
        assert abs(d.eval(z) - w) <= 1e-7 * (1 + abs(w))


_cache = {}


def _sierpinski_d():
    if "d" not in _cache:
        from ssgraph.cellmodel import bundled_spec
        from ssgraph.transfer import compute_transfer
        _cache["d"] = compute_transfer(bundled_spec("sierpinski")).d
    return _cache["d"]


def cos_oracle(n):
    """Cosines of the depth-n backward orbit of 1 under z²/(2-z²), i.e. 1/z."""
    m = 2 ** (n - 1) if n >= 1 else 0.5
    return np.unique(np.round([math.cos(k * math.pi / m) for k in range(int(2 * m) + 1)], 9))


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5, 8])
def test_line_orbit_matches_cosines(transfers, n):
    tree = backward_orbit(transfers["line2"].d, [1.0], n)
    recips = list(1 / tree.at_depth(n))
    if tree.has_infinity and tree.infinity_depth <= n:
        recips.append(0.0)
    got = np.unique(np.round(recips, 9) + 0.0)
    assert np.allclose(got, cos_oracle(n) + 0.0, atol=1e-9)


@pytest.mark.parametrize("name", ["line2", "sierpinski", "vicsek"])
def test_julia_points_real_outside_disc(transfers, name):
    j = approximate_julia(transfers[name], 8)
    assert j.nonreal == []
    assert np.all(np.abs(j.points) >= 1 - 1e-9)
    assert not np.any(j.points == 0)
    d = transfers[name].d
    for z in j.points[:: max(1, len(j.points) // 50)]:
        w = d.eval(complex(z))
        assert is_inf(w) or abs(w) >= 1 - 1e-6


def test_orbit_depths_are_nested(transfers):
    tree = backward_orbit(transfers["sierpinski"].d, [1.0], 7)
    prev = set()
    for k in range(8):
        cur = set(np.round(tree.at_depth(k), 9))
        assert prev <= cur
        prev = cur


def test_classification(transfers):
    assert classify_julia(approximate_julia(transfers["line2"], 10)).verdict == "interval-like"
    assert classify_julia(approximate_julia(transfers["sierpinski"], 10)).verdict == "Cantor-like"
    assert classify_julia(approximate_julia(transfers["sierpinski"], 2)).verdict == "unresolved"


def test_julia_goldens(transfers):
    j = approximate_julia(transfers["sierpinski"], 10)
    assert len(j.points) == 1024
    assert j.max_gap == pytest.approx(0.559016994375, abs=1e-9)
    line = approximate_julia(transfers["line2"], 10)
    assert line.has_infinity and len(line.points) == 512
    assert line.max_gap == pytest.approx(0.006135884649, abs=1e-9)


@pytest.mark.parametrize("name", sorted(EXCEPTIONAL_GOLDEN))
def test_exceptional_golden(transfers, name):
    size, lo, hi = EXCEPTIONAL_GOLDEN[name]
    e = exceptional_set(transfers[name], 8)
    assert e.size == size
    assert e.points.min() == pytest.approx(lo, abs=1e-6)
    assert e.points.max() == pytest.approx(hi, abs=1e-6)


def test_exceptional_line_small_depths(transfers):
    t = transfers["line2"]
    assert np.sort(exceptional_set(t, 0).points) == pytest.approx([-2**0.5, 2**0.5])
    one = np.sort(exceptional_set(t, 1).points)
    for v in (1.0823922, 2.61312593):
        assert np.min(np.abs(one - v)) < 1e-7 and np.min(np.abs(one + v)) < 1e-7


def test_laplacian():
    assert laplacian(1) == 0.0
    assert laplacian(INF) == 1.0
    assert laplacian(-1) == 2.0
    assert laplacian(2) == 0.5


def test_spectrum_bounds(transfers):
    rep = spectrum_bounds(transfers["line2"], 6)
    assert rep.classification.verdict == "unresolved"
    assert np.all((rep.laplacian_inner >= 0) & (rep.laplacian_inner <= 2))
    inner = set(np.round(rep.reciprocal_inner, 9))
    assert inner <= set(np.round(rep.reciprocal_outer, 9))
    zero = spectrum_bounds(transfers["line2"], 0, exceptional_depth=0)
    assert list(zero.laplacian_inner) == [0.0]


def test_budget_truncates(transfers):
    tree = backward_orbit(transfers["vicsek"].d, [1.0], 12, budget=500)
    assert tree.truncated
    assert len(tree.points) <= 500 * 3 + 1


def test_negative_depth(transfers):
    with pytest.raises(ValueError):
        backward_orbit(transfers["line2"].d, [1.0], -1)
