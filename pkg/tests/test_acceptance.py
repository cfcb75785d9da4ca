"""Acceptance suite: ten end-to-end criteria, each with its tolerance and time limit.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
``criterion N: PASS/FAIL`` line per criterion. Running this file directly
does the same.
"""
import cmath
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from ssgraph.cellmodel import bundled_spec
from ssgraph.dynamics import approximate_julia, exceptional_set, spectrum_bounds, window_gap
from ssgraph.green import evaluate_green, shell_conductance_check, singularity_probe
from ssgraph.oracle import functional_equation_series_check, verify_decimation_identities
from ssgraph.ratfun import Polynomial, RationalFunction, compose, iterate
from ssgraph.transfer import check_fixed_points, check_zeroes_lemma, compute_transfer

NAMES = ("line2", "sierpinski", "vicsek")
Z = RationalFunction.z()


@contextmanager
def time_limit(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f}s, limit {seconds}s"


@pytest.fixture(scope="module")
def line():
    return compute_transfer(bundled_spec("line2"))


def chebyshev(n):
    """T_n by the three-term recurrence, integer coefficients (ascending)."""
    a, b = [1], [0, 1]
    if n == 0:
        return a
    for _ in range(n - 1):
        nxt = [0] + [2 * c for c in b]
        for i, c in enumerate(a):
            nxt[i] -= c
        a, b = b, nxt
    return b


def test_criterion_1():
    with time_limit(1):
        t = compute_transfer(bundled_spec("line2"))
    assert t.d == Z**2 / (2 - Z**2)
    assert t.f == RationalFunction(2) / (2 - Z**2)
    assert t.d.numerator.gcd(t.d.denominator).degree == 0
    assert t.f.numerator.gcd(t.f.denominator).degree == 0


def test_criterion_2(line):
    inv = RationalFunction(1) / Z
    with time_limit(5):
        for n in (2, 4, 8):
            r = RationalFunction(1) / compose(iterate(line.d, n), inv)
            assert r.denominator == Polynomial([1])
            assert list(r.numerator.coefficients) == [Fraction(c) for c in chebyshev(2**n)]


def test_criterion_3(line):
    rng = np.random.default_rng(20240531)
    pts = []
    while len(pts) < 50:
        z = complex(*rng.uniform(-10, 10, size=2))
        if abs(z) <= 10 and abs(z.imag) >= 0.1:
            pts.append(z)
    with time_limit(10):
        for z in pts:
            r = evaluate_green(line, "0::o", "0::o", z, acc=1e-9)
            # the principal branch is continuous on each open half plane and equals 1 at 0
            assert abs(r.value - 1 / cmath.sqrt(1 - z * z)) <= 1e-8, z
        for x in np.linspace(-0.99, 0.99, 23):
            r = evaluate_green(line, "0::o", "0::o", float(x), acc=1e-11)
            assert abs(r.value - 1 / np.sqrt(1 - x * x)) <= 1e-10, x


def test_criterion_4():
    with time_limit(60):
        for name in NAMES:
            spec = bundled_spec(name)
            rep = verify_decimation_identities(spec, 3, compute_transfer(spec))
            assert rep.ok, (name, [c.diff for c in rep.checks if not c.ok][:2])


def test_criterion_5():
    with time_limit(1):
        ts = {name: compute_transfer(bundled_spec(name)) for name in NAMES}
        reports = {name: check_fixed_points(t) for name, t in ts.items()}
    for name, rep in reports.items():
        assert ts[name].d.exact_value(0) == 0, name
        assert rep.order_at_zero == rep.diam_boundary, name
        assert rep.d_at_one == 1, name
        assert isinstance(rep.d_prime_at_one, Fraction) and rep.d_prime_at_one > 2, name


def test_criterion_6():
    with time_limit(5):
        for name in NAMES:
            t = compute_transfer(bundled_spec(name))
            assert check_zeroes_lemma(t, radius=1e-8), name
            for zero in t.zeroes_f:
                assert min(abs(zero - p) for p in t.poles_cell) <= 1e-8 * (1 + abs(zero))


def test_criterion_7():
    with time_limit(60):
        for name in NAMES:
            t = compute_transfer(bundled_spec(name))
            for tree in (approximate_julia(t, 12).tree, exceptional_set(t, 12)):
                assert tree.nonreal == [], (name, tree.nonreal[:3])
                assert np.all(np.abs(tree.points) >= 1 - 1e-9), name
                assert tree.generated > 0


def test_criterion_8(line):
    with time_limit(60):
        rep = spectrum_bounds(line, 12)
    inner_gap = window_gap(rep.reciprocal_inner, -10, 10)
    outer_gap = window_gap(rep.reciprocal_outer, -10, 10)
    print(f"line depth 12: inner gap {inner_gap:.4f}, outer gap {outer_gap:.4f}, {rep.classification}")
    assert rep.classification.verdict == "interval-like"
    assert np.all(np.abs(rep.reciprocal_outer) >= 1 - 1e-9)
    assert outer_gap < 0.05
    # the depth-12 inner set is {1/cos(k pi/2^11)}; its spacing near |z| = 10 is about 0.15
    assert inner_gap < 0.05, f"inner gap {inner_gap:.4f} on [-10, 10]"


def test_criterion_9():
    with time_limit(60):
        for name in NAMES:
            spec = bundled_spec(name)
            rep = functional_equation_series_check(spec, 12, compute_transfer(spec))
            assert rep.ok, (name, [(c.pair, c.first_mismatch()) for c in rep.comparisons if not c.ok])


def test_criterion_10():
    with time_limit(60):
        for name in NAMES:
            spec = bundled_spec(name)
            probe = singularity_probe(compute_transfer(spec))
            assert probe.monotone, name
            assert probe.values[-1] > 10 * probe.values[0], name
            if name == "line2":
                assert abs(probe.growth_exponent + 0.5) <= 0.05
            shells = shell_conductance_check(spec, 8)
            assert len(shells.a) == 9 and shells.bounded, (name, shells.a)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
