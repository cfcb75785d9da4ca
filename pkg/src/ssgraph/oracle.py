"""Exact Green functions of finite n-cells, used to cross-check the transfer functions."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cellmodel import CellSpec, FiniteGraph, SelfSimilarGraph, build_ncell, format_label
from .green import walk_series
from .ratfun import RationalFunction, compose, iterate, solve_resolvent
from .transfer import TransferSet, compute_transfer

DEFAULT_ORDER_CAP = 24


@dataclass(frozen=True)
class AbsorbingWalkProblem:
    graph: FiniteGraph
    absorbing: frozenset
    source: object
    target: object

    def __post_init__(self):
        if not set(self.absorbing) <= set(self.graph.boundary):
            raise ValueError("absorbing vertices must lie on the graph boundary")
        for v in (self.source, self.target):
            if v not in self.graph.adjacency:
                raise ValueError(f"unknown vertex {v!r}")


def green_ncell(problem: AbsorbingWalkProblem) -> RationalFunction:
    """Entry (source, target) of (I - z Q_B)^{-1}."""
    Q = problem.graph.transition(problem.absorbing)
    return solve_resolvent(Q, [problem.source], [problem.target])[0][0]


@dataclass
class IdentityCheck:
    n: int
    identity: str
    pair: tuple[str, str]
    ok: bool
    lhs: RationalFunction
    rhs: RationalFunction

    def diff(self) -> str:
        """First mismatching Taylor coefficient, or '' when equal."""
        if self.ok:
            return ""
        a, b = self.lhs.series(40), self.rhs.series(40)
        for k, (x, y) in enumerate(zip(a, b)):
            if x != y:
                return f"coefficient z^{k}: direct {x} vs composed {y}"
        return f"direct {self.lhs} vs composed {self.rhs}"


@dataclass
class DecimationReport:
    spec_name: str
    n_max: int
    checks: list[IdentityCheck] = field(default_factory=list)
    largest_verified: int = 0

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks) and self.largest_verified == self.n_max


def verify_decimation_identities(spec: CellSpec, n_max: int = 3, t: TransferSet | None = None,
                                 vertex_cap: int = 20_000) -> DecimationReport:
    """Direct n-cell solves against dⁿ, ∏ f∘dᵏ and h∘d^{n-1}, exactly, for n ≤ n_max."""
    t = t or compute_transfer(spec)
    report = DecimationReport(spec.name, n_max)
    v, w = spec.boundary[0], spec.boundary[1]
    scale = spec.theta - 1
    for n in range(1, n_max + 1):
        g = build_ncell(spec, n, vertex_cap=vertex_cap)
        vl, wl = ((), v), ((), w)
        absorb = [b for b in g.boundary if b != vl]
        row = solve_resolvent(g.transition(absorb), [vl], [vl, wl])[0]
        dn = iterate(t.d, n)
        report.checks.append(IdentityCheck(n, "transition", (v, w), row[1] * scale == dn, row[1] * scale, dn))
        prod = RationalFunction.constant(1)
        for k in range(n):
            prod = prod * compose(t.f, iterate(t.d, k))
        report.checks.append(IdentityCheck(n, "return", (v, v), row[0] == prod, row[0], prod))
        coarse = [((), y) for y in spec.interior]
        table = solve_resolvent(g.transition(g.boundary), coarse, list(g.boundary))
        inner = iterate(t.d, n - 1)
        for (_, y), vals in zip(coarse, table):
            for (_, b), direct in zip(g.boundary, vals):
                composed = compose(t.h[(y, b)], inner)
                report.checks.append(IdentityCheck(n, "inner", (y, b), direct == composed, direct, composed))
        if all(c.ok for c in report.checks):
            report.largest_verified = n
    return report


# functional equation, coefficient-wise ---------------------------------------

def _series_compose(outer: list[Fraction], inner: list[Fraction], order: int) -> list[Fraction]:
    """Coefficients of outer(inner(z)) up to z^order (inner(0) = 0)."""
    if inner and inner[0] != 0:
        raise ValueError("inner series must vanish at 0")
    out = [Fraction(0)] * (order + 1)
    power = [Fraction(1)] + [Fraction(0)] * order
    for c in outer[: order + 1]:
        if c:
            for k in range(order + 1):
                out[k] += c * power[k]
        power = _series_mul(power, inner, order)
        if not any(power):
            break
    return out


def _series_mul(a: list[Fraction], b: list[Fraction], order: int) -> list[Fraction]:
    out = [Fraction(0)] * (order + 1)
    for i, x in enumerate(a[: order + 1]):
        if x:
            for j, y in enumerate(b[: order + 1 - i]):
                if y:
                    out[i + j] += x * y
    return out


@dataclass
class SeriesComparison:
    pair: tuple[str, str]
    direct: list[Fraction]
    composed: list[Fraction]

    @property
    def ok(self) -> bool:
        return self.direct == self.composed

    def first_mismatch(self) -> int | None:
        for k, (a, b) in enumerate(zip(self.direct, self.composed)):
            if a != b:
                return k
        return None


@dataclass
class FunctionalEquationReport:
    spec_name: str
    order: int
    comparisons: list[SeriesComparison]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.comparisons)


def _default_pairs(model: SelfSimilarGraph, level: int) -> list:
    o = model.default_origin(level)
    g = model.approximation(level)
    dist = g.distances([o])
    F = sorted((v for v in g.vertices if model.in_F(v, level) and v != o), key=lambda v: (dist[v], v))
    pairs = [(o, o)]
    if F:
        pairs += [(o, F[0]), (F[0], o), (F[0], F[0])]
    return pairs


def functional_equation_series_check(spec: CellSpec, order: int = 12, t: TransferSet | None = None,
                                     pairs=None, mode: str | None = None,
                                     order_cap: int = DEFAULT_ORDER_CAP) -> FunctionalEquationReport:
    """Taylor coefficients of G(v,w|z) and G(φv,φw|d(z))·f(z), both exact, up to ``order``."""
    if order > order_cap:
        raise ValueError(f"order {order} exceeds the cap {order_cap}")
    t = t or compute_transfer(spec)
    model = SelfSimilarGraph(spec, mode)
    level = 3
    pairs = pairs or _default_pairs(model, level)
    ds = t.d.series(order)
    fs = t.f.series(order)
    out = []
    for v, w in pairs:
        lhs = _pair_series(model, level, v, w, order)
        pv, pw = model.phi(v, level), model.phi(w, level)
        inner = _pair_series(model, level, pv, pw, order)
        rhs = _series_mul(_series_compose(inner, ds, order), fs, order)
        out.append(SeriesComparison((format_label(v), format_label(w)), lhs, rhs))
    return FunctionalEquationReport(spec.name, order, out)


def _pair_series(model: SelfSimilarGraph, level: int, v, w, order: int) -> list[Fraction]:
    lvl, _, dists = walk_series(model, level, v, order)
    wl = model.embed(w, lvl - level)
    return [p.get(wl, Fraction(0)) for p in dists]
