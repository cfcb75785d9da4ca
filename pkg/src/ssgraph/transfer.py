"""Transfer functions d, f, h and h̃ of a cell, and checks of their basic properties."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cellmodel import CellSpec, check_bounded_geometry, check_symmetry
from .ratfun import INF, Polynomial, RationalFunction, distinct_roots, solve_resolvent

MATCH_RADIUS = 1e-9


class TransferError(ValueError):
    """The spec cannot produce a consistent one-variable transfer set."""


@dataclass
class TransferSet:
    spec: CellSpec
    d: RationalFunction
    f: RationalFunction
    h: dict[tuple[str, str], RationalFunction]
    h_tilde: dict[tuple[str, str], RationalFunction]
    poles_f: list[complex]
    poles_cell: list[complex]
    zeroes_f: list[complex]
    theta: int
    diam_boundary: int
    notes: list[str] = field(default_factory=list)

    @property
    def degree(self) -> int:
        return self.d.degree


def _dedup(points, radius: float = MATCH_RADIUS) -> list[complex]:
    out: list[complex] = []
    for p in sorted(points, key=lambda c: (c.real, c.imag)):
        if p == INF:
            if INF not in out:
                out.append(INF)
            continue
        if not any(q != INF and abs(p - q) <= radius * (1 + abs(p)) for q in out):
            out.append(p)
    return out


def _finite_roots(p: Polynomial, prec: int = 53) -> list[complex]:
    if p.degree < 1:
        return []
    return [r for r, _ in distinct_roots(p, prec)]


def poles(r: RationalFunction, prec: int = 53) -> list[complex]:
    """Poles on the sphere, ∞ included when deg num > deg den."""
    out = _finite_roots(r.denominator, prec)
    if r.numerator.degree > r.denominator.degree:
        out.append(INF)
    return out


def compute_transfer(spec: CellSpec, check_pairs: bool = True, prec: int = 53) -> TransferSet:
    """Exact d, f, h and h̃ for a doubly symmetric cell with bounded geometry.

    d and f are recomputed from every boundary vertex (and every target) and
    compared exactly unless ``check_pairs`` is false.
    """
    geom = check_bounded_geometry(spec)
    if not geom.ok:
        raise TransferError(f"bounded geometry fails: interior neighbour counts {geom.interior_neighbours}")
    sym = check_symmetry(spec)
    if not sym.doubly_symmetric:
        raise TransferError("the cell is not doubly symmetric on its boundary")
    B = spec.boundary
    sources = B if check_pairs else B[:1]
    d = f = None
    scale = spec.theta - 1
    for v in sources:
        Q = spec.transition(absorbing=[b for b in B if b != v])
        row = solve_resolvent(Q, [v], list(B))[0]
        fv = row[B.index(v)]
        for w, g in zip(B, row):
            if w == v:
                continue
            dvw = g * scale
            if d is None:
                d = dvw
            elif dvw != d:
                raise TransferError(f"d depends on the boundary pair: ({B[0]},{B[1]}) vs ({v},{w})")
            if not check_pairs:
                break
        if f is None:
            f = fv
        elif fv != f:
            raise TransferError(f"f depends on the boundary vertex ({B[0]} vs {v})")

    interior = list(spec.interior)
    h: dict[tuple[str, str], RationalFunction] = {}
    if interior:
        Q = spec.transition(absorbing=B)
        table = solve_resolvent(Q, interior, list(spec.vertices))
        for x, row in zip(interior, table):
            for y, g in zip(spec.vertices, row):
                h[(x, y)] = g
    deg = spec.degree
    h_tilde = {(w, y): h[(y, w)] * Fraction(deg[y], deg[w]) for w in B for y in interior}

    cell_poles = []
    for g in h.values():
        cell_poles.extend(_finite_roots(g.denominator, prec))
    return TransferSet(
        spec=spec,
        d=d,
        f=f,
        h=h,
        h_tilde=h_tilde,
        poles_f=_dedup(poles(f, prec)),
        poles_cell=_dedup(cell_poles),
        zeroes_f=_dedup(_finite_roots(f.numerator, prec)),
        theta=spec.theta,
        diam_boundary=spec.diam_boundary,
    )


@dataclass
class FixedPointReport:
    order_at_zero: int
    diam_boundary: int
    d_at_one: Fraction | None
    d_prime_at_one: Fraction | None
    ok: bool
    failures: list[str]


def check_fixed_points(t: TransferSet) -> FixedPointReport:
    """Exact checks: ord₀ d = diam θC ≥ 2, d(1) = 1 and d'(1) > 2."""
    d = t.d
    order = d.numerator.valuation()
    d1 = d.exact_value(1)
    dp1 = d.derivative().exact_value(1)
    fails = []
    if d.denominator.exact_value(0) == 0 or order != t.diam_boundary:
        fails.append(f"order of d at 0 is {order}, boundary diameter is {t.diam_boundary}")
    if t.diam_boundary < 2:
        fails.append("boundary diameter below 2")
    if d1 != 1:
        fails.append(f"d(1) = {d1}")
    if dp1 is None or dp1 <= 2:
        fails.append(f"d'(1) = {dp1} is not > 2")
    return FixedPointReport(order, t.diam_boundary, d1, dp1, not fails, fails)


def check_zeroes_lemma(t: TransferSet, radius: float = 1e-8) -> bool:
    """Every zero of f lies within ``radius`` of a pole of the cell."""
    return all(
        any(abs(z - p) <= radius * (1 + abs(z)) for p in t.poles_cell if p != INF)
        for z in t.zeroes_f
    )


def first_return(spec: CellSpec, v: str | None = None) -> RationalFunction:
    """F̂(v,v|z): first return to v, avoiding the rest of the boundary, through the cell."""
    v = spec.boundary[0] if v is None else v
    B = spec.boundary
    interior = list(spec.interior)
    Q = spec.transition(absorbing=B)
    table = solve_resolvent(Q, interior, [v])
    zz = RationalFunction.z()
    total = RationalFunction.constant(0)
    step = Fraction(1, spec.degree[v])
    for u, row in zip(interior, table):
        if u in spec.adjacency[v]:
            total = total + zz * step * row[0]
    return total


def first_passage_identity(t: TransferSet) -> bool:
    """F̂(v,v) == 1 - 1/f exactly, for every boundary vertex."""
    target = 1 - 1 / t.f
    return all(first_return(t.spec, v) == target for v in t.spec.boundary)


def series_sanity(t: TransferSet, order: int = 30) -> bool:
    """Power-series coefficients of d and f are probabilities-like (d: ≥0 and sum ≤ 1; f: in [0,1])."""
    ds = t.d.series(order)
    fs = t.f.series(order)
    return all(c >= 0 for c in ds) and sum(ds) <= 1 and all(0 <= c <= 1 for c in fs)
