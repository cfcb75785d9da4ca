"""Green functions of the infinite graph: exact base series and the decomposition evaluator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cellmodel import CellSpec, Label, SelfSimilarGraph, format_label
from .dynamics import NotInBasin, forward_orbit
from .ratfun import INF, is_inf
from .transfer import TransferSet

DEFAULT_BASE_RADIUS = 0.5
DEFAULT_SERIES_CAP = 200
DEFAULT_LEVEL_CAP = 400
POLE_TOL = 1e-9


class PoleHit(ArithmeticError):
    """A transfer factor has a pole at the current point (candidate point of D)."""

    def __init__(self, what: str, z: complex, step: int):
        self.what, self.z, self.step = what, z, step
        super().__init__(f"candidate D point: {what} has a pole at d^{step}(z) = {z}")


class AccuracyUnreachable(ArithmeticError):
    pass


class GrowthCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class VertexRef:
    """``level:address:local`` reference to a vertex of the infinite graph."""

    level: int
    address: tuple[int, ...]
    local: str

    @classmethod
    def parse(cls, text: str) -> "VertexRef":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"vertex ref {text!r} must look like level:address:local")
        addr = parts[1].strip()
        digits = () if addr in {"", "ε", "eps", "e"} else tuple(int(x) for x in addr.split("."))
        return cls(int(parts[0]), digits, parts[2].strip())

    def __str__(self):
        return f"{self.level}:{'.'.join(map(str, self.address)) or 'ε'}:{self.local}"

    def resolve(self, model: SelfSimilarGraph) -> tuple[int, Label]:
        return model.parse_ref(str(self))


def _at_level(model: SelfSimilarGraph, level: int, label: Label, target: int) -> Label:
    if target < level:
        raise ValueError("cannot lower the level of a label")
    return model.embed(label, target - level)


# exact base series ---------------------------------------------------------

def walk_series(model: SelfSimilarGraph, level: int, source: Label, order: int,
                level_cap: int = DEFAULT_LEVEL_CAP) -> tuple[int, Label, list[dict[Label, Fraction]]]:
    """Exact n-step distributions from ``source`` for n ≤ order.

    The level is raised until every vertex within distance ``order - 1`` of
    the source has its full neighbourhood, so the distributions coincide
    with those on the infinite graph. Returns ``(level, source label at that
    level, [p^(0), ..., p^(order)])``.
    """
    frontier = set(model.frontier(level))
    while True:
        dist = {source: 0}
        layer = [source]
        ok = source not in frontier or order == 0
        for r in range(1, order):
            if not ok:
                break
            nxt = []
            for u in layer:
                for w in model.neighbours(u, level):
                    if w not in dist:
                        if w in frontier:
                            ok = False
                        dist[w] = r
                        nxt.append(w)
            layer = nxt
        if ok:
            break
        if level >= level_cap:
            raise GrowthCapExceeded(f"level cap {level_cap} reached while growing the approximation")
        source = model.embed(source)
        level += 1
        frontier = set(model.frontier(level))
    dists = [{source: Fraction(1)}]
    cur = {source: 1}
    denom = 1
    # integer numerators over a common denominator keep the propagation fast
    for _ in range(order):
        nxt: dict[Label, int] = {}
        step = 1
        for u in cur:
            step = math.lcm(step, len(model.neighbours(u, level)))
        for u, c in cur.items():
            nb = model.neighbours(u, level)
            share = c * (step // len(nb))
            for w in nb:
                nxt[w] = nxt.get(w, 0) + share
        denom *= step
        cur = nxt
        dists.append({w: Fraction(c, denom) for w, c in cur.items()})
    return level, source, dists


def base_green_series(model: SelfSimilarGraph, x: Label, y: Label, order: int, level: int) -> list[Fraction]:
    """Exact p^(k)(x, y), k = 0..order, on the infinite graph."""
    lvl, xs, dists = walk_series(model, level, x, order)
    ys = _at_level(model, level, y, lvl)
    return [p.get(ys, Fraction(0)) for p in dists]


# decomposition evaluator ---------------------------------------------------

@dataclass
class GreenResult:
    value: complex
    error: float
    depth: int
    series_order: int
    level: int
    base_terms: int = 0
    notes: list[str] = field(default_factory=list)


class GreenEvaluator:
    """Evaluates G(x,y|z) through the self-similarity recursion."""

    def __init__(self, t: TransferSet, mode: str | None = None, base_radius: float = DEFAULT_BASE_RADIUS,
                 series_cap: int = DEFAULT_SERIES_CAP, max_iter: int = 200):
        if not 0 < base_radius < 1:
            raise ValueError("base_radius must lie in (0, 1)")
        self.t = t
        self.spec: CellSpec = t.spec
        self.model = SelfSimilarGraph(t.spec, mode)
        self.base_radius = base_radius
        self.series_cap = series_cap
        self.max_iter = max_iter
        self._series_cache: dict = {}
        self._deg_cache: dict = {}
        self._h_tilde_scale = {b: Fraction(1) for b in self.spec.boundary}
        self._poles = [complex(p) for p in list(t.poles_f) + list(t.poles_cell) if not is_inf(p)]

    def origin(self, level: int = 2) -> tuple[int, Label]:
        return level, self.model.default_origin(level)

    def ref(self, text: str) -> tuple[int, Label]:
        return VertexRef.parse(text).resolve(self.model)

    def degree_in_X(self, label: Label, level: int) -> int:
        key = (label, level)
        if key not in self._deg_cache:
            frontier = set(self.model.frontier(level))
            lab, lvl = label, level
            while lab in frontier:
                lab = self.model.embed(lab)
                lvl += 1
                frontier = set(self.model.frontier(lvl))
            self._deg_cache[key] = len(self.model.neighbours(lab, lvl))
        return self._deg_cache[key]

    def _cell_interior(self, label: Label, level: int) -> bool:
        return not self.model.in_F(label, level)

    def evaluate(self, x: tuple[int, Label], y: tuple[int, Label], z, acc: float = 1e-10) -> GreenResult:
        if acc <= 0:
            raise ValueError("target accuracy must be positive")
        z = complex(z)
        if is_inf(z):
            raise NotInBasin(z, 0)
        orbit = forward_orbit(self.t.d, z, self.max_iter, self.base_radius)
        if not orbit.converges_to_zero:
            raise NotInBasin(z, orbit.iterations, orbit.reason)
        n = orbit.iterations
        pts = orbit.orbit
        for j in range(n):
            for p in self._poles:
                if abs(pts[j] - p) <= POLE_TOL * (1 + abs(p)):
                    raise PoleHit("a transfer function", pts[j], j)
        (lx, xl), (ly, yl) = x, y
        level = max(lx, ly, 1) + n + 2
        xl = _at_level(self.model, lx, xl, level)
        yl = _at_level(self.model, ly, yl, level)
        memo: dict = {}
        const, terms = self._expand(xl, yl, 0, n, pts, level, memo)
        w = pts[n]
        aw = abs(w)
        total_coef = sum(abs(c) for c in terms.values())
        K = 0
        if terms:
            tail = lambda k: aw ** (k + 1) / (1 - aw)
            budget = acc / 2
            while total_coef * tail(K) > budget:
                K += 1
                if K > self.series_cap:
                    raise AccuracyUnreachable(
                        f"series cap {self.series_cap} too small for accuracy {acc} (coefficient mass {total_coef:.3g})")
        value = const
        for (u, v), c in sorted(terms.items()):
            coeffs = self._series(u, v, K, level)
            value += c * _horner(coeffs, w)
        err = (total_coef * aw ** (K + 1) / (1 - aw) if terms else 0.0)
        floor = 64 * np.finfo(float).eps * (n + 1) * (abs(const) + total_coef * (1 / (1 - aw)))
        if floor > acc:
            raise AccuracyUnreachable(f"accuracy {acc} is below the floating-point floor {floor:.3g}")
        err += floor
        return GreenResult(value, err, n, K, level, len(terms))

    def _series(self, u: Label, v: Label, K: int, level: int) -> list[float]:
        key = (u, level)
        hit = self._series_cache.get(key)
        if hit is None or hit[0] < K:
            lvl, _, dists = walk_series(self.model, level, u, K)
            hit = (K, lvl, dists)
            self._series_cache[key] = hit
        _, lvl, dists = hit
        vs = _at_level(self.model, level, v, lvl)
        return [float(p.get(vs, 0)) for p in dists[:K + 1]]

    def _val(self, r, j, pts, what):
        val = r.eval(pts[j])
        if is_inf(val):
            raise PoleHit(what, pts[j], j)
        return val

    def _expand(self, x: Label, y: Label, j: int, n: int, pts, level: int, memo: dict):
        """G(x, y | d^j z) as ``const + Σ coef · G(u, v | d^n z)``."""
        key = (x, y, j)
        if key in memo:
            return memo[key]
        model, spec, t = self.model, self.spec, self.t
        if j == n:
            out = (0j, {(x, y): 1 + 0j})
        elif self._cell_interior(x, level):
            cell, xn = model.cell_of(x, level)
            const, terms = 0j, {}
            if self._cell_interior(y, level) and model.cell_of(y, level)[0] == cell:
                const += self._val(t.h[(xn, model.cell_of(y, level)[1])], j, pts, f"h({xn},·)")
            for b in spec.boundary:
                coef = self._val(t.h[(xn, b)], j, pts, f"h({xn},{b})")
                if coef == 0:
                    continue
                c2, t2 = self._expand(model.canonical((cell, b)), y, j, n, pts, level, memo)
                const, terms = _accumulate(const, terms, coef, c2, t2)
            out = (const, terms)
        elif self._cell_interior(y, level):
            cell, yn = model.cell_of(y, level)
            const, terms = 0j, {}
            for b in spec.boundary:
                wl = model.canonical((cell, b))
                scale = spec.degree[b] / self.degree_in_X(wl, level)
                coef = self._val(t.h_tilde[(b, yn)], j, pts, f"h~({b},{yn})") * scale
                if coef == 0:
                    continue
                c2, t2 = self._expand(x, wl, j, n, pts, level, memo)
                const, terms = _accumulate(const, terms, coef, c2, t2)
            out = (const, terms)
        else:
            fj = self._val(t.f, j, pts, "f")
            c2, t2 = self._expand(model.phi(x, level), model.phi(y, level), j + 1, n, pts, level, memo)
            out = _accumulate(0j, {}, fj, c2, t2)
        memo[key] = out
        return out


def _accumulate(const, terms, coef, c2, t2):
    terms = dict(terms)
    for k, v in t2.items():
        terms[k] = terms.get(k, 0) + coef * v
    return const + coef * c2, terms


def _horner(coeffs, w: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * w + c
    return acc


def evaluate_green(t: TransferSet, x: str, y: str, z, acc: float = 1e-10,
                   base_radius: float = DEFAULT_BASE_RADIUS, series_cap: int = DEFAULT_SERIES_CAP,
                   mode: str | None = None) -> GreenResult:
    """G(x,y|z) for vertex refs ``x``, ``y`` (``level:address:local``)."""
    ev = GreenEvaluator(t, mode, base_radius, series_cap)
    return ev.evaluate(ev.ref(x), ev.ref(y), z, acc)


# checks and probes ---------------------------------------------------------

@dataclass
class FunctionalEquationResidual:
    lhs: complex
    rhs: complex
    residual: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound


def check_functional_equation_numeric(t: TransferSet, v: str, w: str, z, acc: float = 1e-12,
                                      mode: str | None = None) -> FunctionalEquationResidual:
    """|G(v,w|z) - G(φv,φw|d(z)) f(z)| against the summed error bounds."""
    ev = GreenEvaluator(t, mode)
    (lv, vl), (lw, wl) = ev.ref(v), ev.ref(w)
    level = max(lv, lw, 1) + 1
    vl = _at_level(ev.model, lv, vl, level)
    wl = _at_level(ev.model, lw, wl, level)
    if not (ev.model.in_F(vl, level) and ev.model.in_F(wl, level)):
        raise ValueError("both vertices must lie in F")
    z = complex(z)
    lhs = ev.evaluate((level, vl), (level, wl), z, acc)
    dz = t.d.eval(z)
    fz = t.f.eval(z)
    if is_inf(fz) or is_inf(dz):
        raise PoleHit("f or d", z, 0)
    inner = ev.evaluate((level, ev.model.phi(vl, level)), (level, ev.model.phi(wl, level)), dz, acc)
    rhs = inner.value * fz
    bound = lhs.error + abs(fz) * inner.error + 1e-14 * (abs(lhs.value) + abs(rhs))
    return FunctionalEquationResidual(lhs.value, rhs, abs(lhs.value - rhs), bound)


@dataclass
class SingularityReport:
    radii: list[float]
    values: list[float]
    errors: list[float]
    monotone: bool
    growth_exponent: float
    local_slopes: list[float]
    integer_pole_fit: bool
    first_passage: float | None
    notes: list[str] = field(default_factory=list)


def singularity_probe(t: TransferSet, x: str | None = None, y: str | None = None, k_max: int = 20,
                      acc: float = 1e-10, fit_last: int = 8) -> SingularityReport:
    """G(o,o|1 - 2^-k) for k = 1..k_max, growth exponent fit and F(x,y|1⁻).

    The exponent is the least-squares slope of log G against log(1 - r) over
    the last ``fit_last`` radii. ``acc`` is relative to the size of G.
    """
    ev = GreenEvaluator(t)
    o = ev.origin()
    radii, vals, errs = [], [], []
    scale = 1.0
    for k in range(1, k_max + 1):
        r = 1 - 2.0 ** (-k)
        # G grows with k: ask for ``acc`` relative to a bound on the new value
        res = ev.evaluate(o, o, r, acc * scale)
        scale = 2 * max(1.0, abs(res.value))
        radii.append(r)
        vals.append(res.value.real)
        errs.append(res.error)
    monotone = all(b > a for a, b in zip(vals, vals[1:]))
    lx = np.log([1 - r for r in radii])
    ly = np.log(vals)
    m = min(fit_last, len(radii))
    slope = float(np.polyfit(lx[-m:], ly[-m:], 1)[0]) if m >= 2 else float("nan")
    local = [float((ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i])) for i in range(len(lx) - 1)]
    integer_fit = abs(slope - round(slope)) < 0.02 and round(slope) != 0
    fp = None
    notes = []
    if x is not None and y is not None:
        xr, yr = ev.ref(x), ev.ref(y)
        r = radii[-1]
        gxy = ev.evaluate(xr, yr, r, acc * scale).value.real
        gyy = ev.evaluate(yr, yr, r, acc * scale).value.real
        fp = gxy / gyy if xr != yr else 1 - 1 / gyy
        notes.append(f"F(x,y|r) at r = {r} via G(x,y)/G(y,y)" if xr != yr else "F(y,y|r) = 1 - 1/G(y,y|r)")
    return SingularityReport(radii, vals, errs, monotone, slope, local, integer_fit, fp, notes)


@dataclass
class ShellReport:
    n: list[int]
    a: list[int]
    bounded_by: int
    bounded: bool
    partial_sums: list[float]


def shell_conductance_check(spec: CellSpec, n_max: int = 8, mode: str | None = None) -> ShellReport:
    """Edges leaving O_n (the union of n-cells with the origin on their boundary) for n ≤ n_max.

    O_n is the copy of Ĉ_n nested at the origin in every branch; its cut edges
    are counted from its boundary vertices without building the graph.
    """
    model = SelfSimilarGraph(spec, mode)
    prefixes = [(c,) for c in range(model.copies)] if model.star else [()]
    ns, counts = [], []
    for n in range(0, n_max + 1):
        level = n + 2
        core = (model.nest,) * (level - n)
        boundary = set()
        for p in prefixes:
            for b in spec.boundary:
                lab = model.canonical((p + core, b))
                boundary.add(lab)

        def inside(lab, core=core):
            pre, c, name = model.split(lab)
            return lab in boundary or (c[:len(core)] == core and len(c) >= len(core)) or lab == model.origin

        cut = 0
        for u in boundary:
            if model.star and u == model.origin:
                continue
            for w in model.neighbours(u, level):
                if not inside(w):
                    cut += 1
        ns.append(n)
        counts.append(cut)
    sums = list(np.cumsum([1 / a if a else math.inf for a in counts]))
    bound = max(counts) if counts else 0
    # empirical: the second half of the sequence may not exceed the first half
    half = len(counts) // 2
    bounded = bool(counts) and max(counts[half:]) <= max(counts[: half + 1])
    return ShellReport(ns, counts, bound, bounded, [float(s) for s in sums])
