"""Forward and backward dynamics of the transition function d on the Riemann sphere."""
from __future__ import annotations

import logging
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .ratfun import INF, IndeterminateEvaluation, RationalFunction, batch_roots, is_inf, numeric_roots

log = logging.getLogger(__name__)

DEDUP_RADIUS = 1e-9
POINT_BUDGET = 1_000_000
SNAP_TOL = 1e-9
CLUSTER_TOL = 1e-6
RESIDUAL_TOL = 1e-8
MIN_CLASSIFY_DEPTH = 8
FIXED_POINT_TOL = 1e-12


class NotInBasin(ArithmeticError):
    """The forward orbit did not reach the attraction radius (max_iter hit or a repelling fixed point reached)."""

    def __init__(self, z, iterations, reason: str | None = None):
        self.z, self.iterations, self.reason = z, iterations, reason
        super().__init__(f"forward orbit of {z} {reason or 'undecided'} after {iterations} iterations")


@dataclass
class ForwardOrbit:
    converges_to_zero: bool
    iterations: int
    orbit: list[complex]
    reason: str | None = None


def _eval(d: RationalFunction, z: complex) -> complex:
    try:
        return d.eval(z)
    except IndeterminateEvaluation:
        return d.eval(z, prec=256)


@lru_cache(maxsize=32)
def repelling_fixed_points(d: RationalFunction) -> tuple[complex, ...]:
    """Finite fixed points p of d with |d'(p)| > 1."""
    eq = d.numerator - d.denominator * RationalFunction.z().numerator
    dd = d.derivative()
    out = []
    for p in (numeric_roots(eq.float_coefficients()) if eq.degree > 0 else []):
        try:
            mult = dd.eval(p)
        except IndeterminateEvaluation:
            continue
        if is_inf(mult) or abs(mult) > 1:
            out.append(complex(p))
    return tuple(out)


def forward_orbit(d: RationalFunction, z, max_iter: int = 200, attraction_radius: float = 0.5) -> ForwardOrbit:
    """Iterate d until |d^n z| < attraction_radius or max_iter steps.

    An orbit that lands on a repelling fixed point is stopped there: in
    floating point it would otherwise drift off and could fall into the basin.
    """
    z = complex(z)
    orbit = [z]
    fixed = repelling_fixed_points(d)
    for n in range(max_iter + 1):
        cur = orbit[-1]
        if not is_inf(cur) and abs(cur) < attraction_radius:
            return ForwardOrbit(True, n, orbit)
        if not is_inf(cur) and any(abs(cur - p) <= FIXED_POINT_TOL * (1 + abs(p)) for p in fixed):
            return ForwardOrbit(False, n, orbit, "reached a repelling fixed point")
        if n == max_iter:
            break
        orbit.append(_eval(d, cur))
    return ForwardOrbit(False, max_iter, orbit)


def _coefficient_arrays(d: RationalFunction) -> tuple[np.ndarray, np.ndarray, int]:
    deg = d.degree
    N = np.zeros(deg + 1)
    D = np.zeros(deg + 1)
    nc = d.numerator.float_coefficients()
    dc = d.denominator.float_coefficients()
    N[: len(nc)] = nc
    D[: len(dc)] = dc
    return N, D, deg


def preimages(d: RationalFunction, w) -> list[complex]:
    """All z with d(z) = w, with multiplicity (deg d points on the sphere)."""
    N, D, deg = _coefficient_arrays(d)
    w = complex(w)
    coeffs = D.astype(complex) if is_inf(w) else N - w * D
    top = int(np.max(np.nonzero(np.abs(coeffs) > 0)[0])) if np.any(coeffs != 0) else -1
    if top < 0:
        raise ValueError("d is constant on the preimage equation")
    rts = numeric_roots(coeffs[: top + 1]) if top > 0 else []
    rts = _merge_clusters(np.asarray(rts, dtype=complex))
    out = [complex(snap(r)) for r in rts]
    out += [INF] * (deg - top)
    return sorted(out, key=lambda c: (c.real, c.imag))


def snap(z: complex, tol: float = SNAP_TOL) -> complex:
    if is_inf(z):
        return z
    return complex(z.real, 0.0) if abs(z.imag) < tol * (1 + abs(z.real)) else z


def _merge_clusters(rts: np.ndarray, tol: float = CLUSTER_TOL) -> np.ndarray:
    """Replace near-coincident roots (numerical double roots) by their centroid."""
    rts = rts.copy()
    n = len(rts)
    used = np.zeros(n, bool)
    for i in range(n):
        if used[i]:
            continue
        close = [j for j in range(i, n) if not used[j] and abs(rts[j] - rts[i]) < tol * (1 + abs(rts[i]))]
        if len(close) > 1:
            c = rts[close].mean()
            rts[close] = c
        used[close] = True
    return rts


@dataclass
class OrbitTree:
    seeds: list[complex]
    depth: int
    points: np.ndarray          # real parts of retained (real, finite) points
    point_depth: np.ndarray
    parent: np.ndarray          # index into ``points`` (-1 for seeds, -2 for ∞ parents)
    has_infinity: bool
    infinity_depth: int | None
    dedup_radius: float
    truncated: bool = False
    nonreal: list[tuple[complex, int]] = field(default_factory=list)
    snapped: int = 0
    max_residual: float = 0.0
    generated: int = 0

    def at_depth(self, k: int) -> np.ndarray:
        return np.sort(self.points[self.point_depth <= k])

    @property
    def size(self) -> int:
        return len(self.points) + int(self.has_infinity)


def _dedup_new(known_sorted: np.ndarray, cand: np.ndarray, radius: float):
    """Indices into ``cand`` of points not within radius of known points or of each other."""
    if len(cand) == 0:
        return np.array([], dtype=int)
    order = np.argsort(cand, kind="stable")
    c = cand[order]
    tol = radius * (1 + np.abs(c))
    keep = np.ones(len(c), bool)
    keep[1:] = np.diff(c) > tol[1:]
    if len(known_sorted):
        pos = np.searchsorted(known_sorted, c)
        lo = np.abs(c - known_sorted[np.clip(pos - 1, 0, len(known_sorted) - 1)])
        hi = np.abs(known_sorted[np.clip(pos, 0, len(known_sorted) - 1)] - c)
        keep &= np.minimum(lo, hi) > tol
    return order[keep]


def backward_orbit(d: RationalFunction, seeds, depth: int, dedup_radius: float = DEDUP_RADIUS,
                   budget: int = POINT_BUDGET) -> OrbitTree:
    """Breadth-first preimage tree of ``seeds`` under d, deduplicated.

    Non-real preimages (beyond the snapping tolerance) are recorded in
    ``nonreal`` and not expanded further.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    N, D, deg = _coefficient_arrays(d)
    seeds = [snap(complex(s)) for s in seeds]
    pts: list[float] = []
    pdepth: list[int] = []
    parent: list[int] = []
    nonreal: list[tuple[complex, int]] = []
    has_inf = False
    inf_depth = None
    for s in seeds:
        if is_inf(s):
            if not has_inf:
                has_inf, inf_depth = True, 0
        elif s.imag != 0:
            nonreal.append((s, 0))
        else:
            pts.append(s.real)
            pdepth.append(0)
            parent.append(-1)
    vals = np.array(pts, dtype=float)
    idx = _dedup_new(np.array([]), vals, dedup_radius)
    idx.sort()
    points = vals[idx]
    point_depth = np.zeros(len(points), dtype=int)
    parents = np.full(len(points), -1, dtype=int)
    frontier = np.arange(len(points))
    inf_frontier = has_inf
    truncated = False
    snapped = 0
    max_res = 0.0
    generated = len(points)
    lead_ratio = N[deg] / D[deg] if D[deg] != 0 else None  # d(∞) when degrees match
    inf_next = False
    for k in range(1, depth + 1):
        ws = points[frontier]
        new_vals: list[np.ndarray] = []
        new_par: list[np.ndarray] = []
        regular = np.ones(len(ws), bool)
        if lead_ratio is not None:
            regular &= ~np.isclose(ws, lead_ratio, rtol=1e-13, atol=0)
        if np.any(regular):
            C = N[None, :] - ws[regular, None] * D[None, :]
            roots = batch_roots(C)
            roots = np.array([_merge_clusters(r) for r in roots]) if deg > 1 else roots
            new_vals.append(roots.ravel())
            new_par.append(np.repeat(frontier[regular], deg))
        for i in np.nonzero(~regular)[0]:
            pre = [p for p in preimages(d, ws[i]) if not is_inf(p)]
            new_vals.append(np.array(pre, dtype=complex))
            new_par.append(np.full(len(pre), frontier[i]))
            if len(pre) < deg and not has_inf:
                has_inf, inf_depth = True, k
                inf_next = True
        if inf_frontier:
            pre = preimages(d, INF)
            fin = [p for p in pre if not is_inf(p)]
            new_vals.append(np.array(fin, dtype=complex))
            new_par.append(np.full(len(fin), -2))
        inf_frontier, inf_next = inf_next, False
        if not new_vals:
            break
        cand = np.concatenate(new_vals) if new_vals else np.array([], complex)
        par = np.concatenate(new_par)
        generated += len(cand)
        real_mask = np.abs(cand.imag) < SNAP_TOL * (1 + np.abs(cand.real))
        snapped += int(np.count_nonzero(real_mask & (cand.imag != 0)))
        for z in cand[~real_mask]:
            nonreal.append((complex(z), k))
        cand_r = cand.real[real_mask]
        par_r = par[real_mask]
        # residual check against the parent value
        parent_vals = np.where(par_r >= 0, points[np.clip(par_r, 0, None)] if len(points) else 0, np.inf)
        fin = np.isfinite(parent_vals)
        if np.any(fin):
            dz = _eval_array(N, D, cand_r[fin])
            res = np.abs(dz - parent_vals[fin]) / (1 + np.abs(parent_vals[fin]))
            res = res[np.isfinite(res)]
            if len(res):
                max_res = max(max_res, float(res.max()))
        known = np.sort(points)
        keep = _dedup_new(known, cand_r, dedup_radius)
        keep.sort()
        if len(points) + len(keep) > budget:
            keep = keep[: max(budget - len(points), 0)]
            truncated = True
        start = len(points)
        points = np.concatenate([points, cand_r[keep]])
        point_depth = np.concatenate([point_depth, np.full(len(keep), k)])
        parents = np.concatenate([parents, par_r[keep]])
        frontier = np.arange(start, len(points))
        if truncated:
            log.warning("backward orbit truncated at depth %d (budget %d points)", k, budget)
            break
    if snapped:
        log.info("snapped %d preimages to the real axis", snapped)
    return OrbitTree(seeds, depth, points, point_depth, parents, has_inf, inf_depth, dedup_radius,
                     truncated, nonreal, snapped, max_res, generated)


def _eval_array(N: np.ndarray, D: np.ndarray, z: np.ndarray) -> np.ndarray:
    num = np.polyval(N[::-1], z)
    den = np.polyval(D[::-1], z)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


# Julia set and exceptional set ---------------------------------------------

def _lambda_gap(points: np.ndarray, has_inf: bool) -> float:
    """Largest gap of λ = 1/z ∈ [-1, 1] inside the hull of the point set."""
    lam = [1 / p for p in points if p != 0]
    if has_inf:
        lam.append(0.0)
    if len(lam) < 2:
        return float("nan")
    lam = np.sort(np.array(lam))
    return float(np.max(np.diff(lam)))


def window_gap(points: np.ndarray, lo: float = -10.0, hi: float = 10.0) -> float:
    """Largest gap of the point set inside [lo, hi] minus (-1, 1), window edges included."""
    worst = 0.0
    for a, b in ((lo, -1.0), (1.0, hi)):
        if b <= a:
            continue
        inside = np.sort(points[(points >= a) & (points <= b)])
        if len(inside) == 0:
            worst = max(worst, b - a)
            continue
        seq = np.concatenate([[a], inside, [b]])
        worst = max(worst, float(np.max(np.diff(seq))))
    return worst


@dataclass
class JuliaApproximation:
    points: np.ndarray
    has_infinity: bool
    depth: int
    max_gap: float
    gaps_above_resolution: int
    resolution: float
    nonreal: list[tuple[complex, int]]
    tree: OrbitTree

    @property
    def size(self) -> int:
        return len(self.points) + int(self.has_infinity)


def _julia_from_tree(tree: OrbitTree, resolution: float = 1e-3) -> JuliaApproximation:
    pts = np.sort(tree.points)
    lam = np.sort(np.concatenate([1 / pts[pts != 0], [0.0] if tree.has_infinity else []]))
    gaps = np.diff(lam) if len(lam) > 1 else np.array([])
    return JuliaApproximation(pts, tree.has_infinity, tree.depth, _lambda_gap(pts, tree.has_infinity),
                              int(np.count_nonzero(gaps > resolution)), resolution, tree.nonreal, tree)


def approximate_julia(t, depth: int, budget: int = POINT_BUDGET) -> JuliaApproximation:
    """Backward orbit of the repelling fixed point 1."""
    tree = backward_orbit(t.d, [1.0], depth, budget=budget)
    if tree.nonreal:
        log.warning("%d non-real preimages in the Julia approximation (reported, not retained)", len(tree.nonreal))
    return _julia_from_tree(tree)


def exceptional_set(t, depth: int, budget: int = POINT_BUDGET) -> OrbitTree:
    """Backward orbit of poles(f) ∪ poles(Ĉ): a truncation of D."""
    seeds = list(t.poles_f) + list(t.poles_cell)
    return backward_orbit(t.d, seeds, depth, budget=budget)


@dataclass
class Classification:
    verdict: str
    gaps: dict[int, float]
    ratios: list[float]
    heuristic: bool = True

    def __str__(self):
        return f"{self.verdict} (heuristic)"


def classify_julia(j: JuliaApproximation, min_depth: int = MIN_CLASSIFY_DEPTH, window: int = 3) -> Classification:
    """Heuristic interval-like / Cantor-like verdict from the λ-gap history.

    The largest gap is computed for the points present at depths
    ``depth - window .. depth``. Halving-type decay over every step means
    interval-like, an unchanged gap over every step means Cantor-like.
    """
    tree = j.tree
    lo = max(j.depth - window, 0)
    gaps = {}
    for k in range(lo, j.depth + 1):
        pts = tree.at_depth(k)
        inf = tree.has_infinity and tree.infinity_depth is not None and tree.infinity_depth <= k
        gaps[k] = _lambda_gap(pts, inf)
    vals = [gaps[k] for k in sorted(gaps)]
    ratios = [b / a if a and np.isfinite(a) and np.isfinite(b) else float("nan") for a, b in zip(vals, vals[1:])]
    if j.depth < min_depth or len(ratios) < window:
        verdict = "unresolved"
    elif all(r <= 0.75 for r in ratios):
        verdict = "interval-like"
    elif all(abs(r - 1) <= 0.01 for r in ratios) and vals[-1] > 10 * j.resolution:
        verdict = "Cantor-like"
    else:
        verdict = "unresolved"
    return Classification(verdict, gaps, ratios)


def laplacian(z) -> float:
    """λ_Δ = 1 - 1/z, with ∞ mapped to 1."""
    z = complex(z)
    if is_inf(z):
        return 1.0
    return float((1 - 1 / z).real)


@dataclass
class SpectrumReport:
    inner: JuliaApproximation
    outer_extra: np.ndarray
    outer_has_infinity: bool
    classification: Classification
    reciprocal_inner: np.ndarray
    reciprocal_outer: np.ndarray
    laplacian_inner: np.ndarray
    laplacian_outer: np.ndarray
    params: dict
    exceptional: OrbitTree
    notes: list[str] = field(default_factory=list)

    @property
    def outer_points(self) -> np.ndarray:
        return self.reciprocal_outer


def _lap_array(points: np.ndarray, has_inf: bool) -> np.ndarray:
    vals = 1 - 1 / points[points != 0]
    if has_inf:
        vals = np.append(vals, 1.0)
    return np.sort(vals)


def spectrum_bounds(t, depth: int, exceptional_depth: int | None = None, budget: int = POINT_BUDGET) -> SpectrumReport:
    """Inner bound J and outer bound J ∪ D (truncated), in reciprocal and Laplacian form."""
    edepth = depth if exceptional_depth is None else exceptional_depth
    j = approximate_julia(t, depth, budget)
    exc = exceptional_set(t, edepth, budget)
    known = np.sort(j.points)
    extra_idx = _dedup_new(known, exc.points, DEDUP_RADIUS)
    extra = np.sort(exc.points[extra_idx])
    outer = np.sort(np.concatenate([known, extra]))
    outer_inf = j.has_infinity or exc.has_infinity
    cls = classify_julia(j)
    notes = []
    if cls.verdict == "Cantor-like":
        notes.append("Cantor-like case: the reciprocal spectrum coincides with the singularity set of the Green function")
    if j.tree.truncated or exc.truncated:
        notes.append("point budget reached; bounds are truncated")
    params = {"depth": depth, "exceptional_depth": edepth, "budget": budget, "dedup_radius": DEDUP_RADIUS}
    return SpectrumReport(
        inner=j,
        outer_extra=extra,
        outer_has_infinity=outer_inf,
        classification=cls,
        reciprocal_inner=known,
        reciprocal_outer=outer,
        laplacian_inner=_lap_array(known, j.has_infinity),
        laplacian_outer=_lap_array(outer, outer_inf),
        params=params,
        exceptional=exc,
        notes=notes,
    )
