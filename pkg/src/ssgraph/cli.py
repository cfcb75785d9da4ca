"""Command-line front end: ``ssgraph <subcommand> SPEC [options]``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .cellmodel import (
    BUNDLED, SizeCapExceeded, SpecError, SymmetrySearchAborted, bundled_path, check_bounded_geometry,
    check_symmetry, parse_cell_spec,
)
from .dynamics import NotInBasin, approximate_julia, classify_julia, exceptional_set, spectrum_bounds, window_gap
from .green import AccuracyUnreachable, GreenEvaluator, GrowthCapExceeded, PoleHit, shell_conductance_check, \
    singularity_probe
from .oracle import functional_equation_series_check, verify_decimation_identities
from .ratfun import IndeterminateEvaluation, RootFindingError, parse_point
from .transfer import TransferError, check_fixed_points, check_zeroes_lemma, compute_transfer, \
    first_passage_identity

EXIT_VALIDATION, EXIT_NUMERIC, EXIT_RESOURCE = 1, 2, 3


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _resolve_spec_path(text: str) -> Path:
    p = Path(text)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if stem in BUNDLED:
        return bundled_path(stem)
    raise CliFailure(EXIT_VALIDATION, f"cannot read spec {text!r}")


def _load(args):
    path = _resolve_spec_path(args.spec)
    raw = path.read_bytes()
    args.spec_sha256 = hashlib.sha256(raw).hexdigest()
    return parse_cell_spec(raw.decode("utf-8"))


def _header(args, extra: dict | None = None) -> list[str]:
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in {"func", "spec_sha256", "out", "json"} and v is not None}
    if extra:
        params.update(extra)
    return [
        f"# ssgraph {__version__}",
        f"# spec sha256 {args.spec_sha256}",
        "# params " + " ".join(f"{k}={v}" for k, v in params.items()),
    ]


def _emit(args, report: dict, text_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True, default=str))
    else:
        print("\n".join(text_lines))


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_points_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    buf.write("\n".join(header) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "depth", "kind"])
    for row in rows:
        w.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _fmt(x: float) -> str:
    return repr(float(x))


def _tree_rows(tree, kind: str):
    rows = [(_fmt(p), "0.0", int(k), kind) for p, k in sorted(zip(tree.points, tree.point_depth))]
    if tree.has_infinity:
        rows.append(("inf", "0.0", int(tree.infinity_depth), kind))
    return rows


# subcommands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    path = _resolve_spec_path(args.spec)
    raw = path.read_bytes()
    args.spec_sha256 = hashlib.sha256(raw).hexdigest()
    rows = []
    try:
        spec = parse_cell_spec(raw.decode("utf-8"))
    except SpecError as exc:
        for v in exc.violations:
            rows.append((v.axiom, "fail", v.message))
        _emit(args, {"ok": False, "checks": rows}, [f"{a:14s} {s}  {m}" for a, s, m in rows] + ["result: FAIL"])
        return EXIT_VALIDATION
    for axiom in ("syntax", "S1", "F1", "F2", "connectivity", "substitution", "origin"):
        rows.append((axiom, "pass", ""))
    geom = check_bounded_geometry(spec)
    rows.append(("bounded-geometry", "pass" if geom.ok else "fail",
                 f"interior neighbours {geom.interior_neighbours}, need {geom.required}"))
    try:
        sym = check_symmetry(spec)
        rows.append(("S2", "pass" if sym.simply_symmetric else "fail", "transitive on the boundary"))
        rows.append(("S3", "pass" if sym.doubly_symmetric else "fail", "transitive on ordered boundary pairs"))
    except SymmetrySearchAborted as exc:
        rows.append(("S2/S3", "fail", str(exc)))
    ok = all(s == "pass" for _, s, _ in rows)
    lines = _header(args) + [f"spec {spec.name}: theta={spec.theta} mu={spec.mu} vertices={len(spec.vertices)}"]
    lines += [f"{a:18s} {s:4s}  {m}".rstrip() for a, s, m in rows]
    lines.append("result: " + ("PASS" if ok else "FAIL"))
    _emit(args, {"ok": ok, "spec": spec.name, "checks": rows}, lines)
    return 0 if ok else EXIT_VALIDATION


def _transfer(args):
    spec = _load(args)
    return spec, compute_transfer(spec, prec=args.precision)


def cmd_functions(args) -> int:
    spec, t = _transfer(args)
    fp = check_fixed_points(t)
    report = {
        "d": t.d.integer_form(),
        "f": t.f.integer_form(),
        "h": {f"{x},{y}": g.integer_form() for (x, y), g in sorted(t.h.items())},
        "diam_boundary": t.diam_boundary,
        "poles_f": [str(p) for p in t.poles_f],
        "poles_cell": [str(p) for p in t.poles_cell],
        "zeroes_f": [str(p) for p in t.zeroes_f],
        "fixed_points_ok": fp.ok,
        "zeroes_lemma": check_zeroes_lemma(t),
        "first_passage_identity": first_passage_identity(t),
    }
    lines = _header(args)
    lines.append(f"d(z) = {t.d}")
    lines.append(f"   numerator {[str(c) for c in t.d.numerator.coefficients]}")
    lines.append(f"   denominator {[str(c) for c in t.d.denominator.coefficients]}")
    lines.append(f"f(z) = {t.f}")
    lines.append(f"   numerator {[str(c) for c in t.f.numerator.coefficients]}")
    lines.append(f"   denominator {[str(c) for c in t.f.denominator.coefficients]}")
    for (x, y), g in sorted(t.h.items()):
        lines.append(f"h({x},{y}) = {g}")
    lines.append(f"diam boundary = {t.diam_boundary}; ord_0 d = {fp.order_at_zero}; d(1) = {fp.d_at_one}; "
                 f"d'(1) = {fp.d_prime_at_one}")
    lines.append(f"poles(f) = {report['poles_f']}")
    lines.append(f"poles(cell) = {report['poles_cell']}")
    lines.append(f"zeroes(f) = {report['zeroes_f']}")
    lines.append(f"zeroes of f among cell poles: {report['zeroes_lemma']}; "
                 f"first return = 1 - 1/f: {report['first_passage_identity']}")
    _emit(args, report, lines)
    out = _outdir(args)
    if out:
        (out / "functions.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0 if fp.ok else EXIT_NUMERIC


def cmd_oracle(args) -> int:
    spec, t = _transfer(args)
    dec = verify_decimation_identities(spec, args.level, t)
    fe = functional_equation_series_check(spec, args.order, t)
    lines = _header(args)
    for c in dec.checks:
        if not c.ok or c.identity != "inner":
            lines.append(f"n={c.n} {c.identity:10s} {c.pair[0]},{c.pair[1]}: {'ok' if c.ok else 'MISMATCH ' + c.diff()}")
    inner = [c for c in dec.checks if c.identity == "inner"]
    lines.append(f"inner identities: {sum(c.ok for c in inner)}/{len(inner)} exact")
    for c in fe.comparisons:
        k = c.first_mismatch()
        lines.append(f"series to order {fe.order} at ({c.pair[0]}, {c.pair[1]}): "
                     + ("ok" if k is None else f"MISMATCH at z^{k}: {c.direct[k]} vs {c.composed[k]}"))
    ok = dec.ok and fe.ok
    lines.append(f"largest verified level: {dec.largest_verified}")
    lines.append("result: " + ("PASS" if ok else "FAIL"))
    report = {"ok": ok, "largest_verified": dec.largest_verified,
              "identities": [(c.n, c.identity, c.pair, c.ok) for c in dec.checks],
              "series": [(c.pair, c.ok) for c in fe.comparisons]}
    _emit(args, report, lines)
    return 0 if ok else EXIT_NUMERIC


def cmd_dynamics(args) -> int:
    spec, t = _transfer(args)
    fp = check_fixed_points(t)
    if not fp.ok:
        raise CliFailure(EXIT_NUMERIC, "fixed-point checks failed: " + "; ".join(fp.failures))
    j = approximate_julia(t, args.depth, args.budget)
    exc = exceptional_set(t, args.depth, args.budget)
    cls = classify_julia(j)
    lines = _header(args)
    lines.append(f"julia points {j.size} (non-real residue {len(j.nonreal)}), max lambda-gap {j.max_gap:.6g}")
    lines.append(f"exceptional points {exc.size} (non-real residue {len(exc.nonreal)}), truncated {exc.truncated}")
    lines.append(f"max preimage residual {max(j.tree.max_residual, exc.max_residual):.3g}")
    for label, tree in (("julia", j.tree), ("exceptional", exc)):
        lines.append(f"{label} dedup: {tree.generated} preimages generated, {tree.size} retained, "
                     f"{tree.snapped} snapped to the real axis")
    lines.append(f"classification: {cls}  gaps {', '.join(f'{k}:{g:.4g}' for k, g in cls.gaps.items())}")
    report = {"julia_points": j.size, "exceptional_points": exc.size, "classification": cls.verdict,
              "heuristic": True, "gaps": cls.gaps, "truncated": j.tree.truncated or exc.truncated,
              "generated": {"julia": j.tree.generated, "exceptional": exc.generated}}
    _emit(args, report, lines)
    out = _outdir(args)
    if out:
        from .plotting import plot_orbit
        _write_points_csv(out / "dynamics.csv", _header(args), _tree_rows(j.tree, "julia") + _tree_rows(exc, "exceptional"))
        plot_orbit(j.tree, out / "julia.png", f"{spec.name}: backward orbit of 1")
        plot_orbit(exc, out / "exceptional.png", f"{spec.name}: backward orbit of the poles")
    return EXIT_RESOURCE if report["truncated"] else 0


def cmd_spectrum(args) -> int:
    spec, t = _transfer(args)
    fp = check_fixed_points(t)
    if not fp.ok:
        raise CliFailure(EXIT_NUMERIC, "fixed-point checks failed: " + "; ".join(fp.failures))
    rep = spectrum_bounds(t, args.depth, budget=args.budget)
    lines = _header(args)
    lines.append(f"inner bound (Julia approximation): {rep.inner.size} points, "
                 f"window gap on [-10,10] {window_gap(rep.reciprocal_inner):.4g}")
    lines.append(f"outer bound (Julia + exceptional): {len(rep.reciprocal_outer) + int(rep.outer_has_infinity)} points, "
                 f"window gap on [-10,10] {window_gap(rep.reciprocal_outer):.4g}")
    lines.append(f"reciprocal form: inner in [{rep.reciprocal_inner.min():.6g}, {rep.reciprocal_inner.max():.6g}]"
                 + (" plus infinity" if rep.inner.has_infinity else ""))
    lines.append(f"Laplacian form: inner in [{rep.laplacian_inner.min():.6g}, {rep.laplacian_inner.max():.6g}], "
                 f"outer in [{rep.laplacian_outer.min():.6g}, {rep.laplacian_outer.max():.6g}]")
    lines.append(f"classification: {rep.classification}")
    lines.extend(f"note: {n}" for n in rep.notes)
    report = {"classification": rep.classification.verdict, "heuristic": True,
              "inner_points": rep.inner.size, "outer_points": len(rep.reciprocal_outer) + int(rep.outer_has_infinity),
              "window_gap_inner": window_gap(rep.reciprocal_inner),
              "window_gap_outer": window_gap(rep.reciprocal_outer),
              "laplacian_range": [float(rep.laplacian_outer.min()), float(rep.laplacian_outer.max())],
              "notes": rep.notes}
    _emit(args, report, lines)
    out = _outdir(args)
    if out:
        from .plotting import plot_spectrum
        rows = _tree_rows(rep.inner.tree, "julia") + _tree_rows(rep.exceptional, "exceptional")
        _write_points_csv(out / "spectrum.csv", _header(args), rows)
        (out / "spectrum_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        plot_spectrum(rep, out / "spectrum.png", f"{spec.name}: {rep.classification}")
    truncated = rep.inner.tree.truncated or rep.exceptional.truncated
    return EXIT_RESOURCE if truncated else 0


def cmd_green(args) -> int:
    spec, t = _transfer(args)
    ev = GreenEvaluator(t, base_radius=args.base_radius, series_cap=args.series_cap)
    try:
        x, y = ev.ref(args.x), ev.ref(args.y)
    except ValueError as exc:
        raise CliFailure(EXIT_VALIDATION, str(exc)) from exc
    z = parse_point(args.z)
    res = ev.evaluate(x, y, z, args.acc)
    v = res.value
    lines = _header(args)
    lines.append(f"G = {v.real:.15g}{v.imag:+.15g}i")
    lines.append(f"error bound = {res.error:.3g}")
    lines.append(f"continuation depth n = {res.depth}; series order = {res.series_order}")
    _emit(args, {"re": v.real, "im": v.imag, "error": res.error, "depth": res.depth,
                 "series_order": res.series_order}, lines)
    return 0


def cmd_probe(args) -> int:
    spec, t = _transfer(args)
    pr = singularity_probe(t, args.x, args.y, k_max=args.k_max)
    sh = shell_conductance_check(spec, args.n_max)
    lines = _header(args)
    for r, g, e in zip(pr.radii, pr.values, pr.errors):
        lines.append(f"G(o,o|{r:.10f}) = {g:.10g} (+/- {e:.2g})")
    lines.append(f"monotone divergence: {pr.monotone}; fitted growth exponent {pr.growth_exponent:.5f}; "
                 f"integer pole fit: {pr.integer_pole_fit}")
    if pr.first_passage is not None:
        lines.append(f"first-passage value near 1: {pr.first_passage:.10g}")
    lines.append(f"shell conductances a_n (n=0..{args.n_max}): {sh.a}; bounded: {sh.bounded}; "
                 f"partial sums of 1/a_n: {[round(s, 6) for s in sh.partial_sums]}")
    report = {"radii": pr.radii, "values": pr.values, "monotone": pr.monotone,
              "growth_exponent": pr.growth_exponent, "integer_pole_fit": pr.integer_pole_fit,
              "first_passage": pr.first_passage, "shell_a": sh.a, "shell_bounded": sh.bounded}
    _emit(args, report, lines)
    out = _outdir(args)
    if out:
        from .plotting import plot_growth
        buf = "\n".join(_header(args)) + "\nk,r,G,error\n"
        buf += "".join(f"{k},{_fmt(r)},{_fmt(g)},{_fmt(e)}\n"
                       for k, (r, g, e) in enumerate(zip(pr.radii, pr.values, pr.errors), start=1))
        (out / "probe.csv").write_text(buf, encoding="utf-8")
        plot_growth(pr, out / "growth.png", f"{spec.name}: growth exponent {pr.growth_exponent:.4f}")
    return 0 if pr.monotone and sh.bounded else EXIT_NUMERIC


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=53, help="working precision in bits (default 53)")
    common.add_argument("--seed", type=int, default=0, help="recorded in every output header")
    common.add_argument("--out", default=None, help="directory for CSV, report and figure files")
    common.add_argument("--json", action="store_true", help="machine-readable report on stdout")

    p = argparse.ArgumentParser(prog="ssgraph", description=__doc__)
    p.add_argument("--version", action="version", version=f"ssgraph {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("spec", help="cell spec JSON file (or a bundled name: line2, sierpinski, vicsek)")
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, "check the cell axioms")
    add("functions", cmd_functions, "print d, f and h exactly")
    sp = add("oracle", cmd_oracle, "exact n-cell identities and series check")
    sp.add_argument("--level", type=int, default=3, help="largest n-cell level for the exact identities")
    sp.add_argument("--order", type=int, default=12, help="series order for the functional equation check")
    for name, func, help_ in (("dynamics", cmd_dynamics, "backward orbits of d"),
                              ("spectrum", cmd_spectrum, "inner/outer spectrum bounds")):
        sp = add(name, func, help_)
        sp.add_argument("--depth", type=int, default=12, help="backward orbit depth")
        sp.add_argument("--budget", type=int, default=1_000_000, help="point budget (exit 3 when reached)")
    sp = add("green", cmd_green, "evaluate a Green function")
    sp.add_argument("--x", required=True, help="vertex ref level:address:local")
    sp.add_argument("--y", required=True)
    sp.add_argument("--z", required=True, help="point such as 0.6, 2+0.5i")
    sp.add_argument("--acc", type=float, default=1e-10)
    sp.add_argument("--base-radius", type=float, default=0.5)
    sp.add_argument("--series-cap", type=int, default=200)
    sp = add("probe", cmd_probe, "singularity probe at z=1 and shell conductances")
    sp.add_argument("--k-max", type=int, default=20, help="radii 1 - 2^-k for k = 1..K")
    sp.add_argument("--n-max", type=int, default=8, help="largest shell index")
    sp.add_argument("--x", default=None)
    sp.add_argument("--y", default=None)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (SpecError, TransferError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotInBasin, PoleHit, AccuracyUnreachable, RootFindingError, IndeterminateEvaluation) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SizeCapExceeded, GrowthCapExceeded, SymmetrySearchAborted) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
