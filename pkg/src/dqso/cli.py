"""Command-line toolkit: operator files in, delimited reports out.

Every command is a thin shell over the library modules; the CLI only
resolves inputs, converts indices to the 1-based file convention, and
renders reports. Exit codes: 0 success, 1 validation or parse failure,
2 the checker refuted dissipativity, 3 a generation budget ran out.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .dissipativity import GAP_TOL, audit_necessary, check_dissipative
from .dynamics import (
    CONV_TOL,
    cesaro_drift,
    cesaro_extrapolate,
    cesaro_means,
    lyapunov_series,
    omega_limit,
    trajectory,
)
from .fileio import (
    OperatorDocument,
    ParseError,
    ReportDocument,
    ValidationError,
    load_document,
    render_json,
    report_text,
)
from .generators import (
    CATALOG_NOTES,
    BudgetExhausted,
    GeneratorSpec,
    catalog,
    enumerate_partitions,
    generate_with_stats,
    segment_family,
)
from .operators import COEFF_TOL, BlockPartition, validate
from .structure import NoConvergence, NotCanonical, classify, numeric_fixed_points


def _resolve_tensor(source: str, tol: float):
    """A catalog family name or a path to an operator file, validated."""
    cat = catalog()
    if source in cat:
        return cat[source]
    t = load_document(source).tensor()
    issues = validate(t, tol=tol)
    if issues:
        raise ValidationError(issues)
    return t


def _parse_x0(text, m: int) -> np.ndarray:
    if text is None:
        return np.full(m, 1.0 / m)
    vals = np.array([float(v) for v in text.split(",")])
    if vals.size != m:
        raise ValueError(f"--x0 has {vals.size} coordinates, operator needs {m}")
    return vals


def _point(p) -> list:
    return [float(v) for v in np.asarray(p).ravel()]


def _tau_1based(partition) -> list:
    return [int(k) + 1 for k in partition.tau]


def _fixed_set_payload(fps) -> dict:
    return {
        "kind": fps.kind,
        "certified": bool(fps.certified),
        "generators": [_point(g.as_array()) for g in fps.generators],
        "cycles": [[int(i) + 1 for i in c] for c in fps.cycles.cycles],
        "transient": [int(i) + 1 for i in fps.cycles.transient],
    }


def _emit(report: ReportDocument, args) -> None:
    text = report_text(report, args.format or "json")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _plot_path(args, command: str) -> Path:
    if args.out:
        return Path(args.out).with_suffix(".png")
    return Path(f"{command}.png")


def cmd_validate(args) -> int:
    cat = catalog()
    if args.operator in cat:
        t = cat[args.operator]
    else:
        t = load_document(args.operator).tensor()
    issues = validate(t, tol=args.tol if args.tol is not None else COEFF_TOL)
    report = ReportDocument(
        command="validate",
        inputs={"operator": args.operator, "tol": args.tol},
        results={"m": t.m, "valid": not issues, "issues": [str(i) for i in issues]},
    )
    _emit(report, args)
    return 0 if not issues else 1


def cmd_audit(args) -> int:
    t = _resolve_tensor(args.operator, COEFF_TOL)
    rep = audit_necessary(t, tol=args.tol if args.tol is not None else COEFF_TOL)
    results = {
        "m": t.m,
        "clean": rep.clean,
        "unit_diagonal_ok": rep.unit_diagonal_ok,
        "partition": _tau_1based(rep.partition) if rep.partition else None,
        "half_share_violations": [
            {"i": i + 1, "j": j + 1, "k": k + 1, "value": float(v)}
            for i, j, k, v in rep.half_share_violations
        ],
        "support_violations": [
            {"i": i + 1, "j": j + 1} for i, j in rep.support_violations
        ],
    }
    _emit(ReportDocument("audit", {"operator": args.operator, "tol": args.tol},
                         results), args)
    return 0


def cmd_check(args) -> int:
    t = _resolve_tensor(args.operator, COEFF_TOL)
    verdict = check_dissipative(
        t,
        samples=args.samples,
        restarts=args.restarts,
        seed=args.seed,
        tol=args.tol if args.tol is not None else GAP_TOL,
    )
    ce = verdict.counterexample
    results = {
        "status": verdict.status,
        "samples_tested": int(verdict.samples_tested),
        "min_gap_seen": float(verdict.min_gap_seen),
        "counterexample": None if ce is None else {
            "point": _point(ce.point),
            "gap": float(ce.gap),
            "prefix": int(ce.prefix),
            "stage": ce.stage,
        },
    }
    inputs = {"operator": args.operator, "seed": args.seed,
              "samples": args.samples, "restarts": args.restarts,
              "tol": args.tol}
    _emit(ReportDocument("check", inputs, results), args)
    return 2 if verdict.refuted else 0


def cmd_classify(args) -> int:
    t = _resolve_tensor(args.operator, COEFF_TOL)
    verdict = classify(t)
    results = {
        "kind": verdict.kind,
        "form": verdict.form,
        "audit_clean": verdict.audit_clean,
        "certified": verdict.certified,
        "fixed_points": _fixed_set_payload(verdict.fixed_points),
    }
    _emit(ReportDocument("classify", {"operator": args.operator}, results), args)
    return 0


def cmd_fixed_points(args) -> int:
    t = _resolve_tensor(args.operator, COEFF_TOL)
    points = numeric_fixed_points(
        t,
        restarts=args.restarts,
        seed=args.seed,
        tol=args.tol if args.tol is not None else 1e-10,
    )
    results = {
        "count": len(points),
        "points": [_point(p.as_array()) for p in points],
        "residuals": [
            float(np.max(np.abs(t.apply(p.as_array()) - p.as_array())))
            for p in points
        ],
    }
    try:
        results["structural"] = _fixed_set_payload(classify(t).fixed_points)
    except NotCanonical:
        results["structural"] = None
    inputs = {"operator": args.operator, "seed": args.seed,
              "restarts": args.restarts, "tol": args.tol}
    _emit(ReportDocument("fixed-points", inputs, results), args)
    return 0


def _series_payload(points, gaps, phi) -> dict:
    n = len(points)
    return {
        "steps": list(range(n)),
        "points": [_point(p) for p in points],
        "gaps": [float(g) for g in gaps] + [None] * (n - len(gaps)),
        "phi": None if phi is None else [float(v) for v in phi],
    }


def cmd_simulate(args) -> int:
    t = _resolve_tensor(args.operator, COEFF_TOL)
    x0 = _parse_x0(args.x0, t.m)
    conv_tol = args.tol if args.tol is not None else CONV_TOL
    record = trajectory(t, x0, steps=args.steps, conv_tol=conv_tol)
    try:
        series = lyapunov_series(t, x0, steps=args.steps, conv_tol=conv_tol)
        phi = series.phi
        limit_estimate = float(series.limit_estimate)
    except NotCanonical:
        phi, limit_estimate = None, None
    results = {
        "summary": {
            "steps": int(record.steps),
            "converged_at": record.converged_at,
            "final": _point(record.final),
            "min_gap": float(record.step_gaps.min()) if record.steps else None,
            "limit_estimate": limit_estimate,
        },
        "series": _series_payload(record.points, record.step_gaps, phi),
    }
    inputs = {"operator": args.operator, "x0": args.x0, "steps": args.steps,
              "tol": args.tol}
    report = ReportDocument("simulate", inputs, results)
    if args.plot:
        from .plots import plot_trajectory

        path = _plot_path(args, "simulate")
        plot_trajectory(record.points, path, phi=phi)
        results["plot"] = str(path)
    _emit(report, args)
    return 0


def cmd_cesaro(args) -> int:
    t = _resolve_tensor(args.operator, COEFF_TOL)
    x0 = _parse_x0(args.x0, t.m)
    means = cesaro_means(t, x0, steps=args.steps)
    results = {
        "summary": {
            "steps": int(means.shape[0]),
            "final_mean": _point(means[-1]),
            "half_horizon_drift": cesaro_drift(means),
            "extrapolated_limit": _point(cesaro_extrapolate(means)),
        },
        "series": _series_payload(means, [], None),
    }
    inputs = {"operator": args.operator, "x0": args.x0, "steps": args.steps}
    report = ReportDocument("cesaro", inputs, results)
    if args.plot:
        from .plots import plot_cesaro

        path = _plot_path(args, "cesaro")
        plot_cesaro(means, path)
        results["plot"] = str(path)
    _emit(report, args)
    return 0


def cmd_omega(args) -> int:
    t = _resolve_tensor(args.operator, COEFF_TOL)
    x0 = _parse_x0(args.x0, t.m)
    rep = omega_limit(t, x0, steps=args.steps, burn_in=args.burn_in)
    record = trajectory(t, x0, steps=args.steps, conv_tol=0.0)
    results = {
        "summary": {
            "final_distance": float(rep.final_distance),
            "cluster_count": len(rep.clusters),
        },
        "clusters": [_point(c) for c in rep.clusters],
        "fixed_points": _fixed_set_payload(rep.fixed_points),
        "distances": [float(d) for d in rep.distances],
        "series": _series_payload(record.points, record.step_gaps, None),
    }
    inputs = {"operator": args.operator, "x0": args.x0, "steps": args.steps,
              "burn_in": args.burn_in}
    report = ReportDocument("omega", inputs, results)
    if args.plot:
        from .plots import plot_omega

        path = _plot_path(args, "omega")
        burn = args.burn_in if args.burn_in is not None else len(rep.distances) // 2
        plot_omega(rep.distances, path, burn_in=burn)
        results["plot"] = str(path)
    _emit(report, args)
    return 0


def _parse_partition(text: str, m: int) -> BlockPartition:
    targets = [int(v) for v in text.split(",")]
    if len(targets) != m:
        raise ValueError(f"--partition has {len(targets)} targets, need {m}")
    if any(not 1 <= v <= m for v in targets):
        raise ValueError("--partition targets are 1-based output indices")
    return BlockPartition(tuple(v - 1 for v in targets))


def cmd_generate(args) -> int:
    partition = _parse_partition(args.partition, args.m)
    spec = GeneratorSpec(args.m, partition, seed=args.seed,
                         max_rejections=args.max_rejections)
    tensor, stats = generate_with_stats(spec)
    metadata = {
        "name": f"generated-m{args.m}",
        "partition": args.partition,
        "seed": str(args.seed),
        "attempts": str(stats.attempts),
        "rejections": str(stats.rejections),
    }
    doc = OperatorDocument.from_tensor(tensor, metadata)
    text = render_json(doc.as_payload())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_catalog(args) -> int:
    cat = catalog()
    if args.name is None:
        results = {
            "families": [
                {"name": name, "m": cat[name].m, "note": CATALOG_NOTES[name]}
                for name in sorted(cat)
            ]
        }
        _emit(ReportDocument("catalog", {}, results), args)
        return 0
    if args.name == "segment-mix" and (args.a != 1.5 or args.b != 1.5):
        tensor = segment_family(a=args.a, b=args.b)
        meta = {"name": args.name, "note": CATALOG_NOTES[args.name],
                "a": str(args.a), "b": str(args.b)}
    elif args.name in cat:
        tensor = cat[args.name]
        meta = {"name": args.name, "note": CATALOG_NOTES[args.name]}
    else:
        raise ValueError(f"unknown catalog family {args.name!r}")
    text = render_json(OperatorDocument.from_tensor(tensor, meta).as_payload())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep_m3(args) -> int:
    rows = []
    for idx, partition in enumerate(enumerate_partitions(3)):
        for draw in range(args.draws):
            seed = args.seed + idx * args.draws + draw
            spec = GeneratorSpec(3, partition, seed=seed)
            try:
                tensor, stats = generate_with_stats(spec)
            except BudgetExhausted:
                rows.append({
                    "partition": ",".join(str(k + 1) for k in partition.tau),
                    "seed": seed, "attempts": spec.max_rejections + 1,
                    "verdict": "exhausted", "form": "", "fixed_set": "",
                })
                continue
            verdict = classify(tensor)
            fps = verdict.fixed_points
            gens = "|".join(
                "(" + ",".join(format(float(v), ".17g") for v in g.as_array()) + ")"
                for g in fps.generators
            )
            rows.append({
                "partition": ",".join(str(k + 1) for k in partition.tau),
                "seed": seed,
                "attempts": stats.attempts,
                "verdict": verdict.kind,
                "form": verdict.form,
                "fixed_set": f"{fps.kind}:{gens}",
            })
    inputs = {"seed": args.seed, "draws": args.draws}
    if args.format == "json":
        _emit(ReportDocument("sweep-m3", inputs, {"rows": rows}), args)
        return 0
    # default output is the delimited table

    header = ["partition", "seed", "attempts", "verdict", "form", "fixed_set"]
    lines = [";".join(header)]
    for row in rows:
        lines.append(";".join(str(row[h]) for h in header))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqso",
        description="analyze quadratic stochastic operators that push mass "
        "toward concentration on the probability simplex",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=10_000,
                        help="random points for the refutation search")
    common.add_argument("--restarts", type=int, default=20,
                        help="descent/search restarts")
    common.add_argument("--steps", type=int, default=10_000,
                        help="iteration budget for orbit commands")
    common.add_argument("--tol", type=float, default=None,
                        help="override the command's default tolerance")
    common.add_argument("--out", default=None, help="write output to this file")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (default json; sweep-m3 defaults "
                        "to its csv table)")

    def op_command(name, func, help_text, series=False):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("operator",
                       help="catalog family name or operator file path")
        if series:
            p.add_argument("--x0", default=None,
                           help="comma-separated start point (default barycenter)")
            p.add_argument("--plot", action="store_true",
                           help="render a PNG next to the report")
        p.set_defaults(func=func)
        return p

    op_command("validate", cmd_validate, "stochasticity checks on a tensor")
    op_command("audit", cmd_audit, "necessary-condition audit (canonical form)")
    op_command("check", cmd_check, "search for a dissipativity counterexample")
    op_command("classify", cmd_classify, "fixed-point structure from the block partition")
    op_command("fixed-points", cmd_fixed_points, "numeric fixed-point search")
    op_command("simulate", cmd_simulate, "iterate the operator and log diagnostics",
               series=True)
    op_command("cesaro", cmd_cesaro, "running orbit averages", series=True)
    omega = op_command("omega", cmd_omega, "distance of the orbit tail to the fixed set",
                       series=True)
    omega.add_argument("--burn-in", type=int, default=None,
                       help="steps to discard before clustering the tail")

    gen = sub.add_parser("generate", parents=[common],
                         help="sample a dissipative operator for a block partition")
    gen.add_argument("m", type=int)
    gen.add_argument("--partition", required=True,
                     help="comma-separated 1-based block target per index")
    gen.add_argument("--max-rejections", type=int, default=100)
    gen.set_defaults(func=cmd_generate)

    cat = sub.add_parser("catalog", parents=[common],
                         help="list the named fixtures or dump one")
    cat.add_argument("name", nargs="?", default=None)
    cat.add_argument("--a", type=float, default=1.5,
                     help="segment-mix share parameter")
    cat.add_argument("--b", type=float, default=1.5,
                     help="segment-mix share parameter")
    cat.set_defaults(func=cmd_catalog)

    sweep = sub.add_parser("sweep-m3", parents=[common],
                           help="classify draws from every 3-type block partition")
    sweep.add_argument("--draws", type=int, default=10,
                       help="operators per partition")
    sweep.set_defaults(func=cmd_sweep_m3)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExhausted as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ParseError, ValidationError, NotCanonical, NoConvergence) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
