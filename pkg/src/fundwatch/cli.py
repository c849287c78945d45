"""Command-line entry point: the batch pipeline and its individual stages.

Stage commands (features, screen, cluster) exist alongside run-batch so any
step can be run and inspected in isolation while debugging. Every command
echoes its effective configuration (seeds, thresholds, paths) as one JSON
line on stderr, which is enough to reproduce the run.

Exit codes: 0 success, 1 input/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .casepipeline import (
    AlertThresholds,
    RunProfile,
    RunStore,
    investigate,
    run_batch,
    score_all,
)
from .classifier import NetworkConfig
from .clustering import ClusteringConfig, cluster_summary, kmeans, write_assignments_csv
from .errors import FundwatchError, InputError, NotFoundError, RequestError, StageError, StoreBusyError
from .features import (
    PeriodGranularity,
    bucketize,
    compute_points,
    read_points_csv,
    write_points_csv,
)
from .ingest import (
    clean_mapping_errors,
    load_transactions,
    write_rejection_sidecar,
    write_transactions_csv,
)
from .screening import ScreeningThresholds, screen
from .synthgen import InjectionSpec, PatternKind, PopulationSpec, generate, write_ground_truth

_INJECT_KINDS = {
    "rapid": PatternKind.RAPID_IN_OUT,
    "rapidinout": PatternKind.RAPID_IN_OUT,
    "exchange": PatternKind.EXCHANGE_ROUND_TRIP,
    "exchangeroundtrip": PatternKind.EXCHANGE_ROUND_TRIP,
}


def _granularity(value: str) -> PeriodGranularity:
    for g in PeriodGranularity:
        if g.value.lower() == value.lower():
            return g
    raise InputError(
        f"unknown granularity '{value}'; choose from "
        + ", ".join(g.value for g in PeriodGranularity)
    )


def _date(value: str) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError as exc:
        raise InputError(f"bad date '{value}': expected YYYY-MM-DD") from exc


def _echo(command: str, params: dict) -> None:
    print(json.dumps({"command": command, **params}, default=str), file=sys.stderr)


def _load_clean(path: str):
    records, report = load_transactions(path)
    records, _ = clean_mapping_errors(records)
    return records, report


# -- commands -----------------------------------------------------------------


def cmd_gen(args) -> int:
    injections = []
    for item in args.inject or []:
        kind_s, _, count_s = item.partition(":")
        kind = _INJECT_KINDS.get(kind_s.lower())
        if kind is None or not count_s.isdigit():
            raise InputError(f"bad --inject '{item}': expected kind:count with kind rapid|exchange")
        injections.append(InjectionSpec(kind=kind, count=int(count_s)))
    spec = PopulationSpec(
        n_customers=args.customers,
        n_funds=args.funds,
        start=_date(args.start),
        end=_date(args.end),
        mean_subscriptions=args.mean_subs,
        mean_redemptions=args.mean_reds,
        heavy_redeemer_fraction=args.heavy_fraction,
        injections=tuple(injections),
        rng_seed=args.seed,
    )
    _echo("gen", {"spec": spec.__dict__, "out": args.out})
    records, truth = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_transactions_csv(records, out / "transactions.csv")
    write_ground_truth(truth, out / "ground_truth.json")
    print(f"wrote {len(records)} records to {out / 'transactions.csv'}")
    print(f"wrote ground truth for {len(truth.entries)} injected customers")
    return 0


def cmd_ingest(args) -> int:
    sidecar = args.sidecar or f"{args.out}.rejects.csv"
    _echo("ingest", {"in": args.infile, "out": args.out, "sidecar": sidecar})
    records, report = load_transactions(args.infile)
    records, mapping_removed = clean_mapping_errors(records)
    write_transactions_csv(records, args.out)
    write_rejection_sidecar(report, sidecar)
    print(
        json.dumps(
            {
                "records_read": report.records_read,
                "records_accepted": report.records_accepted,
                "records_rejected": report.records_rejected,
                "rejected_by_reason": report.rejected_by_reason,
                "duplicates_removed": report.duplicates_removed,
                "mapping_errors_removed": mapping_removed,
                "records_out": len(records),
            },
            indent=2,
        )
    )
    return 0


def cmd_features(args) -> int:
    gran = _granularity(args.granularity)
    _echo("features", {"in": args.infile, "granularity": gran.value, "k": args.k, "out": args.out})
    records, _ = _load_clean(args.infile)
    aggregates = bucketize(records, gran)
    points = compute_points(aggregates, args.k)
    write_points_csv(points, args.out)
    print(f"wrote {len(points)} points to {args.out}")
    return 0


def cmd_screen(args) -> int:
    thresholds = ScreeningThresholds(args.s, args.S)
    _echo("screen", {"in": args.infile, "s": args.s, "S": args.S, "out": args.out, "only": args.only})
    points, _ = read_points_csv(args.infile)
    kept = screen(points, thresholds)
    kept_ids = {p.point_id for p in kept}
    if args.only:
        write_points_csv(kept, args.out, screened=kept_ids)
    else:
        write_points_csv(points, args.out, screened=kept_ids)
    print(f"screened {len(kept)} of {len(points)} points")
    return 0


def cmd_cluster(args) -> int:
    config = ClusteringConfig(
        n_clusters=args.clusters,
        max_iterations=args.max_iterations,
        convergence_tolerance=args.tolerance,
        rng_seed=args.seed,
        n_init=args.n_init,
    )
    _echo("cluster", {"in": args.infile, "config": config.__dict__, "screened_only": args.screened_only})
    points, screened = read_points_csv(args.infile)
    if args.screened_only:
        if screened is None:
            raise InputError("--screened-only given but the file has no screened column")
        points = [p for p in points if p.point_id in screened]
    result = kmeans(points, config)
    if args.assignments:
        write_assignments_csv(points, result, args.assignments)
    summary = cluster_summary(result)
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


def _profile_from_args(args) -> RunProfile:
    granularities = tuple(_granularity(g) for g in args.granularities.split(","))
    return RunProfile(
        granularities=granularities,
        k=args.k,
        thresholds=ScreeningThresholds(args.s, args.S),
        clustering=ClusteringConfig(
            n_clusters=args.clusters,
            rng_seed=args.cluster_seed,
            n_init=args.n_init,
        ),
        network=NetworkConfig(
            layer_sizes=(2, args.hidden, 1),
            training_cycles=args.cycles,
            learning_rate=args.learning_rate,
            rng_seed=args.net_seed,
        ),
        negative_rate=args.rate,
        alerts=AlertThresholds(alert=args.alert, review=args.review),
        created_at=args.created_at,
    )


def cmd_run_batch(args) -> int:
    profile = _profile_from_args(args)
    _echo("run-batch", {"in": args.infile, "out": args.out, "profile": profile.to_dict(), "run_id": args.run_id})
    records, _ = _load_clean(args.infile)
    store = RunStore(args.out)
    run_id = run_batch(records, profile, store, run_id=args.run_id)
    print(run_id)
    return 0


def cmd_investigate(args) -> int:
    _echo(
        "investigate",
        {"runs": args.runs, "run": args.run, "customer": args.customer, "fund": args.fund, "date": args.date},
    )
    store = RunStore(args.runs)
    case = investigate(store, args.run, args.customer, args.fund, _date(args.date))
    if args.format == "csv":
        degrees = {g.value: d for g, d in case.degrees.items()}
        cols = ["case_id", "customer_id", "fund_id", "as_of_date", "alert_level"] + sorted(degrees)
        print(",".join(cols))
        print(
            ",".join(
                [case.case_id, case.customer_id, case.fund_id, case.as_of_date.isoformat(), case.alert_level.value]
                + [repr(degrees[g]) for g in sorted(degrees)]
            )
        )
    else:
        print(json.dumps(case.to_dict(), indent=2))
    return 0


def cmd_score_all(args) -> int:
    gran = _granularity(args.granularity)
    _echo("score-all", {"runs": args.runs, "run": args.run, "granularity": gran.value, "out": args.out})
    store = RunStore(args.runs)
    rows = score_all(store, args.run, gran)
    if args.format == "json":
        payload = json.dumps([row.__dict__ for row in rows], indent=2)
        if args.out:
            Path(args.out).write_text(payload + "\n")
        else:
            print(payload)
    else:
        lines = ["customer_id,fund_id,period_index,period_label,delta1,delta2,degree"]
        for r in rows:
            lines.append(
                f"{r.customer_id},{r.fund_id},{r.period_index},{r.period_label},"
                f"{r.delta1!r},{r.delta2!r},{r.degree!r}"
            )
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    if args.out:
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    _echo("serve", {"runs": args.runs, "host": args.host, "port": args.port, "static": args.static})
    store = RunStore(args.runs)
    app = create_app(store, analyst_token=args.token, static_dir=Path(args.static) if args.static else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundwatch",
        description="Transaction monitoring for investment funds",
    )
    parser.add_argument("--version", action="version", version=f"fundwatch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic population with injected patterns")
    p.add_argument("--customers", type=int, required=True)
    p.add_argument("--funds", type=int, default=3)
    p.add_argument("--start", default="2000-01-01")
    p.add_argument("--end", default="2000-12-31")
    p.add_argument("--inject", action="append", metavar="KIND:COUNT", help="rapid:N or exchange:N, repeatable")
    p.add_argument("--mean-subs", type=float, default=5.0)
    p.add_argument("--mean-reds", type=float, default=2.0)
    p.add_argument("--heavy-fraction", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ingest", help="parse, validate and clean a transaction CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="cleaned CSV path")
    p.add_argument("--sidecar", help="rejection sidecar path (default: <out>.rejects.csv)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="bucketize and compute delta points")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--granularity", default="Week")
    p.add_argument("--k", type=int, default=3, choices=range(0, 11), metavar="K")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("screen", help="apply suspicion thresholds to a points file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--s", type=float, default=0.4, help="delta1 lower bound")
    p.add_argument("--S", type=float, default=0.4, help="delta2 lower bound")
    p.add_argument("--only", action="store_true", help="emit only the screened points")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("cluster", help="centre-based clustering over a points file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--screened-only", action="store_true")
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assignments", help="per-point cluster CSV output")
    p.add_argument("--summary", help="JSON summary output")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("run-batch", help="full pipeline: features, screen, cluster, train")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="runs root directory")
    p.add_argument("--granularities", default="Day,Week,Month")
    p.add_argument("--k", type=int, default=3, choices=range(0, 11), metavar="K")
    p.add_argument("--s", type=float, default=0.4)
    p.add_argument("--S", type=float, default=0.4)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--cluster-seed", type=int, default=0)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--hidden", type=int, default=5)
    p.add_argument("--cycles", type=int, default=5000)
    p.add_argument("--learning-rate", type=float, default=0.25)
    p.add_argument("--net-seed", type=int, default=0)
    p.add_argument("--rate", type=float, default=0.05, help="negative sampling rate")
    p.add_argument("--alert", type=float, default=0.8)
    p.add_argument("--review", type=float, default=0.5)
    p.add_argument("--run-id", help="explicit run id (default: timestamped)")
    p.add_argument("--created-at", default="", help="timestamp recorded in model files")
    p.set_defaults(func=cmd_run_batch)

    p = sub.add_parser("investigate", help="score one customer at a date")
    p.add_argument("--runs", required=True, help="runs root directory")
    p.add_argument("--run", required=True)
    p.add_argument("--customer", required=True)
    p.add_argument("--fund", help="required only when the customer spans several funds")
    p.add_argument("--date", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_investigate)

    p = sub.add_parser("score-all", help="rank every customer-period by suspicious degree")
    p.add_argument("--runs", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--granularity", default="Day")
    p.add_argument("-o", "--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_score_all)

    p = sub.add_parser("serve", help="start the HTTP service over a runs directory")
    p.add_argument("--runs", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--token", default="analyst", help="analyst token required for mutations")
    p.add_argument("--static", help="directory of console assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract wants 1
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (InputError, NotFoundError, RequestError, StageError, StoreBusyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FundwatchError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
