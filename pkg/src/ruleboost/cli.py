"""Command-line entry points: run, sweep-sigma, evaluate, serve, export-rules, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import load_rules
from .matching import sweep_sigma
from .pipeline import (
    CheckpointStore,
    evaluate,
    load_config,
    load_context,
    load_ensemble,
    load_reports,
    run,
)


def _cmd_run(args) -> int:
    config = load_config(args.config)
    reports = run(config, annotator_source=args.annotators, resume=args.resume)
    for rep in reports:
        print(json.dumps(rep.to_json(), sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    from .service import AnnotationServer

    config = load_config(args.config)
    server = AnnotationServer(config, resume=args.resume)
    server.start()
    print(
        f"annotation service listening on http://{config.http.host}:{server.port}",
        flush=True,
    )
    reports = server.join()
    for rep in reports:
        print(json.dumps(rep.to_json(), sort_keys=True))
    return 0


def _cmd_evaluate(args) -> int:
    config = load_config(args.config)
    ctx = load_context(config)
    if ctx.test is None:
        print("config has no test dataset", file=sys.stderr)
        return 1
    ensemble = load_ensemble(config)
    metric = args.metric or config.evaluation.metric
    value = evaluate(ensemble, ctx.test, metric, config.evaluation.null_class)
    print(json.dumps({"metric": metric, "value": value}))
    return 0


def _cmd_sweep_sigma(args) -> int:
    config = load_config(args.config)
    ctx = load_context(config)
    rules = list(ctx.initial_rules)
    store = CheckpointStore(config.checkpoint_dir)
    if store.rules_path.exists():
        rules = load_rules(store.rules_path)
    best, table = sweep_sigma(
        ctx.dev, rules, config.match, ctx.matcher.filler, ctx.template
    )
    for row in table:
        print(json.dumps(row))
    print(json.dumps({"best_sigma": best}))
    return 0


def _cmd_export_rules(args) -> int:
    config = load_config(args.config)
    store = CheckpointStore(config.checkpoint_dir)
    source = store.rules_path if store.rules_path.exists() else Path(config.initial_rules_path)
    text = source.read_text(encoding="utf-8")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_report(args) -> int:
    config = load_config(args.config)
    reports = load_reports(config)
    if not reports:
        print("no reports found; run the pipeline first", file=sys.stderr)
        return 1
    header = (
        "iter  err_t   alpha   proposed accepted total  coverage rule_acc "
        "dev_acc  test"
    )
    print(header)
    for rep in reports:
        racc = f"{rep.rule_accuracy:.3f}" if rep.rule_accuracy is not None else "   -"
        tacc = (
            f"{rep.ensemble_accuracy_test:.3f}"
            if rep.ensemble_accuracy_test is not None
            else "   -"
        )
        print(
            f"{rep.iteration:>4}  {rep.err_t:.3f}  {rep.alpha_t:>6.3f} "
            f"{rep.rules_proposed:>8} {rep.rules_accepted:>8} {rep.accepted_total:>5}  "
            f"{rep.coverage:.3f}    {racc}    {rep.ensemble_accuracy_dev:.3f}    {tacc}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruleboost",
        description="Interactive weak supervision with boosted rule discovery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the iterative rule-discovery loop")
    p_run.add_argument("--config", required=True)
    p_run.add_argument(
        "--annotators",
        choices=["scripted", "http_sessions"],
        default="scripted",
        help="where accept/reject decisions come from",
    )
    p_run.add_argument("--resume", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_serve = sub.add_parser("serve", help="run with the HTTP annotation service")
    p_serve.add_argument("--config", required=True)
    p_serve.add_argument("--resume", action="store_true")
    p_serve.set_defaults(func=_cmd_serve)

    p_eval = sub.add_parser("evaluate", help="score the checkpointed ensemble on the test set")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--metric", choices=["accuracy", "micro_f1_excluding_class"])
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep-sigma", help="grid-search the matching threshold on dev")
    p_sweep.add_argument("--config", required=True)
    p_sweep.set_defaults(func=_cmd_sweep_sigma)

    p_export = sub.add_parser("export-rules", help="dump the accepted rule set as JSON")
    p_export.add_argument("--config", required=True)
    p_export.add_argument("--out")
    p_export.set_defaults(func=_cmd_export_rules)

    p_report = sub.add_parser("report", help="print the per-iteration report table")
    p_report.add_argument("--config", required=True)
    p_report.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
