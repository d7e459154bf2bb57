"""Operator command line: build models, query them, evaluate, serve.

Exit codes: 0 on success, 1 for validation errors in the input data,
2 for I/O errors such as a missing file.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .core import DomainError
from .evaluation import arm_metrics, simulate_leave_one_out
from .model import DEFAULT_RECOMMENDATION_LIMIT, recommend
from .persistence import (
    format_report,
    read_corpus,
    read_model,
    read_prompt_events,
    read_recall_log,
    write_model,
    write_report,
)
from .service import ServiceConfig, create_app

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _print_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    cells = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    print("  ".join("-" * w for w in widths))
    for row in cells:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))


def _cmd_build(args: argparse.Namespace) -> int:
    from .model import build_model

    corpus = read_corpus(args.corpus, args.label)
    model = build_model(corpus)
    if args.min_pair_count > 1:
        model.pair_counts = {
            k: n for k, n in model.pair_counts.items() if n >= args.min_pair_count
        }
    write_model(model, args.out)
    print(
        f"built model: {len(model.food_counts)} foods, "
        f"{len(model.pair_counts)} pairs, {model.total_meals} meals -> {args.out}"
    )
    return EXIT_OK


def _cmd_recommend(args: argparse.Namespace) -> int:
    model = read_model(args.model)
    unknown = [f for f in args.foods if f not in model.food_counts]
    if unknown:
        print(
            "warning: not in the model: " + ", ".join(sorted(unknown)),
            file=sys.stderr,
        )
    recs = recommend(
        model, args.foods, args.limit, min_pair_count=args.min_pair_count
    )
    if args.format == "structured":
        print(
            json.dumps(
                [
                    {
                        "food": r.food,
                        "score": r.score,
                        "conditional_sum": r.conditional_sum,
                        "support_weight": r.support_weight,
                        "supporting_foods": [list(p) for p in r.supporting_foods],
                    }
                    for r in recs
                ],
                indent=2,
                sort_keys=True,
            )
        )
    else:
        _print_table(
            ["food", "score", "conditional_sum", "support_weight"],
            [
                (r.food, f"{r.score:.6g}", f"{r.conditional_sum:.6g}", r.support_weight)
                for r in recs
            ],
        )
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    corpus = read_corpus(args.corpus)
    ks = [int(k) for k in args.ks.split(",") if k.strip()]
    report = simulate_leave_one_out(corpus, ks, args.min_pair_count)
    if args.out:
        write_report(report, args.out)
    if args.format == "structured":
        print(format_report(report), end="")
    else:
        print(f"cases evaluated: {report.cases_evaluated}")
        _print_table(
            ["k", "recall"],
            [(k, f"{report.recall_at_k[k]:.4f}") for k in report.ks],
        )
    return EXIT_OK


_METRIC_ROWS = [
    ("recalls", "recalls"),
    ("prompt events", "prompt_events"),
    ("foods shown", "foods_shown"),
    ("foods accepted", "foods_accepted"),
    ("precision", "precision"),
    ("recalls with acceptance", "fraction_recalls_with_acceptance"),
    ("mean accepted (accepting)", "mean_accepted_among_accepting"),
    ("unique accepted", "unique_accepted"),
    ("unique reported", "unique_reported"),
    ("energy mean (kcal)", "energy_mean"),
    ("energy included/excluded/missing", None),
    ("duration mean (min)", "duration_mean"),
    ("duration included/excluded", None),
]


def _cmd_stats(args: argparse.Namespace) -> int:
    recalls = read_recall_log(args.recall_log)
    events = read_prompt_events(args.event_log)
    metrics = {"arms": arm_metrics(recalls, events)}
    if args.format == "structured":
        print(json.dumps(metrics, indent=2, sort_keys=True))
        return EXIT_OK
    arms = metrics["arms"]
    rows = []
    for label, key in _METRIC_ROWS:
        if key is None:
            if label.startswith("energy"):
                values = [
                    "{energy_included}/{energy_excluded}/{energy_missing}".format(**arms[a])
                    for a in ("handcoded", "generated")
                ]
            else:
                values = [
                    "{duration_included}/{duration_excluded}".format(**arms[a])
                    for a in ("handcoded", "generated")
                ]
        else:
            values = []
            for a in ("handcoded", "generated"):
                v = arms[a][key]
                if v is None:
                    values.append("-")
                elif isinstance(v, float):
                    values.append(f"{v:.4f}")
                else:
                    values.append(str(v))
        rows.append((label, values[0], values[1]))
    _print_table(["metric", "handcoded", "generated"], rows)
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        raise DomainError(f"listen address must be host:port, got {args.listen!r}")
    config = ServiceConfig(
        model_path=args.model,
        rules_path=args.rules,
        food_list_path=args.food_list,
        arm_policy=args.arm_policy,
        seed=args.seed,
        log_dir=args.log_dir,
    )
    app = create_app(config)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foodprompts",
        description="Learn food co-occurrence from dietary recalls and prompt omitted foods.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a co-occurrence model from a corpus")
    p.add_argument("--corpus", required=True, help="corpus file, one meal per line")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--label", default=None, help="provenance label (default: corpus path)")
    p.add_argument(
        "--min-pair-count",
        type=int,
        default=1,
        help="drop pairs seen fewer times than this (default 1, no pruning)",
    )
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("recommend", help="rank likely omitted foods for a reported set")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("foods", nargs="+", help="food codes already reported")
    p.add_argument("--limit", type=int, default=DEFAULT_RECOMMENDATION_LIMIT)
    p.add_argument("--min-pair-count", type=int, default=1)
    p.add_argument("--format", choices=["table", "structured"], default="table")
    p.set_defaults(func=_cmd_recommend)

    p = sub.add_parser("evaluate", help="leave-one-out omission simulation on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ks", default="1,5,15", help="comma-separated cutoffs")
    p.add_argument("--min-pair-count", type=int, default=1)
    p.add_argument("--out", default=None, help="write the report as JSON here")
    p.add_argument("--format", choices=["table", "structured"], default="table")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("stats", help="per-arm survey metrics from the logs")
    p.add_argument("--recall-log", required=True)
    p.add_argument("--event-log", required=True)
    p.add_argument("--format", choices=["table", "structured"], default="table")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="run the survey service")
    p.add_argument("--listen", default="127.0.0.1:8080", help="host:port")
    p.add_argument("--model", default=None, help="model file for the generated arm")
    p.add_argument("--rules", default=None, help="rule file for the handcoded arm")
    p.add_argument("--food-list", default=None, help="food list for search")
    p.add_argument(
        "--arm-policy",
        default="alternate",
        help="fixed:handcoded | fixed:generated | alternate | random",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for the random arm policy")
    p.add_argument("--log-dir", default="logs")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
