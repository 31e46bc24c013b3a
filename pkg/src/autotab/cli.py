"""Command-line entry points: train a model, batch-predict, inspect a table.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .data import ColumnType, load_csv, load_csv_like
from .errors import AutotabError, ConfigError
from .metrics import resolve_metric
from .persist import load_pipeline, save_pipeline, write_report
from .search import RunConfig, generate_candidates, run_search

_TYPE_ALIASES = {
    "numeric": ColumnType.NUMERIC,
    "number": ColumnType.NUMERIC,
    "categorical": ColumnType.CATEGORICAL,
    "category": ColumnType.CATEGORICAL,
    "text": ColumnType.TEXT,
}


def _parse_type_overrides(raw: str | None) -> dict[str, ColumnType]:
    if not raw:
        return {}
    overrides = {}
    for piece in raw.split(","):
        if "=" not in piece:
            raise ConfigError(f"bad --types entry {piece!r}; expected column=type")
        name, _, type_name = piece.partition("=")
        try:
            overrides[name.strip()] = _TYPE_ALIASES[type_name.strip().lower()]
        except KeyError:
            raise ConfigError(
                f"unknown column type {type_name!r}; expected numeric, categorical or text"
            ) from None
    return overrides


def _default_workers() -> int:
    raw = os.environ.get("AUTOTAB_WORKERS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"AUTOTAB_WORKERS must be an integer, got {raw!r}") from None


def _add_run_parser(sub):
    p = sub.add_parser("run", help="search for the best pipeline and save it")
    p.add_argument("--train", required=True, help="training CSV path")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument(
        "--task",
        default="auto",
        choices=["auto", "binary", "multiclass", "regression"],
        help="task type (default: inferred from the target)",
    )
    p.add_argument(
        "--metric",
        default="auto",
        choices=["auto", "auc", "accuracy", "weighted_f1", "rmse", "logloss"],
        help="evaluation metric (default: chosen from task and label skew)",
    )
    p.add_argument("--budget-seconds", type=float, default=1800.0, help="wall-clock budget")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=None, help="parallel candidate evaluations")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--strategy", default="auto", choices=["auto", "grid", "random"])
    p.add_argument("--report", default="report.json", help="report output path")
    p.add_argument("--artifact", default="model.acp", help="fitted pipeline output path")
    p.add_argument("--types", default=None, help="type overrides: col=categorical,col2=text")
    p.add_argument("--quiet", action="store_true", help="suppress per-evaluation progress lines")


def _add_predict_parser(sub):
    p = sub.add_parser("predict", help="batch-predict with a saved pipeline")
    p.add_argument("--artifact", required=True, help="pipeline artifact path")
    p.add_argument("--input", required=True, help="input CSV path")
    p.add_argument("--output", required=True, help="predictions CSV path")


def _add_inspect_parser(sub):
    p = sub.add_parser("inspect", help="print inferred schema and candidates, no training")
    p.add_argument("--train", required=True, help="training CSV path")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--types", default=None, help="type overrides: col=categorical,col2=text")


def _check_task_override(dataset, requested: str):
    from .data import TaskType

    if requested == "auto":
        return
    wanted = {
        "binary": TaskType.BINARY,
        "multiclass": TaskType.MULTICLASS,
        "regression": TaskType.REGRESSION,
    }[requested]
    if wanted is TaskType.REGRESSION and dataset.target.dtype.kind not in "fiu":
        raise ConfigError("--task regression needs a numeric target column")
    dataset.task = wanted


def cmd_run(args) -> int:
    overrides = _parse_type_overrides(args.types)
    dataset = load_csv(args.train, target_column=args.target, overrides=overrides)
    _check_task_override(dataset, args.task)
    config = RunConfig(
        metric=args.metric,
        budget_seconds=args.budget_seconds,
        seed=args.seed,
        workers=args.workers if args.workers is not None else _default_workers(),
        train_fraction=args.train_fraction,
        strategy=args.strategy,
        progress=not args.quiet,
    )
    config.validate()
    # fail fast on metric/task mismatches before any work happens
    resolve_metric(config.metric, dataset.task, dataset.target)

    result = run_search(dataset, config)
    save_pipeline(result.pipeline, args.artifact)
    write_report(result.report, args.report)
    report = result.report
    print(
        f"winner: {report.winner_id}\n"
        f"{report.metric.kind}: {report.winner_score:.6f}\n"
        f"elapsed: {report.elapsed_seconds:.1f}s over {len(report.leaderboard)} evaluations\n"
        f"artifact: {args.artifact}\nreport: {args.report}"
    )
    return 0


def cmd_predict(args) -> int:
    pipeline = load_pipeline(args.artifact)
    dataset = load_csv_like(args.input, pipeline.schema)
    classification = pipeline.task.is_classification
    n = dataset.n_rows
    if n == 0:
        predictions = np.empty(0, dtype=object)
        scores = None
    else:
        predictions = pipeline.predict(dataset)
        scores = pipeline.predict_score(dataset) if classification else None
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["prediction"]
        if classification:
            header += [f"proba_{c}" for c in pipeline.classes_]
        writer.writerow(header)
        for i in range(n):
            row = [predictions[i]]
            if scores is not None:
                row += [f"{v:.10g}" for v in scores[i]]
            writer.writerow(row)
    print(f"wrote {n} predictions to {args.output}")
    return 0


def cmd_inspect(args) -> int:
    overrides = _parse_type_overrides(args.types)
    dataset = load_csv(args.train, target_column=args.target, overrides=overrides)
    metric = resolve_metric("auto", dataset.task, dataset.target)
    print(f"rows: {dataset.n_rows}")
    print(f"task: {dataset.task.value}")
    print(f"auto metric: {metric.kind} ({metric.direction})")
    print("columns:")
    for col in dataset.columns:
        override = " (override)" if col.user_override else ""
        print(
            f"  {col.name}: {col.ctype.value}{override}, "
            f"{col.distinct_count} distinct, {col.missing_count} missing"
        )
    print("candidates:")
    for spec in generate_candidates(dataset.columns, dataset.task):
        print(f"  {spec.pipeline_id}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autotab",
        description="Automated model and hyperparameter search for tabular CSV data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_predict_parser(sub)
    _add_inspect_parser(sub)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "predict":
            return cmd_predict(args)
        return cmd_inspect(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AutotabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
