"""Candidate generation, budgeted grid/random search, leaderboard, stacking.

Presets map the dataset's column types and task onto an ordered list of
pipeline candidates (fast model families first).  Each candidate's
hyperparameters come from a restricted per-family space searched by grid
enumeration (small spaces) or seeded random sampling; every evaluation lands
on an append-only leaderboard from which the winner is selected
deterministically.
"""

from __future__ import annotations

import itertools
import sys
import time
import zlib
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

import numpy as np

from .data import ColumnSchema, ColumnType, Dataset, TaskType
from .errors import SearchError
from .metrics import Metric, evaluate_metric, resolve_metric
from .models import ModelFamily
from .pipeline import (
    EnsemblePipeline,
    FittedPipeline,
    PipelineSpec,
    StepSpec,
    TransformCache,
    fit_pipeline,
)
from .split import SplitConfig, split_dataset

#: Defaults chosen to fit the 30-minute wall-clock budget.
DEFAULT_BUDGET_SECONDS = 1800.0
SVD_COMPONENTS = 120
PCA_COMPONENTS = 60
SELECT_FRACTION = 0.5
GRID_LIMIT = 64
RANDOM_ITER = 32
STACK_TOP_K = 3


@dataclass(frozen=True)
class SearchSpace:
    """Restricted hyperparameter space for one model family."""

    family: ModelFamily
    grid: dict[str, list]
    distributions: dict[str, tuple]

    @property
    def size(self) -> int:
        n = 1
        for values in self.grid.values():
            n *= len(values)
        return n


def search_space_for(family: ModelFamily) -> SearchSpace:
    """The tuned parameters and value sets for each family."""
    f = ModelFamily
    if family in (f.RANDOM_FOREST, f.RANDOM_FOREST_REGRESSOR):
        grid = {
            "n_estimators": [100, 250, 500],
            "min_samples_split": [2, 5, 10],
            "max_features": ["sqrt", "log2", "half"],
        }
        dists = {k: ("choice", tuple(v)) for k, v in grid.items()}
    elif family in (f.GRADIENT_BOOSTING, f.GRADIENT_BOOSTING_REGRESSOR):
        grid = {
            "n_estimators": [100, 200],
            "learning_rate": [0.05, 0.1],
            "max_depth": [3, 5],
        }
        dists = {
            "n_estimators": ("choice", (100, 200)),
            "learning_rate": ("loguniform", 0.05, 0.1),
            "max_depth": ("choice", (3, 5)),
        }
    elif family in (f.SVM, f.SVR):
        grid = {"C": [0.1, 1.0, 10.0, 100.0], "gamma": [0.001, 0.01, 0.1, "scale"]}
        dists = {"C": ("loguniform", 0.1, 100.0), "gamma": ("choice", (0.001, 0.01, 0.1, "scale"))}
    elif family is f.LOGISTIC_REGRESSION:
        grid = {"C": [0.01, 0.1, 1.0, 10.0]}
        dists = {"C": ("loguniform", 0.01, 10.0)}
    elif family in (f.RIDGE_CLASSIFIER, f.RIDGE_REGRESSION, f.LASSO):
        grid = {"alpha": [0.01, 0.1, 1.0, 10.0]}
        dists = {"alpha": ("loguniform", 0.01, 10.0)}
    elif family is f.NEAREST_NEIGHBORS:
        grid = {"k": [3, 5, 11, 25]}
        dists = {"k": ("choice", (3, 5, 11, 25))}
    else:  # naive Bayes, linear regression: nothing to tune
        grid = {}
        dists = {}
    return SearchSpace(family=family, grid=grid, distributions=dists)


@dataclass(frozen=True)
class EvaluationRecord:
    """One leaderboard entry (successful or failed)."""

    pipeline_id: str
    metric: Metric
    score: float | None
    fit_seconds: float
    eval_seconds: float
    status: str = "ok"  # "ok" | "failed"
    error: str | None = None


@dataclass
class Budget:
    """Wall-clock budget; enforcement happens between evaluations."""

    wall_seconds: float = DEFAULT_BUDGET_SECONDS
    started_at: float = field(default_factory=time.monotonic)

    def __post_init__(self):
        if self.wall_seconds <= 0:
            # zero means "first evaluation only"; negative is a config bug
            self.wall_seconds = max(self.wall_seconds, 0.0)

    def elapsed(self) -> float:
        return time.monotonic() - self.started_at

    def expired(self) -> bool:
        return self.elapsed() >= self.wall_seconds


_FAST_CLS = [
    ModelFamily.LOGISTIC_REGRESSION,
    ModelFamily.RIDGE_CLASSIFIER,
    ModelFamily.NAIVE_BAYES,
    ModelFamily.NEAREST_NEIGHBORS,
]
_SLOW_CLS = [ModelFamily.RANDOM_FOREST, ModelFamily.GRADIENT_BOOSTING, ModelFamily.SVM]
_FAST_REG = [
    ModelFamily.RIDGE_REGRESSION,
    ModelFamily.LASSO,
    ModelFamily.LINEAR_REGRESSION,
]
_SLOW_REG = [
    ModelFamily.RANDOM_FOREST_REGRESSOR,
    ModelFamily.GRADIENT_BOOSTING_REGRESSOR,
    ModelFamily.SVR,
]

_ENCODE = StepSpec("encode")


def generate_candidates(schema: list[ColumnSchema], task: TaskType) -> list[PipelineSpec]:
    """Deterministic ordered candidate list for a schema and task.

    Text data goes through TF-IDF, optionally reduced by truncated SVD;
    all-numeric data is standardized with a PCA variant for the forest;
    mixed data is one-hot + standardized with a univariate-selection variant
    across the whole zoo.  Regression adds an importance-selection + SVR
    candidate.  Fast families always precede slow ones.
    """
    if not schema:
        raise SearchError("empty schema")
    has_text = any(c.ctype is ColumnType.TEXT for c in schema)
    has_cat = any(c.ctype is ColumnType.CATEGORICAL for c in schema)
    n_num = sum(1 for c in schema if c.ctype is ColumnType.NUMERIC)
    classification = task.is_classification

    def spec(steps, family):
        return PipelineSpec(tuple(steps), family)

    candidates: list[PipelineSpec] = []
    if has_text:
        svd = StepSpec("svd", (("k", SVD_COMPONENTS),))
        if classification:
            # plain TF-IDF pairs with the sparse-capable linear model only
            candidates.append(spec([_ENCODE], ModelFamily.LOGISTIC_REGRESSION))
            candidates.append(spec([_ENCODE, svd], ModelFamily.LOGISTIC_REGRESSION))
            candidates.append(spec([_ENCODE, svd], ModelFamily.RANDOM_FOREST))
            candidates.append(spec([_ENCODE, svd], ModelFamily.SVM))
        else:
            for family in _FAST_REG + _SLOW_REG:
                candidates.append(spec([_ENCODE, svd], family))
        return candidates

    fast = _FAST_CLS if classification else _FAST_REG
    slow = _SLOW_CLS if classification else _SLOW_REG

    if has_cat:
        select = StepSpec("select_f", (("frac", SELECT_FRACTION),))
        for family in fast:
            candidates.append(spec([_ENCODE], family))
        for family in fast:
            candidates.append(spec([_ENCODE, select], family))
        for family in slow:
            candidates.append(spec([_ENCODE], family))
        for family in slow:
            candidates.append(spec([_ENCODE, select], family))
    else:
        for family in fast:
            candidates.append(spec([_ENCODE], family))
        if classification:
            pca = StepSpec("pca", (("k", min(PCA_COMPONENTS, max(1, n_num))),))
            candidates.append(spec([_ENCODE, pca], ModelFamily.RANDOM_FOREST))
        for family in slow:
            candidates.append(spec([_ENCODE], family))

    if not classification:
        select_imp = StepSpec("select_imp", (("frac", SELECT_FRACTION),))
        candidates.append(spec([_ENCODE, select_imp], ModelFamily.SVR))
    return candidates


def _grid_assignments(space: SearchSpace) -> list[dict]:
    names = sorted(space.grid)
    if not names:
        return [{}]
    value_lists = [space.grid[name] for name in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*value_lists)]


def _random_assignments(space: SearchSpace, n_iter: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    names = sorted(space.distributions)
    seen = set()
    out = []
    for _ in range(n_iter):
        assignment = {}
        for name in names:
            rule = space.distributions[name]
            if rule[0] == "choice":
                values = rule[1]
                assignment[name] = values[int(rng.integers(len(values)))]
            elif rule[0] == "loguniform":
                lo, hi = float(rule[1]), float(rule[2])
                assignment[name] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
            else:
                raise SearchError(f"unknown sampling rule {rule[0]!r}")
        key = tuple(sorted(assignment.items()))
        if key not in seen:
            seen.add(key)
            out.append(assignment)
    return out


def _progress(record: EvaluationRecord, stream=None):
    stream = stream or sys.stderr
    score = "failed" if record.score is None else f"{record.score:.6f}"
    elapsed = record.fit_seconds + record.eval_seconds
    print(f"[autotab] {record.pipeline_id} score={score} seconds={elapsed:.2f}", file=stream, flush=True)


def evaluate_candidate(
    spec: PipelineSpec,
    train: Dataset,
    valid: Dataset,
    metric: Metric,
    seed: int,
    cache: TransformCache | None = None,
) -> tuple[EvaluationRecord, FittedPipeline | None]:
    """Fit transforms on train, fit the model, score on validation.

    Failures never propagate; they come back as failed records.
    """
    t0 = time.perf_counter()
    try:
        pipeline, _, valid_matrix, _ = fit_pipeline(spec, train, seed, cache=cache, valid=valid)
        fit_seconds = time.perf_counter() - t0
        t1 = time.perf_counter()
        model = pipeline.model
        needs_scores = metric.kind in ("auc", "logloss")
        scores = model.predict_score(valid_matrix) if needs_scores else None
        labels = None if needs_scores else model.predict(valid_matrix)
        score = evaluate_metric(
            metric, valid.target, y_pred=labels, scores=scores, classes=model.classes_
        )
        eval_seconds = time.perf_counter() - t1
        if not np.isfinite(score):
            raise SearchError(f"non-finite score {score!r}")
        record = EvaluationRecord(
            pipeline_id=spec.pipeline_id,
            metric=metric,
            score=float(score),
            fit_seconds=fit_seconds,
            eval_seconds=eval_seconds,
        )
        pipeline.metric_name = metric.kind
        pipeline.score = float(score)
        return record, pipeline
    except Exception as exc:  # noqa: BLE001 - candidate failures must not abort the run
        return (
            EvaluationRecord(
                pipeline_id=spec.pipeline_id,
                metric=metric,
                score=None,
                fit_seconds=time.perf_counter() - t0,
                eval_seconds=0.0,
                status="failed",
                error=f"{type(exc).__name__}: {exc}",
            ),
            None,
        )


def _run_assignments(
    template: PipelineSpec,
    assignments: list[dict],
    train: Dataset,
    valid: Dataset,
    metric: Metric,
    budget: Budget,
    seed: int,
    cache: TransformCache | None,
    force_first: bool = False,
    progress: bool = False,
) -> list[EvaluationRecord]:
    records = []
    for i, assignment in enumerate(assignments):
        if budget.expired() and not (force_first and i == 0):
            break
        record, _ = evaluate_candidate(
            template.with_params(assignment), train, valid, metric, seed, cache
        )
        if progress:
            _progress(record)
        records.append(record)
    return records


def grid_search(
    candidate: PipelineSpec,
    space: SearchSpace,
    train: Dataset,
    valid: Dataset,
    metric: Metric,
    budget: Budget,
    seed: int = 42,
    cache: TransformCache | None = None,
) -> list[EvaluationRecord]:
    """Evaluate grid points in lexicographic parameter order until the
    grid is exhausted or the deadline passes."""
    return _run_assignments(
        candidate, _grid_assignments(space), train, valid, metric, budget, seed, cache
    )


def random_search(
    candidate: PipelineSpec,
    space: SearchSpace,
    train: Dataset,
    valid: Dataset,
    metric: Metric,
    budget: Budget,
    n_iter: int,
    seed: int = 42,
    cache: TransformCache | None = None,
) -> list[EvaluationRecord]:
    """Evaluate n_iter seeded draws from the space's distributions
    (duplicate draws are evaluated once)."""
    if n_iter < 1:
        raise SearchError(f"n_iter must be >= 1, got {n_iter}")
    return _run_assignments(
        candidate, _random_assignments(space, n_iter, seed), train, valid, metric, budget, seed, cache
    )


def _record_order_key(record: EvaluationRecord, metric: Metric):
    # successful records first, best score first, then id, then fit time
    if record.score is None:
        return (1, 0.0, record.pipeline_id, record.fit_seconds)
    signed = -record.score if metric.direction == "maximize" else record.score
    return (0, signed, record.pipeline_id, record.fit_seconds)


def best(records: list[EvaluationRecord], metric: Metric) -> EvaluationRecord:
    """Argmax/argmin of score with deterministic tie-breaking.

    Ties go to the lexicographically smallest pipeline id, then the shortest
    fit time.
    """
    ok = [r for r in records if r.status == "ok" and r.score is not None]
    if not ok:
        raise SearchError("leaderboard has no successful evaluations")
    return min(ok, key=lambda r: _record_order_key(r, metric))


def sort_leaderboard(records: list[EvaluationRecord], metric: Metric) -> list[EvaluationRecord]:
    return sorted(records, key=lambda r: _record_order_key(r, metric))


def stack_models(
    pipelines: list[FittedPipeline],
    k: int,
    valid: Dataset,
    metric: Metric,
) -> tuple[EvaluationRecord | None, EnsemblePipeline | None]:
    """Average the top-k distinct-family pipelines into one ensemble.

    Returns (record, ensemble), or (None, None) when fewer than two distinct
    families have successful fits (the stacker is skipped silently).
    """
    best_per_family: dict[ModelFamily, FittedPipeline] = {}
    for p in pipelines:
        if p.score is None:
            continue
        current = best_per_family.get(p.spec.family)
        if (
            current is None
            or metric.better(p.score, current.score)
            or (p.score == current.score and p.pipeline_id < current.pipeline_id)
        ):
            best_per_family[p.spec.family] = p
    ranked = sorted(
        best_per_family.values(),
        key=lambda p: (
            -p.score if metric.direction == "maximize" else p.score,
            p.pipeline_id,
        ),
    )
    if k < 2 or len(ranked) < 2:
        return None, None
    members = ranked[:k]
    ensemble_id = "stack(" + "+".join(m.spec.family.value for m in members) + ")"
    ensemble = EnsemblePipeline(
        members=list(members),
        pipeline_id=ensemble_id,
        task=members[0].task,
        seed=members[0].seed,
    )
    t0 = time.perf_counter()
    try:
        needs_scores = metric.kind in ("auc", "logloss")
        scores = ensemble.predict_score(valid) if needs_scores else None
        labels = None if needs_scores else ensemble.predict(valid)
        score = evaluate_metric(
            metric, valid.target, y_pred=labels, scores=scores, classes=ensemble.classes_
        )
    except Exception as exc:  # noqa: BLE001
        record = EvaluationRecord(
            pipeline_id=ensemble_id,
            metric=metric,
            score=None,
            fit_seconds=0.0,
            eval_seconds=time.perf_counter() - t0,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
        )
        return record, None
    record = EvaluationRecord(
        pipeline_id=ensemble_id,
        metric=metric,
        score=float(score),
        fit_seconds=0.0,
        eval_seconds=time.perf_counter() - t0,
    )
    ensemble.metric_name = metric.kind
    ensemble.score = float(score)
    return record, ensemble


@dataclass(frozen=True)
class RunConfig:
    """Run-level knobs; defaults mirror the documented conventions."""

    metric: str = "auto"
    budget_seconds: float = DEFAULT_BUDGET_SECONDS
    seed: int = 42
    workers: int = 1
    train_fraction: float = 0.8
    strategy: str = "auto"  # "auto" | "grid" | "random"
    grid_limit: int = GRID_LIMIT
    random_iter: int = RANDOM_ITER
    stack_top_k: int = STACK_TOP_K
    progress: bool = True

    def validate(self):
        from .errors import ConfigError

        if self.budget_seconds <= 0:
            raise ConfigError(f"budget_seconds must be > 0, got {self.budget_seconds}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.strategy not in ("auto", "grid", "random"):
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass
class RunResult:
    report: "Report"  # noqa: F821 - defined in persist
    pipeline: FittedPipeline | EnsemblePipeline


def _candidate_seed(run_seed: int, token: str) -> int:
    return int(
        np.random.SeedSequence([run_seed, zlib.crc32(token.encode())]).generate_state(
            1, np.uint64
        )[0]
        % (2**31)
    )


def run_search(dataset: Dataset, config: RunConfig = RunConfig()) -> RunResult:
    """End-to-end search: split, generate candidates, search, stack, select.

    The first evaluation always runs even on an exhausted budget; after that
    no evaluation starts past the deadline (running ones are never
    preempted).
    """
    from .persist import Report

    config.validate()
    if dataset.target is None or dataset.task is None:
        raise SearchError("run_search needs a dataset with a target and task")
    task = dataset.task
    metric = resolve_metric(config.metric, task, dataset.target)

    split_cfg = SplitConfig(
        train_fraction=config.train_fraction,
        seed=config.seed,
        stratified=task.is_classification,
    )
    train, valid = split_dataset(dataset, split_cfg)

    budget = Budget(wall_seconds=config.budget_seconds)
    candidates = generate_candidates(dataset.columns, task)
    cache = TransformCache()

    # flatten (candidate, assignment) pairs in deterministic order
    tasks: list[PipelineSpec] = []
    for template in candidates:
        space = search_space_for(template.family)
        use_random = config.strategy == "random" or (
            config.strategy == "auto" and space.size > config.grid_limit
        )
        if use_random:
            assignments = _random_assignments(
                space, config.random_iter, _candidate_seed(config.seed, template.pipeline_id)
            )
        else:
            assignments = _grid_assignments(space)
        tasks.extend(template.with_params(a) for a in assignments)

    leaderboard: list[EvaluationRecord] = []
    # only the best pipeline per family is kept alive (bounded memory);
    # the global winner is by construction the best of its own family
    best_per_family: dict[ModelFamily, FittedPipeline] = {}

    def handle(result):
        record, pipeline = result
        leaderboard.append(record)
        if pipeline is not None:
            current = best_per_family.get(pipeline.spec.family)
            if (
                current is None
                or metric.better(pipeline.score, current.score)
                or (pipeline.score == current.score and pipeline.pipeline_id < current.pipeline_id)
            ):
                best_per_family[pipeline.spec.family] = pipeline
        if config.progress:
            _progress(record)

    if config.workers <= 1:
        for i, spec in enumerate(tasks):
            if budget.expired() and i > 0:
                break
            handle(evaluate_candidate(spec, train, valid, metric, config.seed, cache))
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            pending = set()
            it = iter(enumerate(tasks))
            exhausted = False
            while True:
                while not exhausted and len(pending) < config.workers:
                    try:
                        i, spec = next(it)
                    except StopIteration:
                        exhausted = True
                        break
                    if budget.expired() and i > 0:
                        exhausted = True
                        break
                    pending.add(
                        pool.submit(evaluate_candidate, spec, train, valid, metric, config.seed, cache)
                    )
                if not pending:
                    break
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    handle(fut.result())

    # prediction-averaging ensemble over the top families
    stacked: EnsemblePipeline | None = None
    if not budget.expired():
        record, stacked = stack_models(
            list(best_per_family.values()), config.stack_top_k, valid, metric
        )
        if record is not None:
            leaderboard.append(record)
            if config.progress:
                _progress(record)

    try:
        winner_record = best(leaderboard, metric)
    except SearchError:
        errors = [f"{r.pipeline_id}: {r.error}" for r in leaderboard if r.status == "failed"]
        raise SearchError(
            "no viable candidate; all evaluations failed:\n" + "\n".join(errors)
        ) from None
    if stacked is not None and winner_record.pipeline_id == stacked.pipeline_id:
        winner = stacked
    else:
        by_id = {p.pipeline_id: p for p in best_per_family.values()}
        winner = by_id[winner_record.pipeline_id]

    n_types = {
        "numeric": sum(1 for c in dataset.columns if c.ctype is ColumnType.NUMERIC),
        "categorical": sum(1 for c in dataset.columns if c.ctype is ColumnType.CATEGORICAL),
        "text": sum(1 for c in dataset.columns if c.ctype is ColumnType.TEXT),
    }
    report = Report(
        dataset_summary={
            "rows": dataset.n_rows,
            "feature_columns": dataset.n_cols,
            "column_types": n_types,
            "target": dataset.target_name or "target",
            "train_rows": train.n_rows,
            "valid_rows": valid.n_rows,
        },
        task=task.value,
        metric=metric,
        leaderboard=sort_leaderboard(leaderboard, metric),
        winner_id=winner_record.pipeline_id,
        winner_score=winner_record.score,
        elapsed_seconds=budget.elapsed(),
        seed=config.seed,
        config={
            "metric": config.metric,
            "budget_seconds": config.budget_seconds,
            "seed": config.seed,
            "workers": config.workers,
            "train_fraction": config.train_fraction,
            "strategy": config.strategy,
            "grid_limit": config.grid_limit,
            "random_iter": config.random_iter,
            "stack_top_k": config.stack_top_k,
        },
        created_at=time.time(),
    )
    return RunResult(report=report, pipeline=winner)
