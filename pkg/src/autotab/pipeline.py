"""Declarative pipelines: an encode step, optional reductions, then a model.

A :class:`PipelineSpec` is pure data with a canonical string id derived from
its steps and parameters; fitting it against a training Dataset produces a
:class:`FittedPipeline` that replays every learned statistic verbatim on new
data.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import ColumnSchema, ColumnType, Dataset, Imputer, TaskType
from .errors import TransformError
from .models import FittedModel, ModelFamily, fit as fit_model, is_classifier, load_model
from .reduction import (
    Projection,
    SelectionMask,
    fit_pca,
    fit_svd,
    project,
    select_by_importance,
    select_features,
)
from .transforms import (
    FeatureMatrix,
    FittedTransformer,
    OneHot,
    Standardize,
    TfIdf,
    stack,
)


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


@dataclass(frozen=True)
class StepSpec:
    """One pipeline stage; ``params`` values must be plain scalars/strings."""

    kind: str  # "encode" | "svd" | "pca" | "select_f" | "select_imp"
    params: tuple = ()

    def token(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={_fmt_value(v)}" for k, v in sorted(self.params))
        return f"{self.kind}({inner})"

    @property
    def params_dict(self) -> dict:
        return dict(self.params)


@dataclass(frozen=True)
class PipelineSpec:
    """Ordered transform steps plus a model family and its hyperparameters."""

    steps: tuple[StepSpec, ...]
    family: ModelFamily
    params: tuple = ()

    @property
    def pipeline_id(self) -> str:
        model_inner = ",".join(f"{k}={_fmt_value(v)}" for k, v in sorted(self.params))
        model_token = f"{self.family.value}({model_inner})"
        return "|".join([s.token() for s in self.steps] + [model_token])

    @property
    def params_dict(self) -> dict:
        return dict(self.params)

    @property
    def steps_token(self) -> str:
        return "|".join(s.token() for s in self.steps)

    def with_params(self, params: dict) -> "PipelineSpec":
        return PipelineSpec(self.steps, self.family, tuple(sorted(params.items())))


class Encoder(FittedTransformer):
    """Schema-driven featurization: TF-IDF text, one-hot categoricals,
    standardized numerics, stacked in that order."""

    kind = "encode"

    def __init__(self, tfidf: list[TfIdf], onehot: OneHot | None, standardize: Standardize | None):
        self.tfidf = list(tfidf)
        self.onehot = onehot
        self.standardize = standardize

    @classmethod
    def fit(cls, train: Dataset, blocks: str = "auto", max_text_features: int = 100_000) -> "Encoder":
        text_cols = train.columns_of_type(ColumnType.TEXT)
        cat_cols = train.columns_of_type(ColumnType.CATEGORICAL)
        num_cols = train.columns_of_type(ColumnType.NUMERIC)
        tfidf = [TfIdf.fit(train, col, max_text_features) for col in text_cols]
        onehot = OneHot.fit(train, cat_cols) if cat_cols else None
        standardize = Standardize.fit(train, num_cols) if num_cols else None
        if not (tfidf or onehot or standardize):
            raise TransformError("dataset has no usable feature columns")
        return cls(tfidf, onehot, standardize)

    def transform(self, dataset: Dataset) -> FeatureMatrix:
        blocks = [t.transform(dataset) for t in self.tfidf]
        if self.onehot is not None:
            blocks.append(self.onehot.transform(dataset))
        if self.standardize is not None:
            blocks.append(self.standardize.transform(dataset))
        return stack(blocks)

    def state_dict(self) -> dict:
        return {
            "tfidf": [t.state_dict() for t in self.tfidf],
            "onehot": None if self.onehot is None else self.onehot.state_dict(),
            "standardize": None if self.standardize is None else self.standardize.state_dict(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "Encoder":
        return cls(
            [TfIdf.from_state(s) for s in state["tfidf"]],
            None if state["onehot"] is None else OneHot.from_state(state["onehot"]),
            None if state["standardize"] is None else Standardize.from_state(state["standardize"]),
        )


def _derive_seed(seed: int, token: str) -> int:
    import zlib

    return int(
        np.random.SeedSequence([seed, zlib.crc32(token.encode())]).generate_state(1, np.uint64)[0]
        % (2**63)
    )


def _fit_step(step: StepSpec, matrix: FeatureMatrix, y, task: TaskType, seed: int):
    p = step.params_dict
    if step.kind == "svd":
        k = min(int(p["k"]), matrix.rows, matrix.cols)
        return fit_svd(matrix, max(1, k), seed=seed)
    if step.kind == "pca":
        k = min(int(p["k"]), matrix.rows, matrix.cols)
        return fit_pca(matrix, max(1, k), seed=seed)
    if step.kind == "select_f":
        keep = max(1, int(round(float(p["frac"]) * matrix.cols)))
        return select_features(matrix, y, task, keep)
    if step.kind == "select_imp":
        keep = max(1, int(round(float(p["frac"]) * matrix.cols)))
        return select_by_importance(matrix, y, keep, task=task, seed=seed)
    raise TransformError(f"unknown step kind {step.kind!r}")


def _apply_step(fitted, matrix: FeatureMatrix) -> FeatureMatrix:
    if isinstance(fitted, Projection):
        return project(fitted, matrix)
    if isinstance(fitted, SelectionMask):
        return fitted.apply(matrix)
    raise TransformError(f"cannot apply step of type {type(fitted).__name__}")


@dataclass
class FittedPipeline:
    """Everything needed to replay a pipeline on unseen rows."""

    spec: PipelineSpec
    schema: list[ColumnSchema]
    task: TaskType
    imputer: Imputer
    encoder: Encoder
    fitted_steps: list
    model: FittedModel
    seed: int
    metric_name: str | None = None
    score: float | None = None
    created_at: float = field(default_factory=time.time)

    @property
    def pipeline_id(self) -> str:
        return self.spec.pipeline_id

    @property
    def classes_(self):
        return self.model.classes_

    def transform(self, dataset: Dataset) -> FeatureMatrix:
        data = self.imputer.apply(dataset)
        matrix = self.encoder.transform(data)
        for fitted in self.fitted_steps:
            matrix = _apply_step(fitted, matrix)
        return matrix

    def predict(self, dataset: Dataset) -> np.ndarray:
        return self.model.predict(self.transform(dataset))

    def predict_score(self, dataset: Dataset) -> np.ndarray:
        return self.model.predict_score(self.transform(dataset))


class TransformCache:
    """Fitted steps and transformed matrices shared across one search run.

    Keyed by the steps token; entries are pure functions of (train rows,
    target, run seed), so sharing them never changes any result.
    """

    def __init__(self):
        self._entries: dict[str, tuple] = {}

    def get(self, token: str):
        return self._entries.get(token)

    def put(self, token: str, value: tuple):
        self._entries[token] = value


def fit_pipeline(
    spec: PipelineSpec,
    train: Dataset,
    seed: int,
    cache: TransformCache | None = None,
    valid: Dataset | None = None,
):
    """Fit a pipeline spec on training rows.

    Returns (pipeline, transformed train matrix, transformed valid matrix or
    None, seconds spent fitting transforms).  All transform state is learned
    from ``train`` alone; ``valid`` is only ever transformed.
    """
    token = spec.steps_token
    entry = cache.get(token) if cache is not None else None
    if entry is None:
        t0 = time.perf_counter()
        imputer = Imputer.fit(train)
        train_imp = imputer.apply(train)
        encode_params = spec.steps[0].params_dict if spec.steps else {}
        max_text = int(encode_params.get("max_text_features", 100_000))
        encoder = Encoder.fit(train_imp, max_text_features=max_text)
        matrix = encoder.transform(train_imp)
        fitted_steps = []
        for step in spec.steps[1:]:
            step_seed = _derive_seed(seed, token + "::" + step.token())
            fitted = _fit_step(step, matrix, train.target, train.task, step_seed)
            fitted_steps.append(fitted)
            matrix = _apply_step(fitted, matrix)
        transform_seconds = time.perf_counter() - t0
        valid_matrix = None
        if valid is not None:
            valid_imp = imputer.apply(valid)
            vm = encoder.transform(valid_imp)
            for fitted in fitted_steps:
                vm = _apply_step(fitted, vm)
            valid_matrix = vm
        entry = (imputer, encoder, fitted_steps, matrix, valid_matrix, transform_seconds)
        if cache is not None:
            cache.put(token, entry)
    imputer, encoder, fitted_steps, matrix, valid_matrix, transform_seconds = entry
    if valid is not None and valid_matrix is None:
        vm = encoder.transform(imputer.apply(valid))
        for fitted in fitted_steps:
            vm = _apply_step(fitted, vm)
        valid_matrix = vm

    model_seed = _derive_seed(seed, spec.pipeline_id)
    model = fit_model(spec.family, spec.params_dict, matrix, train.target, seed=model_seed)
    pipeline = FittedPipeline(
        spec=spec,
        schema=list(train.columns),
        task=train.task,
        imputer=imputer,
        encoder=encoder,
        fitted_steps=list(fitted_steps),
        model=model,
        seed=seed,
    )
    return pipeline, matrix, valid_matrix, transform_seconds


@dataclass
class EnsemblePipeline:
    """Prediction-averaging ensemble over fitted pipelines.

    Classification averages (then renormalizes) the members' probability
    rows; regression averages predicted values.
    """

    members: list[FittedPipeline]
    pipeline_id: str
    task: TaskType
    seed: int
    metric_name: str | None = None
    score: float | None = None
    created_at: float = field(default_factory=time.time)

    @property
    def schema(self) -> list[ColumnSchema]:
        return self.members[0].schema

    @property
    def classes_(self):
        return self.members[0].classes_

    def predict_score(self, dataset: Dataset) -> np.ndarray:
        scores = [m.predict_score(dataset) for m in self.members]
        mean = np.mean(scores, axis=0)
        total = mean.sum(axis=1, keepdims=True)
        return mean / np.where(total > 0, total, 1.0)

    def predict(self, dataset: Dataset) -> np.ndarray:
        if self.task.is_classification:
            return self.classes_[np.argmax(self.predict_score(dataset), axis=1)]
        return np.mean([m.predict(dataset) for m in self.members], axis=0)


def is_classification_pipeline(p) -> bool:
    return p.task.is_classification


# -- persistence hooks -------------------------------------------------------

def _schema_state(schema: list[ColumnSchema]) -> list[dict]:
    return [
        {
            "name": c.name,
            "ctype": c.ctype.value,
            "distinct_count": c.distinct_count,
            "missing_count": c.missing_count,
            "user_override": None if c.user_override is None else c.user_override.value,
        }
        for c in schema
    ]


def _schema_from_state(state: list[dict]) -> list[ColumnSchema]:
    return [
        ColumnSchema(
            name=s["name"],
            ctype=ColumnType(s["ctype"]),
            distinct_count=int(s["distinct_count"]),
            missing_count=int(s["missing_count"]),
            user_override=None if s["user_override"] is None else ColumnType(s["user_override"]),
        )
        for s in state
    ]


_STEP_LOADERS = {"projection": Projection.from_state, "mask": SelectionMask.from_state}


def _step_state(fitted) -> dict:
    if isinstance(fitted, Projection):
        return {"step_kind": "projection", "state": fitted.state_dict()}
    if isinstance(fitted, SelectionMask):
        return {"step_kind": "mask", "state": fitted.state_dict()}
    raise TransformError(f"cannot serialize step {type(fitted).__name__}")


def pipeline_state(p: FittedPipeline | EnsemblePipeline) -> dict:
    if isinstance(p, EnsemblePipeline):
        return {
            "pipeline_kind": "ensemble",
            "pipeline_id": p.pipeline_id,
            "task": p.task.value,
            "seed": p.seed,
            "metric_name": p.metric_name,
            "score": p.score,
            "created_at": p.created_at,
            "members": [pipeline_state(m) for m in p.members],
        }
    return {
        "pipeline_kind": "single",
        "pipeline_id": p.pipeline_id,
        "steps": [{"kind": s.kind, "params": list(s.params)} for s in p.spec.steps],
        "family": p.spec.family.value,
        "model_params": list(p.spec.params),
        "schema": _schema_state(p.schema),
        "task": p.task.value,
        "seed": p.seed,
        "metric_name": p.metric_name,
        "score": p.score,
        "created_at": p.created_at,
        "imputer": p.imputer.state_dict(),
        "encoder": p.encoder.state_dict(),
        "fitted_steps": [_step_state(s) for s in p.fitted_steps],
        "model_kind": p.model.kind,
        "model": p.model.state_dict(),
    }


def pipeline_from_state(state: dict) -> FittedPipeline | EnsemblePipeline:
    if state["pipeline_kind"] == "ensemble":
        members = [pipeline_from_state(m) for m in state["members"]]
        return EnsemblePipeline(
            members=members,
            pipeline_id=state["pipeline_id"],
            task=TaskType(state["task"]),
            seed=int(state["seed"]),
            metric_name=state["metric_name"],
            score=state["score"],
            created_at=float(state["created_at"]),
        )
    steps = tuple(
        StepSpec(s["kind"], tuple(tuple(kv) for kv in s["params"])) for s in state["steps"]
    )
    spec = PipelineSpec(
        steps=steps,
        family=ModelFamily(state["family"]),
        params=tuple(tuple(kv) for kv in state["model_params"]),
    )
    fitted_steps = [_STEP_LOADERS[s["step_kind"]](s["state"]) for s in state["fitted_steps"]]
    return FittedPipeline(
        spec=spec,
        schema=_schema_from_state(state["schema"]),
        task=TaskType(state["task"]),
        imputer=Imputer.from_state(state["imputer"]),
        encoder=Encoder.from_state(state["encoder"]),
        fitted_steps=fitted_steps,
        model=load_model(state["model_kind"], state["model"]),
        seed=int(state["seed"]),
        metric_name=state["metric_name"],
        score=state["score"],
        created_at=float(state["created_at"]),
    )
