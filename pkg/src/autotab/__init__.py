"""autotab: automated model and hyperparameter search for tabular data.

Typical use::

    from autotab import load_csv, run_search, RunConfig

    dataset = load_csv("train.csv", target_column="label")
    result = run_search(dataset, RunConfig(budget_seconds=600))
    print(result.report.winner_id, result.report.winner_score)
"""

from .data import (
    ColumnSchema,
    ColumnType,
    Dataset,
    Imputer,
    TaskType,
    impute,
    infer_column_type,
    infer_task,
    load_csv,
    load_csv_like,
    write_csv,
)
from .errors import (
    ArtifactError,
    AutotabError,
    ConfigError,
    DegenerateTargetError,
    MetricError,
    ModelError,
    SchemaError,
    SearchError,
    StratificationError,
    TransformError,
)
from .metrics import (
    Metric,
    accuracy,
    auc,
    choose_metric,
    logloss,
    resolve_metric,
    rmse,
    weighted_f1,
)
from .models import ModelFamily, fit, predict, predict_score
from .pipeline import EnsemblePipeline, FittedPipeline, PipelineSpec, StepSpec, fit_pipeline
from .persist import Report, load_pipeline, save_pipeline, write_report
from .reduction import (
    Projection,
    SelectionMask,
    fit_pca,
    fit_svd,
    project,
    select_by_importance,
    select_features,
)
from .search import (
    Budget,
    EvaluationRecord,
    RunConfig,
    RunResult,
    SearchSpace,
    best,
    generate_candidates,
    grid_search,
    random_search,
    run_search,
    search_space_for,
    stack_models,
)
from .split import Split, SplitConfig, split, split_dataset
from .transforms import (
    FeatureMatrix,
    OneHot,
    Standardize,
    TfIdf,
    apply,
    fit_one_hot,
    fit_standardize,
    fit_tfidf,
    stack,
)

__version__ = "0.1.0"

__all__ = [
    "ColumnSchema",
    "ColumnType",
    "Dataset",
    "Imputer",
    "TaskType",
    "impute",
    "infer_column_type",
    "infer_task",
    "load_csv",
    "load_csv_like",
    "write_csv",
    "AutotabError",
    "ArtifactError",
    "ConfigError",
    "DegenerateTargetError",
    "MetricError",
    "ModelError",
    "SchemaError",
    "SearchError",
    "StratificationError",
    "TransformError",
    "Metric",
    "accuracy",
    "auc",
    "choose_metric",
    "logloss",
    "resolve_metric",
    "rmse",
    "weighted_f1",
    "ModelFamily",
    "fit",
    "predict",
    "predict_score",
    "EnsemblePipeline",
    "FittedPipeline",
    "PipelineSpec",
    "StepSpec",
    "fit_pipeline",
    "Report",
    "load_pipeline",
    "save_pipeline",
    "write_report",
    "Projection",
    "SelectionMask",
    "fit_pca",
    "fit_svd",
    "project",
    "select_by_importance",
    "select_features",
    "Budget",
    "EvaluationRecord",
    "RunConfig",
    "RunResult",
    "SearchSpace",
    "best",
    "generate_candidates",
    "grid_search",
    "random_search",
    "run_search",
    "search_space_for",
    "stack_models",
    "Split",
    "SplitConfig",
    "split",
    "split_dataset",
    "FeatureMatrix",
    "OneHot",
    "Standardize",
    "TfIdf",
    "apply",
    "fit_one_hot",
    "fit_standardize",
    "fit_tfidf",
    "stack",
]
