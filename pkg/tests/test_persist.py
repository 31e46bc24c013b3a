import json
import struct

import numpy as np
import pytest

from autotab.data import TaskType
from autotab.errors import ArtifactError
from autotab.metrics import AUC, RMSE
from autotab.models import ModelFamily, is_classifier
from autotab.persist import (
    FORMAT_VERSION,
    MAGIC,
    Report,
    load_pipeline,
    report_comparable,
    save_pipeline,
    write_report,
)
from autotab.pipeline import PipelineSpec, StepSpec, fit_pipeline
from autotab.search import EvaluationRecord, RunConfig, run_search, sort_leaderboard
from autotab.split import SplitConfig, split_dataset

from helpers import mixed_binary_dataset, numeric_regression_dataset, text_dataset

FAST_PARAMS = {
    ModelFamily.RANDOM_FOREST: {"n_estimators": 10},
    ModelFamily.RANDOM_FOREST_REGRESSOR: {"n_estimators": 10},
    ModelFamily.GRADIENT_BOOSTING: {"n_estimators": 10},
    ModelFamily.GRADIENT_BOOSTING_REGRESSOR: {"n_estimators": 10},
    ModelFamily.NEAREST_NEIGHBORS: {"k": 3},
}


def fitted_pipeline_for(family, steps=()):
    classification = is_classifier(family)
    ds = mixed_binary_dataset(n=150, missing=True) if classification else numeric_regression_dataset(n=150)
    train, valid = split_dataset(
        ds, SplitConfig(seed=0, stratified=classification)
    )
    params = tuple(sorted(FAST_PARAMS.get(family, {}).items()))
    spec = PipelineSpec((StepSpec("encode"),) + tuple(steps), family, params)
    pipeline, *_ = fit_pipeline(spec, train, seed=4)
    return pipeline, train, valid


class TestRoundTrip:
    @pytest.mark.parametrize("family", list(ModelFamily))
    def test_every_family_round_trips_bit_identical(self, family, tmp_path):
        pipeline, train, valid = fitted_pipeline_for(family)
        path = tmp_path / "model.acp"
        save_pipeline(pipeline, path)
        loaded = load_pipeline(path)
        np.testing.assert_array_equal(pipeline.predict(valid), loaded.predict(valid))
        if is_classifier(family):
            np.testing.assert_array_equal(
                pipeline.predict_score(valid), loaded.predict_score(valid)
            )

    def test_reduction_steps_round_trip(self, tmp_path):
        ds = text_dataset(n=120)
        train, valid = split_dataset(ds, SplitConfig(seed=1))
        spec = PipelineSpec(
            (StepSpec("encode"), StepSpec("svd", (("k", 8),))),
            ModelFamily.LOGISTIC_REGRESSION,
            (("C", 1.0),),
        )
        pipeline, *_ = fit_pipeline(spec, train, seed=2)
        path = tmp_path / "text.acp"
        save_pipeline(pipeline, path)
        loaded = load_pipeline(path)
        np.testing.assert_array_equal(
            pipeline.predict_score(valid), loaded.predict_score(valid)
        )

    def test_ensemble_round_trips(self, tmp_path):
        from autotab.search import stack_models
        from autotab.pipeline import EnsemblePipeline

        lr, train, valid = fitted_pipeline_for(ModelFamily.LOGISTIC_REGRESSION)
        rf, _, _ = fitted_pipeline_for(ModelFamily.RANDOM_FOREST)
        for p, s in ((lr, 0.8), (rf, 0.7)):
            p.metric_name, p.score = "auc", s
        record, ensemble = stack_models([lr, rf], 2, valid, AUC)
        assert isinstance(ensemble, EnsemblePipeline)
        path = tmp_path / "stack.acp"
        save_pipeline(ensemble, path)
        loaded = load_pipeline(path)
        np.testing.assert_array_equal(
            ensemble.predict_score(valid), loaded.predict_score(valid)
        )
        np.testing.assert_array_equal(ensemble.predict(valid), loaded.predict(valid))
        assert loaded.pipeline_id == ensemble.pipeline_id

    def test_loading_twice_gives_independent_instances(self, tmp_path):
        pipeline, train, valid = fitted_pipeline_for(ModelFamily.LOGISTIC_REGRESSION)
        path = tmp_path / "m.acp"
        save_pipeline(pipeline, path)
        a = load_pipeline(path)
        b = load_pipeline(path)
        assert a is not b
        np.testing.assert_array_equal(a.predict(valid), b.predict(valid))

    def test_recorded_score_survives(self, tmp_path):
        pipeline, train, valid = fitted_pipeline_for(ModelFamily.NAIVE_BAYES)
        pipeline.metric_name = "auc"
        pipeline.score = 0.875
        path = tmp_path / "m.acp"
        save_pipeline(pipeline, path)
        loaded = load_pipeline(path)
        assert loaded.metric_name == "auc"
        assert loaded.score == 0.875


class TestCorruption:
    def test_truncated_file_is_checksum_error(self, tmp_path):
        pipeline, *_ = fitted_pipeline_for(ModelFamily.RIDGE_CLASSIFIER)
        path = tmp_path / "m.acp"
        save_pipeline(pipeline, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ArtifactError, match="checksum|short"):
            load_pipeline(path)

    def test_flipped_byte_is_checksum_error(self, tmp_path):
        pipeline, *_ = fitted_pipeline_for(ModelFamily.RIDGE_CLASSIFIER)
        path = tmp_path / "m.acp"
        save_pipeline(pipeline, path)
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ArtifactError, match="checksum"):
            load_pipeline(path)

    def test_version_mismatch_is_explicit(self, tmp_path):
        pipeline, *_ = fitted_pipeline_for(ModelFamily.RIDGE_CLASSIFIER)
        path = tmp_path / "m.acp"
        save_pipeline(pipeline, path)
        blob = bytearray(path.read_bytes())
        blob[4:8] = struct.pack("<I", FORMAT_VERSION + 9)
        path.write_bytes(bytes(blob))
        with pytest.raises(ArtifactError, match="version"):
            load_pipeline(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.acp"
        path.write_bytes(b"")
        with pytest.raises(ArtifactError):
            load_pipeline(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.acp"
        path.write_bytes(b"JUNK" + b"\x00" * 100)
        with pytest.raises(ArtifactError, match="magic"):
            load_pipeline(path)

    def test_magic_constant(self):
        assert MAGIC == b"ATAB"


def make_report(records):
    return Report(
        dataset_summary={"rows": 10},
        task="binary",
        metric=AUC,
        leaderboard=sort_leaderboard(records, AUC),
        winner_id=records[0].pipeline_id,
        winner_score=records[0].score,
        elapsed_seconds=1.25,
        seed=42,
        config={"metric": "auto"},
        created_at=123.0,
    )


def rec(pid, score, status="ok"):
    return EvaluationRecord(
        pipeline_id=pid,
        metric=AUC,
        score=score,
        fit_seconds=0.5,
        eval_seconds=0.1,
        status=status,
        error=None if status == "ok" else "SomeError: detail",
    )


class TestReports:
    def test_written_json_has_stable_shape(self, tmp_path):
        report = make_report([rec("b", 0.9), rec("a", 0.8)])
        path = tmp_path / "report.json"
        write_report(report, path)
        loaded = json.loads(path.read_text())
        assert list(loaded) == [
            "format_version",
            "created_at",
            "dataset",
            "task",
            "metric",
            "seed",
            "config",
            "winner",
            "elapsed_seconds",
            "leaderboard",
        ]
        assert loaded["metric"] == {"kind": "auc", "direction": "maximize"}
        assert loaded["seed"] == 42

    def test_leaderboard_sorted_by_direction_then_id(self, tmp_path):
        records = [rec("z", 0.7), rec("a", 0.9), rec("m", 0.9)]
        report = make_report(records)
        ids = [r.pipeline_id for r in report.leaderboard]
        assert ids == ["a", "m", "z"]
        # minimize direction flips the score order
        sorted_min = sort_leaderboard(
            [r for r in records], RMSE
        )
        assert [r.pipeline_id for r in sorted_min] == ["z", "a", "m"]

    def test_failed_candidates_carry_status_and_error(self, tmp_path):
        report = make_report([rec("ok", 0.9), rec("bad", None, status="failed")])
        path = tmp_path / "report.json"
        write_report(report, path)
        rows = json.loads(path.read_text())["leaderboard"]
        failed = [r for r in rows if r["status"] == "failed"]
        assert len(failed) == 1
        assert failed[0]["error"] == "SomeError: detail"
        assert failed[0]["score"] is None
        # failed entries sort after successful ones
        assert rows[-1]["status"] == "failed"

    def test_identical_runs_identical_modulo_timing(self, tmp_path):
        ds = mixed_binary_dataset(n=100)
        cfg = RunConfig(budget_seconds=3600, progress=False, seed=5)
        d1 = run_search(ds, cfg).report.to_dict()
        d2 = run_search(ds, cfg).report.to_dict()
        assert d1 != d2 or d1 == d2  # raw dicts may differ in timing fields
        assert report_comparable(d1) == report_comparable(d2)
        stripped = report_comparable(d1)
        assert "created_at" not in stripped
        assert all("fit_seconds" not in row for row in stripped["leaderboard"])
