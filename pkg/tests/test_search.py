import time
from types import SimpleNamespace

import numpy as np
import pytest

from autotab.data import ColumnSchema, ColumnType, TaskType
from autotab.errors import SearchError
from autotab.metrics import AUC, RMSE, Metric
from autotab.models import ModelFamily
from autotab.pipeline import PipelineSpec, StepSpec, TransformCache
from autotab.search import (
    Budget,
    EvaluationRecord,
    RunConfig,
    SearchSpace,
    best,
    evaluate_candidate,
    generate_candidates,
    grid_search,
    random_search,
    run_search,
    search_space_for,
    stack_models,
)
from autotab.split import SplitConfig, split_dataset

from helpers import (
    brute_force_auc,
    mixed_binary_dataset,
    numeric_dataset,
    numeric_regression_dataset,
    text_dataset,
)


def schema(*cols):
    return [ColumnSchema(name, ctype, 10, 0) for name, ctype in cols]


def knn_template():
    return PipelineSpec((StepSpec("encode"),), ModelFamily.NEAREST_NEIGHBORS, ())


class TestGenerateCandidates:
    def test_text_schema_contains_tfidf_logreg(self):
        cols = schema(("body", ColumnType.TEXT))
        ids = [c.pipeline_id for c in generate_candidates(cols, TaskType.MULTICLASS)]
        assert ids[0] == "encode|logreg()"
        assert any("svd" in i and "svm" in i for i in ids)

    def test_numeric_schema_contains_pca_rf(self):
        cols = schema(*[(f"p{i}", ColumnType.NUMERIC) for i in range(784)])
        ids = [c.pipeline_id for c in generate_candidates(cols, TaskType.MULTICLASS)]
        assert any(i.startswith("encode|pca(k=60)|rf") for i in ids)

    def test_mixed_regression_contains_importance_svr(self):
        cols = schema(
            ("rooms", ColumnType.NUMERIC),
            ("area", ColumnType.NUMERIC),
            ("district", ColumnType.CATEGORICAL),
        )
        ids = [c.pipeline_id for c in generate_candidates(cols, TaskType.REGRESSION)]
        assert any("select_imp" in i and i.endswith("svr()") for i in ids)

    def test_fast_families_before_slow(self):
        cols = schema(("a", ColumnType.NUMERIC), ("b", ColumnType.NUMERIC))
        specs = generate_candidates(cols, TaskType.BINARY)
        families = [s.family for s in specs]
        first_slow = min(
            families.index(f)
            for f in (ModelFamily.RANDOM_FOREST, ModelFamily.GRADIENT_BOOSTING, ModelFamily.SVM)
        )
        for fast in (
            ModelFamily.LOGISTIC_REGRESSION,
            ModelFamily.RIDGE_CLASSIFIER,
            ModelFamily.NAIVE_BAYES,
            ModelFamily.NEAREST_NEIGHBORS,
        ):
            assert families.index(fast) < first_slow

    def test_deterministic(self):
        cols = schema(("a", ColumnType.NUMERIC), ("c", ColumnType.CATEGORICAL))
        one = [c.pipeline_id for c in generate_candidates(cols, TaskType.BINARY)]
        two = [c.pipeline_id for c in generate_candidates(cols, TaskType.BINARY)]
        assert one == two

    def test_mixed_schema_has_selection_variants(self):
        cols = schema(("a", ColumnType.NUMERIC), ("c", ColumnType.CATEGORICAL))
        ids = [c.pipeline_id for c in generate_candidates(cols, TaskType.BINARY)]
        assert any("select_f" in i for i in ids)


class TestSearchSpaces:
    def test_rf_grid_is_27_points(self):
        assert search_space_for(ModelFamily.RANDOM_FOREST).size == 27

    def test_svm_grid_is_16_points(self):
        assert search_space_for(ModelFamily.SVM).size == 16

    def test_gbm_grid_is_8_points(self):
        assert search_space_for(ModelFamily.GRADIENT_BOOSTING).size == 8

    def test_untunable_families_have_single_point(self):
        assert search_space_for(ModelFamily.NAIVE_BAYES).size == 1
        assert search_space_for(ModelFamily.LINEAR_REGRESSION).size == 1


class TestGridSearch:
    def test_exhausts_grid_cardinality(self):
        ds = mixed_binary_dataset(n=120)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        space = search_space_for(ModelFamily.NEAREST_NEIGHBORS)
        records = grid_search(
            knn_template(), space, train, valid, AUC, Budget(wall_seconds=600), seed=1
        )
        assert len(records) == space.size == 4

    def test_expired_budget_yields_nothing(self):
        ds = mixed_binary_dataset(n=80)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        budget = Budget(wall_seconds=0.0)
        records = grid_search(
            knn_template(), search_space_for(ModelFamily.NEAREST_NEIGHBORS),
            train, valid, AUC, budget, seed=1,
        )
        assert records == []

    def test_scores_match_standalone_oracle(self):
        ds = mixed_binary_dataset(n=150)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        space = search_space_for(ModelFamily.NEAREST_NEIGHBORS)
        records = grid_search(
            knn_template(), space, train, valid, AUC, Budget(wall_seconds=600), seed=1
        )
        for record in records:
            k = int(record.pipeline_id.split("k=")[1].rstrip(")"))
            spec = knn_template().with_params({"k": k})
            standalone, _ = evaluate_candidate(spec, train, valid, AUC, seed=1)
            assert standalone.score == record.score  # bit-exact

    def test_lexicographic_evaluation_order(self):
        ds = mixed_binary_dataset(n=100)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        space = SearchSpace(
            family=ModelFamily.NEAREST_NEIGHBORS,
            grid={"k": [3, 5]},
            distributions={"k": ("choice", (3, 5))},
        )
        records = grid_search(
            knn_template(), space, train, valid, AUC, Budget(wall_seconds=600), seed=1
        )
        assert [r.pipeline_id for r in records] == ["encode|knn(k=3)", "encode|knn(k=5)"]


class TestRandomSearch:
    def test_seeded_draws_are_reproducible(self):
        ds = mixed_binary_dataset(n=100)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        space = search_space_for(ModelFamily.NEAREST_NEIGHBORS)
        kwargs = dict(train=train, valid=valid, metric=AUC, n_iter=6, seed=9)
        r1 = random_search(knn_template(), space, budget=Budget(wall_seconds=600), **kwargs)
        r2 = random_search(knn_template(), space, budget=Budget(wall_seconds=600), **kwargs)
        assert [r.pipeline_id for r in r1] == [r.pipeline_id for r in r2]
        assert [r.score for r in r1] == [r.score for r in r2]

    def test_point_distribution_dedupes(self):
        ds = mixed_binary_dataset(n=80)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        space = SearchSpace(
            family=ModelFamily.NEAREST_NEIGHBORS,
            grid={"k": [5]},
            distributions={"k": ("choice", (5,))},
        )
        records = random_search(
            knn_template(), space, train, valid, AUC, Budget(wall_seconds=600), n_iter=10, seed=0
        )
        assert len(records) == 1
        assert records[0].pipeline_id == "encode|knn(k=5)"

    def test_uniform_grid_draws_are_subset_of_grid(self):
        ds = mixed_binary_dataset(n=120)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        space = search_space_for(ModelFamily.NEAREST_NEIGHBORS)  # choice distribution
        grid_records = grid_search(
            knn_template(), space, train, valid, AUC, Budget(wall_seconds=600), seed=1
        )
        random_records = random_search(
            knn_template(), space, train, valid, AUC, Budget(wall_seconds=600),
            n_iter=space.size, seed=2,
        )
        grid_scores = {r.pipeline_id: r.score for r in grid_records}
        for r in random_records:
            assert r.pipeline_id in grid_scores
            assert r.score == grid_scores[r.pipeline_id]

    def test_n_iter_must_be_positive(self):
        ds = mixed_binary_dataset(n=60)
        train, valid = split_dataset(ds, SplitConfig(seed=0))
        with pytest.raises(SearchError):
            random_search(
                knn_template(), search_space_for(ModelFamily.NEAREST_NEIGHBORS),
                train, valid, AUC, Budget(wall_seconds=10), n_iter=0, seed=0,
            )


def record(pid, score, fit_seconds=1.0, status="ok"):
    return EvaluationRecord(
        pipeline_id=pid,
        metric=AUC,
        score=score,
        fit_seconds=fit_seconds,
        eval_seconds=0.0,
        status=status,
        error=None if status == "ok" else "boom",
    )


class TestBest:
    def test_single_record(self):
        r = record("a", 0.5)
        assert best([r], AUC) is r

    def test_maximize_picks_larger(self):
        assert best([record("a", 0.8), record("b", 0.9)], AUC).pipeline_id == "b"

    def test_minimize_picks_smaller(self):
        records = [record("a", 3.0), record("b", 2.0)]
        assert best(records, RMSE).pipeline_id == "b"

    def test_tie_broken_by_id_regardless_of_order(self):
        r1 = [record("zeta", 0.9), record("alpha", 0.9)]
        r2 = [record("alpha", 0.9), record("zeta", 0.9)]
        assert best(r1, AUC).pipeline_id == "alpha"
        assert best(r2, AUC).pipeline_id == "alpha"

    def test_id_tie_broken_by_fit_seconds(self):
        records = [record("a", 0.9, fit_seconds=5.0), record("a", 0.9, fit_seconds=1.0)]
        assert best(records, AUC).fit_seconds == 1.0

    def test_failed_records_ignored(self):
        records = [record("a", None, status="failed"), record("b", 0.7)]
        assert best(records, AUC).pipeline_id == "b"

    def test_all_failed_raises(self):
        with pytest.raises(SearchError):
            best([record("a", None, status="failed")], AUC)


class _FakePipeline:
    """Duck-typed stand-in so ensemble math can be tested on exact fixtures."""

    def __init__(self, family, score, pid, probs, task=TaskType.BINARY):
        self.spec = SimpleNamespace(family=family)
        self.score = score
        self.pipeline_id = pid
        self.task = task
        self.seed = 0
        self._probs = np.asarray(probs, dtype=float)
        self.classes_ = np.array(["neg", "pos"], dtype=object)
        self.metric_name = None

    def predict_score(self, dataset):
        return self._probs

    def predict(self, dataset):
        return self.classes_[np.argmax(self._probs, axis=1)]


class TestStacker:
    def test_identical_members_equal_ensemble(self):
        ds = mixed_binary_dataset(n=60)
        _, valid = split_dataset(ds, SplitConfig(seed=0))
        probs = np.column_stack([np.linspace(0.1, 0.9, valid.n_rows)] * 2)
        probs[:, 0] = 1 - probs[:, 1]
        members = [
            _FakePipeline(ModelFamily.LOGISTIC_REGRESSION, 0.8, "a", probs),
            _FakePipeline(ModelFamily.RANDOM_FOREST, 0.7, "b", probs),
        ]
        rec, ensemble = stack_models(members, 2, valid, AUC)
        np.testing.assert_allclose(ensemble.predict_score(valid), probs, atol=1e-12)

    def test_two_regressors_average(self):
        ds = numeric_regression_dataset(n=40)
        _, valid = split_dataset(ds, SplitConfig(seed=0, stratified=False))

        class _FakeReg(_FakePipeline):
            def __init__(self, family, score, pid, value):
                super().__init__(family, score, pid, np.zeros((valid.n_rows, 2)))
                self.task = TaskType.REGRESSION
                self._value = value

            def predict(self, dataset):
                return np.full(valid.n_rows, self._value)

        members = [
            _FakeReg(ModelFamily.RIDGE_REGRESSION, 1.0, "a", 1.0),
            _FakeReg(ModelFamily.LASSO, 1.1, "b", 3.0),
        ]
        rec, ensemble = stack_models(members, 2, valid, RMSE)
        np.testing.assert_allclose(ensemble.predict(valid), 2.0, atol=1e-12)

    def test_anticorrelated_errors_ensemble_strictly_best(self):
        ds = mixed_binary_dataset(n=60)
        _, valid = split_dataset(ds, SplitConfig(seed=0))
        n = valid.n_rows
        y = valid.target
        pos = y == "pos"
        # model A is wrong on the first half of the positives, B on the rest
        pos_idx = np.flatnonzero(pos)
        a_scores = np.where(pos, 0.9, 0.3)
        b_scores = np.where(pos, 0.9, 0.3)
        half = len(pos_idx) // 2
        a_scores[pos_idx[:half]] = 0.1
        b_scores[pos_idx[half:]] = 0.1
        pa = np.column_stack([1 - a_scores, a_scores])
        pb = np.column_stack([1 - b_scores, b_scores])
        auc_a = brute_force_auc((y == "pos").astype(int), a_scores)
        auc_b = brute_force_auc((y == "pos").astype(int), b_scores)
        members = [
            _FakePipeline(ModelFamily.LOGISTIC_REGRESSION, auc_a, "a", pa),
            _FakePipeline(ModelFamily.RANDOM_FOREST, auc_b, "b", pb),
        ]
        members[0].classes_ = np.array(["neg", "pos"], dtype=object)
        members[1].classes_ = np.array(["neg", "pos"], dtype=object)
        rec, ensemble = stack_models(members, 2, valid, AUC)
        assert rec.score > max(auc_a, auc_b)

    def test_single_family_skipped_silently(self):
        ds = mixed_binary_dataset(n=60)
        _, valid = split_dataset(ds, SplitConfig(seed=0))
        member = _FakePipeline(
            ModelFamily.LOGISTIC_REGRESSION, 0.9, "a", np.full((valid.n_rows, 2), 0.5)
        )
        rec, ensemble = stack_models([member], 3, valid, AUC)
        assert rec is None and ensemble is None


class TestRunSearch:
    def test_tiny_budget_still_evaluates_first(self):
        ds = mixed_binary_dataset(n=120)
        config = RunConfig(budget_seconds=1e-9, progress=False)
        result = run_search(ds, config)
        assert len(result.report.leaderboard) >= 1
        assert result.report.winner_id

    def test_generous_budget_covers_all_candidates(self):
        ds = mixed_binary_dataset(n=120)
        result = run_search(ds, RunConfig(budget_seconds=3600, progress=False))
        candidates = generate_candidates(ds.columns, ds.task)
        expected = 0
        for template in candidates:
            expected += search_space_for(template.family).size
        # every grid point, plus the stacker entry
        assert len(result.report.leaderboard) == expected + 1

    def test_end_to_end_determinism(self):
        from autotab.persist import report_comparable

        ds = mixed_binary_dataset(n=120)
        cfg = RunConfig(budget_seconds=3600, progress=False, seed=11)
        r1 = run_search(ds, cfg)
        r2 = run_search(ds, cfg)
        assert report_comparable(r1.report.to_dict()) == report_comparable(r2.report.to_dict())

    def test_worker_count_does_not_change_leaderboard(self):
        ds = mixed_binary_dataset(n=120)
        serial = run_search(ds, RunConfig(budget_seconds=3600, progress=False, workers=1))
        parallel = run_search(ds, RunConfig(budget_seconds=3600, progress=False, workers=4))
        s = [(r.pipeline_id, r.score) for r in serial.report.leaderboard]
        p = [(r.pipeline_id, r.score) for r in parallel.report.leaderboard]
        assert s == p

    def test_winner_in_leaderboard_and_scored(self):
        ds = numeric_regression_dataset(n=150)
        result = run_search(ds, RunConfig(budget_seconds=3600, progress=False))
        ids = {r.pipeline_id for r in result.report.leaderboard}
        assert result.report.winner_id in ids
        assert result.pipeline.score == result.report.winner_score
        assert result.report.metric.kind == "rmse"

    def test_progress_lines_on_stderr(self, capsys):
        ds = mixed_binary_dataset(n=80)
        run_search(ds, RunConfig(budget_seconds=3600, progress=True))
        err = capsys.readouterr().err
        lines = [l for l in err.splitlines() if l.startswith("[autotab]")]
        assert len(lines) >= 1
        assert "score=" in lines[0] and "seconds=" in lines[0]

    def test_budget_respected_within_one_evaluation(self):
        ds = mixed_binary_dataset(n=200)
        budget = 2.0
        t0 = time.monotonic()
        run_search(ds, RunConfig(budget_seconds=budget, progress=False))
        elapsed = time.monotonic() - t0
        # overshoot is bounded by one evaluation; generous cap for slow CI
        assert elapsed < budget + 30.0

    def test_text_dataset_uses_f1_and_finds_winner(self):
        ds = text_dataset(n=150)
        result = run_search(ds, RunConfig(budget_seconds=3600, progress=False))
        assert result.report.metric.kind == "weighted_f1"  # imbalanced multiclass
        assert result.report.winner_score > 0.8
