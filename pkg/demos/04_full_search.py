"""A complete budgeted search run with a leaderboard printout.

Run:  python demos/04_full_search.py
"""

import numpy as np

from autotab import ColumnType, Dataset, RunConfig, run_search

rng = np.random.default_rng(3)
n = 800
x1 = rng.standard_normal(n)
x2 = rng.standard_normal(n)
sector = rng.choice(["retail", "tech", "transport", "health"], n).astype(object)
hours = rng.normal(40, 8, n)
logit = 1.5 * x1 - 0.7 * x2 + 0.9 * (sector == "tech") + 0.04 * (hours - 40) - 1.0
y = np.where(rng.random(n) < 1 / (1 + np.exp(-logit)), "churn", "stay").astype(object)

dataset = Dataset.from_columns(
    {"usage": x1, "tenure": x2, "sector": sector, "hours": hours},
    {
        "usage": ColumnType.NUMERIC,
        "tenure": ColumnType.NUMERIC,
        "sector": ColumnType.CATEGORICAL,
        "hours": ColumnType.NUMERIC,
    },
    target=y,
)

result = run_search(dataset, RunConfig(budget_seconds=90, progress=False, seed=7))
report = result.report

print(f"task: {report.task}   metric: {report.metric.kind} ({report.metric.direction})")
print(f"evaluations: {len(report.leaderboard)}   elapsed: {report.elapsed_seconds:.1f}s\n")
print("top 10:")
for record in report.leaderboard[:10]:
    print(f"  {record.score:.4f}  {record.pipeline_id}")
print(f"\nwinner: {report.winner_id}  ({report.winner_score:.4f})")

# the returned pipeline is already fitted; score new rows directly
fresh = dataset.subset(np.arange(20))
print("\nfirst 5 churn probabilities:", np.round(result.pipeline.predict_score(fresh)[:5, 0], 3))
