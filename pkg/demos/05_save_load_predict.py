"""Persist the winning pipeline and reload it for batch prediction.

Run:  python demos/05_save_load_predict.py
"""

import tempfile
from pathlib import Path

import numpy as np

from autotab import (
    ColumnType,
    Dataset,
    RunConfig,
    load_pipeline,
    run_search,
    save_pipeline,
    write_report,
)

rng = np.random.default_rng(11)
n = 400
X = rng.standard_normal((n, 3))
y = 2.0 * X[:, 0] - 1.0 * X[:, 1] + 0.2 * rng.standard_normal(n)
dataset = Dataset.from_columns(
    {f"f{j}": X[:, j] for j in range(3)},
    {f"f{j}": ColumnType.NUMERIC for j in range(3)},
    target=y,
)

result = run_search(dataset, RunConfig(budget_seconds=60, progress=False))
out = Path(tempfile.mkdtemp())
artifact = out / "model.acp"
save_pipeline(result.pipeline, artifact)
write_report(result.report, out / "report.json")
print(f"saved {artifact} ({artifact.stat().st_size} bytes) and report.json")

reloaded = load_pipeline(artifact)
original = result.pipeline.predict(dataset)
replayed = reloaded.predict(dataset)
print("round-trip predictions bit-identical:", np.array_equal(original, replayed))
print("recorded score:", reloaded.metric_name, reloaded.score)
