"""Column type inference, missing-value handling, and task detection.

Builds a small messy CSV, loads it, and prints what the loader decided.
Run:  python demos/01_schema_inference.py
"""

import tempfile
from pathlib import Path

from autotab import ColumnType, load_csv

raw = """age,job,zip,note,income
39,clerk,02134,likes long walks on the beach,<=50K
50,manager,94110,enjoys quarterly spreadsheets a lot,>50K
?,clerk,10001,speaks three languages at home,<=50K
28,NA,60601,collects vintage mechanical keyboards,>50K
45,engineer,02134,writes very concise commit messages,<=50K
33,clerk,94110,brews coffee with laboratory precision,>50K
61,manager,10001,paints tiny models on weekends,<=50K
24,engineer,60601,runs marathons in sandwich costumes,>50K
"""

path = Path(tempfile.mkdtemp()) / "people.csv"
path.write_text(raw, encoding="utf-8")

# plain inference: the numeric-looking zip column becomes numeric
ds = load_csv(path, target_column="income")
print("inferred schema:")
for col in ds.columns:
    print(f"  {col.name:5s} -> {col.ctype.value:11s} "
          f"(distinct={col.distinct_count}, missing={col.missing_count})")
print(f"task: {ds.task.value}\n")

# a user override pins zip as categorical no matter how it parses
ds = load_csv(path, target_column="income", overrides={"zip": ColumnType.CATEGORICAL})
print("with override {'zip': categorical}:")
print(f"  zip -> {ds.schema('zip').ctype.value}")

# '?' and 'NA' became missing; the imputer will fill them from training rows
print(f"\nage column with missing marker parsed: {ds.column('age').tolist()}")
