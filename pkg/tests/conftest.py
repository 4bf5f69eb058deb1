import csv
from pathlib import Path

import pytest

from perturbench.report import RobustnessSummary, training_category
from perturbench.stats import ReferencePoint, identify_group

DATA_DIR = Path(__file__).parent / "data"

# Reference benchmark results: three CNN classifiers (AlexNet, ResNet50,
# VGG-19) fine-tuned on CIFAR-10 under nine training conditions and scored
# over the full 69-group suite. Test input only, never a runtime dependency.
BENCHMARK_CSV = DATA_DIR / "cnn_benchmark_rows.csv"


def load_benchmark_rows() -> list[dict]:
    with open(BENCHMARK_CSV, newline="", encoding="utf-8") as fh:
        rows = []
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "classifier": row["classifier"],
                    "training_group": row["training_group"],
                    "cv": float(row["cv"]),
                    "mean_accu": float(row["mean_accu"]),
                    "clean_accu": float(row["clean_accu"]),
                    "min_accu": float(row["min_accu"]),
                    "max_accu": float(row["max_accu"]),
                }
            )
        return rows


def benchmark_summaries(rows: list[dict]) -> list[RobustnessSummary]:
    """Rows as summaries; quadrants computed against each family's clean run."""
    refs = {
        r["classifier"]: ReferencePoint(rMA=r["mean_accu"], rCV=r["cv"])
        for r in rows
        if r["training_group"] == "clean"
    }
    out = []
    for r in rows:
        ref = refs[r["classifier"]]
        out.append(
            RobustnessSummary(
                classifier_name=r["classifier"],
                training_group=r["training_group"],
                training_category=training_category(r["training_group"]),
                mean_accu=r["mean_accu"],
                cv=r["cv"],
                clean_accu=r["clean_accu"],
                min_accu=r["min_accu"],
                max_accu=r["max_accu"],
                quadrant=identify_group(r["mean_accu"], r["cv"], ref),
            )
        )
    return out


@pytest.fixture(scope="session")
def benchmark_rows() -> list[dict]:
    return load_benchmark_rows()


@pytest.fixture(scope="session")
def benchmark_summary_list(benchmark_rows) -> list[RobustnessSummary]:
    return benchmark_summaries(benchmark_rows)
