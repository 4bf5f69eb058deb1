"""Evaluation bookkeeping: predictions, per-run summaries, aggregate analysis.

Wire formats owned by this module:

* Predictions CSV: header ``group_id,image_index,true_label,predicted_label``,
  integer fields, UTF-8, LF line endings. Row order is not significant.
* Report JSON: an array of robustness summaries plus one aggregate block;
  field names match the dataclasses below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from . import SPEC_VERSION
from .errors import DomainError, FormatError, StructureError, VersionError
from .stats import (
    QuadrantLabel,
    ReferencePoint,
    cv_of_classifier,
    identify_group,
    mean,
    mean_accuracy,
    pearson,
    spearman,
)
from .suite import GROUP_COUNT, parse_group_name

CSV_HEADER = "group_id,image_index,true_label,predicted_label"

CLEAN_GROUP_ID = 1


class TrainingCategory(Enum):
    CLEAN = "CLEAN"
    SINGLE_FACTOR = "SINGLE_FACTOR"
    TWO_FACTOR = "TWO_FACTOR"


def training_category(training_group: str) -> TrainingCategory:
    """Category from the training chain length (0 clean, 1 single, 2 two-factor)."""
    chain = parse_group_name(training_group)
    if len(chain) == 0:
        return TrainingCategory.CLEAN
    if len(chain) == 1:
        return TrainingCategory.SINGLE_FACTOR
    if len(chain) == 2:
        return TrainingCategory.TWO_FACTOR
    raise DomainError(f"training chain {training_group!r} has {len(chain)} steps; expected 0-2")


@dataclass(frozen=True)
class PredictionRecord:
    group_id: int
    image_index: int
    true_label: int
    predicted_label: int


@dataclass(frozen=True)
class ClassifierRun:
    """One classifier/training-set combination with its per-test-group accuracies."""

    classifier_name: str
    training_group: str
    accuracies: Mapping[int, float]  # group_id -> accuracy percent
    spec_version: str = SPEC_VERSION

    def accuracy_values(self) -> list[float]:
        return [self.accuracies[g] for g in sorted(self.accuracies)]


@dataclass(frozen=True)
class RobustnessSummary:
    classifier_name: str
    training_group: str
    training_category: TrainingCategory
    mean_accu: float
    cv: float
    clean_accu: float
    min_accu: float
    max_accu: float
    quadrant: QuadrantLabel
    spec_version: str = SPEC_VERSION

    @property
    def label(self) -> str:
        return f"{self.classifier_name}({self.training_group})"


@dataclass(frozen=True)
class CategoryStats:
    count: int
    mean_cv: float
    mean_mean_accu: float
    mean_min_accu: float
    mean_max_accu: float


@dataclass(frozen=True)
class AggregateAnalysis:
    categories: dict[TrainingCategory, CategoryStats]
    cv_reduction_two_vs_single_pct: float | None


def write_predictions_csv(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(f"{r.group_id},{r.image_index},{r.true_label},{r.predicted_label}\n")


def ingest_predictions(path: str | Path, group_count: int = GROUP_COUNT) -> list[PredictionRecord]:
    """Parse and validate a predictions CSV.

    Rejects malformed rows, group ids outside 1..group_count, negative fields,
    and duplicate (group_id, image_index) pairs.
    """
    records: list[PredictionRecord] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != CSV_HEADER:
            raise FormatError(f"{path}: bad header {header!r}, expected {CSV_HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                gid, idx, true, pred = (int(p) for p in parts)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer field: {exc}") from exc
            if not 1 <= gid <= group_count:
                raise FormatError(f"{path}:{lineno}: unknown group_id {gid}")
            if idx < 0 or true < 0 or pred < 0:
                raise FormatError(f"{path}:{lineno}: negative field")
            key = (gid, idx)
            if key in seen:
                raise FormatError(
                    f"{path}:{lineno}: duplicate prediction for (group {gid}, index {idx})"
                )
            seen.add(key)
            records.append(PredictionRecord(gid, idx, true, pred))
    return records


def accuracies_from_records(
    records: Iterable[PredictionRecord], group_count: int = GROUP_COUNT
) -> dict[int, float]:
    """Per-group accuracy percentages; every group 1..group_count must appear."""
    correct: dict[int, int] = {}
    total: dict[int, int] = {}
    for r in records:
        total[r.group_id] = total.get(r.group_id, 0) + 1
        if r.true_label == r.predicted_label:
            correct[r.group_id] = correct.get(r.group_id, 0) + 1
    missing = [g for g in range(1, group_count + 1) if g not in total]
    if missing:
        raise StructureError(f"no predictions for groups {missing[:8]}" + ("..." if len(missing) > 8 else ""))
    return {g: 100.0 * correct.get(g, 0) / total[g] for g in sorted(total)}


def summarize(run: ClassifierRun, ref: ReferencePoint | None = None) -> RobustnessSummary:
    """Collapse a run's accuracy vector into the summary used for plots and tables.

    ``ref`` is the clean-trained reference for quadrant placement; omit it for
    the clean-trained run itself, which then serves as its own reference.
    """
    if CLEAN_GROUP_ID not in run.accuracies:
        raise StructureError("accuracy vector is missing the clean test group (id 1)")
    values = run.accuracy_values()
    ma = mean_accuracy(values)
    cv = cv_of_classifier(values)
    if ref is None:
        ref = ReferencePoint(rMA=ma, rCV=cv)
    return RobustnessSummary(
        classifier_name=run.classifier_name,
        training_group=run.training_group,
        training_category=training_category(run.training_group),
        mean_accu=ma,
        cv=cv,
        clean_accu=run.accuracies[CLEAN_GROUP_ID],
        min_accu=min(values),
        max_accu=max(values),
        quadrant=identify_group(ma, cv, ref),
        spec_version=run.spec_version,
    )


def aggregate(summaries: list[RobustnessSummary]) -> AggregateAnalysis:
    """Unweighted per-category means over all supplied runs.

    The relative CV reduction compares single- and two-factor training with
    the two-factor mean as denominator; it is None unless both categories are
    present.
    """
    if not summaries:
        raise DomainError("no runs supplied")
    versions = {s.spec_version for s in summaries}
    if len(versions) > 1:
        raise VersionError(f"mixed spec versions: {sorted(versions)}")
    by_cat: dict[TrainingCategory, list[RobustnessSummary]] = {}
    for s in summaries:
        by_cat.setdefault(s.training_category, []).append(s)
    categories = {
        cat: CategoryStats(
            count=len(rows),
            mean_cv=mean([r.cv for r in rows]),
            mean_mean_accu=mean([r.mean_accu for r in rows]),
            mean_min_accu=mean([r.min_accu for r in rows]),
            mean_max_accu=mean([r.max_accu for r in rows]),
        )
        for cat, rows in by_cat.items()
    }
    reduction = None
    if TrainingCategory.SINGLE_FACTOR in categories and TrainingCategory.TWO_FACTOR in categories:
        single = categories[TrainingCategory.SINGLE_FACTOR].mean_cv
        two = categories[TrainingCategory.TWO_FACTOR].mean_cv
        if two == 0:
            raise DomainError("two-factor mean CV is zero; relative reduction undefined")
        reduction = 100.0 * (single - two) / two
    return AggregateAnalysis(categories=categories, cv_reduction_two_vs_single_pct=reduction)


@dataclass(frozen=True)
class CorrelationPair:
    pearson: float
    spearman: float


def column_correlations(summaries: list[RobustnessSummary]) -> dict[str, CorrelationPair] | None:
    """Pairwise correlations of the CV, mean-accuracy, and clean-accuracy columns.

    Returns None when fewer than two runs or a constant column makes the
    coefficients undefined.
    """
    if len(summaries) < 2:
        return None
    cv = [s.cv for s in summaries]
    ma = [s.mean_accu for s in summaries]
    cl = [s.clean_accu for s in summaries]
    try:
        return {
            "cv_vs_mean_accu": CorrelationPair(pearson(cv, ma), spearman(cv, ma)),
            "cv_vs_clean_accu": CorrelationPair(pearson(cv, cl), spearman(cv, cl)),
            "mean_accu_vs_clean_accu": CorrelationPair(pearson(ma, cl), spearman(ma, cl)),
        }
    except DomainError:
        return None


def summary_to_json(s: RobustnessSummary) -> dict:
    return {
        "spec_version": s.spec_version,
        "classifier_name": s.classifier_name,
        "training_group": s.training_group,
        "training_category": s.training_category.value,
        "mean_accu": s.mean_accu,
        "cv": s.cv,
        "clean_accu": s.clean_accu,
        "min_accu": s.min_accu,
        "max_accu": s.max_accu,
        "quadrant": s.quadrant.value,
    }


def summary_from_json(doc: dict) -> RobustnessSummary:
    try:
        return RobustnessSummary(
            classifier_name=doc["classifier_name"],
            training_group=doc["training_group"],
            training_category=TrainingCategory(doc["training_category"]),
            mean_accu=float(doc["mean_accu"]),
            cv=float(doc["cv"]),
            clean_accu=float(doc["clean_accu"]),
            min_accu=float(doc["min_accu"]),
            max_accu=float(doc["max_accu"]),
            quadrant=QuadrantLabel(doc["quadrant"]),
            spec_version=doc.get("spec_version", SPEC_VERSION),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed summary document: {exc}") from exc


def load_summary(path: str | Path) -> RobustnessSummary:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return summary_from_json(doc)


def aggregate_to_json(agg: AggregateAnalysis) -> dict:
    return {
        "categories": {
            cat.value: {
                "count": st.count,
                "mean_cv": st.mean_cv,
                "mean_mean_accu": st.mean_mean_accu,
                "mean_min_accu": st.mean_min_accu,
                "mean_max_accu": st.mean_max_accu,
            }
            for cat, st in sorted(agg.categories.items(), key=lambda kv: kv[0].value)
        },
        "cv_reduction_two_vs_single_pct": agg.cv_reduction_two_vs_single_pct,
    }
