"""Score binary predictions against the traditional and new test sets.

Zero-denominator precision and recall are defined as 0 rather than
undefined so macro averages stay total; degeneracy (a constant predictor)
is flagged separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .dataset import LabeledPair, PairClass, TrainingConfig, binarize
from .errors import UndefinedValueError, ValidationError
from .model import TfIdfIndex, ktop_retrieve, pair_similarity
from .taxonomy import LinkCategory

PairKey = tuple[str, str]


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed by (true pair class, predicted binary label)."""

    counts: dict[tuple[PairClass, int], int]
    by_category: dict[tuple[LinkCategory, int], int] = field(default_factory=dict)

    def total(self) -> int:
        return sum(self.counts.values())

    def of(self, klass: PairClass, predicted: int) -> int:
        return self.counts.get((klass, predicted), 0)

    def to_dict(self) -> dict:
        return {
            "counts": {
                f"{klass.value}|{pred}": count
                for (klass, pred), count in sorted(
                    self.counts.items(), key=lambda kv: (kv[0][0].value, kv[0][1])
                )
            },
            "other_link_by_category": {
                f"{cat.value}|{pred}": count
                for (cat, pred), count in sorted(
                    self.by_category.items(), key=lambda kv: (kv[0][0].value, kv[0][1])
                )
            },
        }


@dataclass(frozen=True)
class EvalReport:
    mode: str  # "traditional" | "new"
    training_config: TrainingConfig
    accuracy: float
    per_label: dict[int, Scores]
    macro: Scores
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "training_config": self.training_config.value,
            "accuracy": self.accuracy,
            "per_label": {str(label): s.to_dict() for label, s in sorted(self.per_label.items())},
            "macro": self.macro.to_dict(),
            "degenerate": self.degenerate,
        }


def _scores(tp: int, fp: int, fn: int) -> Scores:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Scores(precision=precision, recall=recall, f1=f1)


def evaluate(
    predictions: Mapping[PairKey, int],
    test_set: Sequence[LabeledPair],
    tc: TrainingConfig,
    mode: str = "new",
) -> tuple[EvalReport, ConfusionMatrix]:
    """Score predictions; mode="traditional" drops OtherLink pairs first."""
    if mode not in ("traditional", "new"):
        raise ValidationError(f"mode must be 'traditional' or 'new', got {mode!r}")
    pairs = [p for p in test_set if mode == "new" or p.klass is not PairClass.OTHER_LINK]
    if not pairs:
        raise UndefinedValueError("no pairs to score")

    counts: dict[tuple[PairClass, int], int] = {}
    by_category: dict[tuple[LinkCategory, int], int] = {}
    label_counts = {(t, p): 0 for t in (0, 1) for p in (0, 1)}
    for pair in pairs:
        try:
            predicted = predictions[pair.key()]
        except KeyError:
            raise ValidationError(f"missing prediction for pair {pair.key()}") from None
        truth = binarize(pair.klass, tc)
        counts[(pair.klass, predicted)] = counts.get((pair.klass, predicted), 0) + 1
        label_counts[(truth, predicted)] += 1
        if pair.klass is PairClass.OTHER_LINK and pair.category is not None:
            by_category[(pair.category, predicted)] = by_category.get((pair.category, predicted), 0) + 1

    per_label = {}
    for label in (0, 1):
        tp = label_counts[(label, label)]
        fp = label_counts[(1 - label, label)]
        fn = label_counts[(label, 1 - label)]
        per_label[label] = _scores(tp, fp, fn)
    total = len(pairs)
    correct = label_counts[(0, 0)] + label_counts[(1, 1)]
    macro = Scores(
        precision=(per_label[0].precision + per_label[1].precision) / 2,
        recall=(per_label[0].recall + per_label[1].recall) / 2,
        f1=(per_label[0].f1 + per_label[1].f1) / 2,
    )
    predicted_labels = {label_counts[(0, 1)] + label_counts[(1, 1)],
                        label_counts[(0, 0)] + label_counts[(1, 0)]}
    degenerate = 0 in predicted_labels  # one side never predicted
    report = EvalReport(
        mode=mode,
        training_config=tc,
        accuracy=correct / total,
        per_label=per_label,
        macro=macro,
        degenerate=degenerate,
    )
    return report, ConfusionMatrix(counts=counts, by_category=by_category)


def robustness_delta(report_traditional: EvalReport, report_new: EvalReport) -> dict[str, float]:
    """new minus traditional, per metric, for the same model and config."""
    if report_traditional.mode != "traditional" or report_new.mode != "new":
        raise ValidationError("robustness_delta needs one traditional and one new report")
    if report_traditional.training_config is not report_new.training_config:
        raise ValidationError("reports come from different training configurations")
    return {
        "accuracy": report_new.accuracy - report_traditional.accuracy,
        "macro_precision": report_new.macro.precision - report_traditional.macro.precision,
        "macro_recall": report_new.macro.recall - report_traditional.macro.recall,
        "macro_f1": report_new.macro.f1 - report_traditional.macro.f1,
    }


def ol_confusion_rate(matrix: ConfusionMatrix) -> float:
    """Share of OtherLink pairs predicted positive."""
    positive = matrix.of(PairClass.OTHER_LINK, 1)
    total = positive + matrix.of(PairClass.OTHER_LINK, 0)
    if total == 0:
        raise UndefinedValueError("no OtherLink pairs were scored")
    return positive / total


def predict_threshold(
    index: TfIdfIndex, test_set: Sequence[LabeledPair], theta: float
) -> dict[PairKey, int]:
    """Positive when cosine similarity >= theta."""
    return {
        p.key(): 1 if pair_similarity(index, p.a, p.b) >= theta else 0
        for p in test_set
    }


def predict_ktop(
    index: TfIdfIndex, test_set: Sequence[LabeledPair], k: int
) -> dict[PairKey, int]:
    """Positive when either endpoint retrieves the other among its k nearest
    neighbors over the issues appearing in the test set."""
    universe = sorted({key for p in test_set for key in (p.a, p.b)})
    top: dict[str, set[str]] = {
        key: {hit for hit, _ in ktop_retrieve(index, key, universe, k)} for key in universe
    }
    return {
        p.key(): 1 if (p.b in top[p.a] or p.a in top[p.b]) else 0
        for p in test_set
    }


@dataclass(frozen=True)
class SweepPoint:
    setting: float
    report: EvalReport
    matrix: ConfusionMatrix


def sweep(
    index: TfIdfIndex,
    test_set: Sequence[LabeledPair],
    tc: TrainingConfig,
    grid: Sequence[float],
    variable: str = "theta",
    mode: str = "new",
) -> list[SweepPoint]:
    """One evaluation per grid point, for threshold or kTop curves."""
    if variable not in ("theta", "k"):
        raise ValidationError(f"variable must be 'theta' or 'k', got {variable!r}")
    if not grid:
        raise ValidationError("grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("grid must be strictly increasing")
    points = []
    for setting in grid:
        if variable == "theta":
            predictions = predict_threshold(index, test_set, float(setting))
        else:
            predictions = predict_ktop(index, test_set, int(setting))
        report, matrix = evaluate(predictions, test_set, tc, mode=mode)
        points.append(SweepPoint(setting=float(setting), report=report, matrix=matrix))
    return points
