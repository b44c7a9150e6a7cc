"""Per-dataset evaluation metrics: accuracy, majority baseline, lift, kappa.

Invalid predictions (the None marker) are scored as incorrect and form
their own prediction-marginal category in the kappa computation; excluding
them would inflate accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .data import PredictionSet, class_distribution
from .errors import DegenerateStatisticsError, InputError


@dataclass(frozen=True)
class AuditMetrics:
    dataset_id: str
    model_id: str
    accuracy: float
    majority_baseline: float
    lift: float
    kappa: float
    n: int


def majority_baseline(true_labels: Sequence[str]) -> float:
    """Accuracy of always predicting the most frequent class.

    Ties are harmless: the max count is unique even when the argmax class
    is not.
    """
    counts = class_distribution(true_labels)
    return max(counts.values()) / len(true_labels)


def accuracy(preds: PredictionSet) -> float:
    if not preds.records:
        raise InputError("accuracy: empty prediction set")
    correct = sum(
        1 for rec in preds.records if rec.predicted is not None and rec.predicted == rec.true_label
    )
    return correct / len(preds.records)


def lift(acc: float, baseline: float) -> float:
    """Improvement over naive majority prediction: accuracy - baseline."""
    return acc - baseline


def cohen_kappa(preds: PredictionSet) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    p_o is the observed agreement rate; p_e the agreement expected from
    the product of truth and prediction marginals. Invalid predictions are
    a prediction-marginal category of their own (they never agree with a
    true label, so they depress both p_o and p_e consistently).
    """
    if not preds.records:
        raise InputError("cohen_kappa: empty prediction set")
    n = len(preds.records)
    truth_counts: dict[str, int] = {}
    pred_counts: dict[str | None, int] = {}
    agree = 0
    for rec in preds.records:
        truth_counts[rec.true_label] = truth_counts.get(rec.true_label, 0) + 1
        pred_counts[rec.predicted] = pred_counts.get(rec.predicted, 0) + 1
        if rec.predicted is not None and rec.predicted == rec.true_label:
            agree += 1
    p_o = agree / n
    p_e = sum(
        (truth_counts.get(label, 0) / n) * (count / n)
        for label, count in pred_counts.items()
        if label is not None
    )
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise DegenerateStatisticsError(
            "cohen_kappa: degenerate agreement (p_e = 1 with imperfect observed agreement)"
        )
    return (p_o - p_e) / (1.0 - p_e)


def recovery(model_accuracy: float, reference_accuracy: float) -> float:
    """Model accuracy as a percentage of a reference model's accuracy."""
    if reference_accuracy <= 0:
        raise InputError("recovery: reference accuracy must be positive")
    return 100.0 * model_accuracy / reference_accuracy


def audit_dataset(preds: PredictionSet) -> AuditMetrics:
    """All per-dataset metrics; the lift identity holds exactly."""
    acc = accuracy(preds)
    maj = majority_baseline(preds.true_labels())
    return AuditMetrics(
        dataset_id=preds.dataset_id,
        model_id=preds.model_id,
        accuracy=acc,
        majority_baseline=maj,
        lift=lift(acc, maj),
        kappa=cohen_kappa(preds),
        n=len(preds.records),
    )
