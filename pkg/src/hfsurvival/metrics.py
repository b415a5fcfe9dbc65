"""Binary-classification evaluation: 2x2 confusion matrix, the ten-metric
report, and the score-based ROC curve.

All metrics are stored in fractional units; percent rendering is a display
concern. Ratios with a zero denominator are reported as 0 and the field name
is added to the report's `undefined` set, so batch evaluation stays total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClassError, EmptyInputError

METRIC_FIELDS = (
    "precision",
    "recall",
    "f1",
    "roc_auc_point",
    "mse",
    "gini",
    "kappa",
    "mcc",
    "specificity",
    "accuracy",
)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n < 1:
            raise EmptyInputError("confusion matrix must count at least one pair")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion_matrix(actual, predicted) -> ConfusionMatrix:
    """Cross-tabulate actual vs predicted labels; positive class is 1."""
    actual = np.asarray(actual, dtype=int)
    predicted = np.asarray(predicted, dtype=int)
    if actual.shape[0] != predicted.shape[0]:
        raise ValueError(
            f"length mismatch: {actual.shape[0]} actual vs {predicted.shape[0]} predicted"
        )
    if actual.shape[0] == 0:
        raise EmptyInputError("cannot build a confusion matrix from zero pairs")
    tp = int(np.count_nonzero((actual == 1) & (predicted == 1)))
    fp = int(np.count_nonzero((actual == 0) & (predicted == 1)))
    fn = int(np.count_nonzero((actual == 1) & (predicted == 0)))
    tn = int(np.count_nonzero((actual == 0) & (predicted == 0)))
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass
class MetricsReport:
    """The ten evaluation metrics in fractional units. Fields a given
    operation does not compute stay None; `undefined` names the fields whose
    denominator vanished (value reported as 0)."""

    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    roc_auc_point: float | None = None
    mse: float | None = None
    gini: float | None = None
    kappa: float | None = None
    mcc: float | None = None
    specificity: float | None = None
    accuracy: float | None = None
    undefined: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in METRIC_FIELDS}
        out["undefined"] = sorted(self.undefined)
        return out

    def to_percent_dict(self, digits: int = 2) -> dict:
        """Table-style rendering: 100x the fractional values, rounded."""
        out = {}
        for name in METRIC_FIELDS:
            value = getattr(self, name)
            out[name] = None if value is None else round(100.0 * value, digits)
        return out


def _ratio(num: float, den: float, name: str, undefined: set[str]) -> float:
    if den == 0.0:
        undefined.add(name)
        return 0.0
    return num / den


def classification_report(cm: ConfusionMatrix) -> MetricsReport:
    """Precision, recall, F1, specificity, and accuracy from the matrix."""
    undefined: set[str] = set()
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", undefined)
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall", undefined)
    if "precision" in undefined or "recall" in undefined or precision + recall == 0.0:
        undefined.add("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    specificity = _ratio(cm.tn, cm.tn + cm.fp, "specificity", undefined)
    accuracy = (cm.tp + cm.tn) / cm.n
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        specificity=specificity,
        accuracy=accuracy,
        undefined=frozenset(undefined),
    )


def roc_auc_point(cm: ConfusionMatrix) -> float:
    """Single-threshold AUC (1 + TPR - FPR) / 2 from hard predictions."""
    if cm.tp + cm.fn < 1 or cm.fp + cm.tn < 1:
        raise DegenerateClassError("roc_auc_point needs both classes in the truth")
    tpr = cm.tp / (cm.tp + cm.fn)
    fpr = cm.fp / (cm.fp + cm.tn)
    return (1.0 + tpr - fpr) / 2.0


def mse(actual, predicted) -> float:
    """Mean squared difference; equals the misclassification rate for hard
    0/1 predictions."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape[0] != predicted.shape[0]:
        raise ValueError(
            f"length mismatch: {actual.shape[0]} actual vs {predicted.shape[0]} predicted"
        )
    if actual.shape[0] == 0:
        raise EmptyInputError("mse of zero pairs is undefined")
    return float(np.mean((actual - predicted) ** 2))


def gini_metric(auc: float) -> float:
    """Ranking Gini coefficient, 2 * AUC - 1."""
    if not 0.0 <= auc <= 1.0:
        raise ValueError(f"auc must lie in [0, 1], got {auc}")
    return 2.0 * auc - 1.0


def kappa(cm: ConfusionMatrix) -> float:
    """Cohen's kappa (P0 - Pe) / (1 - Pe); 0 when Pe = 1 (both marginals
    degenerate)."""
    n = cm.n
    p0 = (cm.tp + cm.tn) / n
    pe = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)) / (n * n)
    if pe == 1.0:
        return 0.0
    return (p0 - pe) / (1.0 - pe)


def mcc(cm: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 when any marginal is empty."""
    factors = (
        (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fn) * (cm.tn + cm.fp)
    )
    if factors == 0:
        return 0.0
    return (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(factors)


def full_report(cm: ConfusionMatrix) -> MetricsReport:
    """All ten metrics from one matrix. MSE uses the hard-prediction identity
    mse = 1 - accuracy; the AUC behind the Gini coefficient is the
    single-threshold roc_auc_point."""
    report = classification_report(cm)
    undefined = set(report.undefined)

    if cm.tp + cm.fn < 1 or cm.fp + cm.tn < 1:
        auc = 0.0
        undefined.add("roc_auc_point")
        undefined.add("gini")
        gini = 0.0
    else:
        auc = roc_auc_point(cm)
        gini = gini_metric(auc)

    n = cm.n
    pe = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)) / (n * n)
    if pe == 1.0:
        undefined.add("kappa")
    kap = kappa(cm)

    if ((cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fn) * (cm.tn + cm.fp)) == 0:
        undefined.add("mcc")
    matthews = mcc(cm)

    return MetricsReport(
        precision=report.precision,
        recall=report.recall,
        f1=report.f1,
        roc_auc_point=auc,
        mse=(cm.fp + cm.fn) / n,
        gini=gini,
        kappa=kap,
        mcc=matthews,
        specificity=report.specificity,
        accuracy=report.accuracy,
        undefined=frozenset(undefined),
    )


@dataclass
class RocCurve:
    """(fpr, tpr) points from score thresholds, plus the trapezoidal AUC."""

    points: list[tuple[float, float]]
    auc: float

    def to_dict(self) -> dict:
        return {
            "points": [{"fpr": f, "tpr": t} for f, t in self.points],
            "auc": self.auc,
        }


def roc_curve(actual, scores) -> RocCurve:
    """Sweep thresholds over the distinct scores in descending order.

    Tied scores enter as one group, so the trapezoidal AUC equals the
    Mann-Whitney pairwise concordance with ties counted 0.5.
    """
    actual = np.asarray(actual, dtype=int)
    scores = np.asarray(scores, dtype=float)
    if actual.shape[0] != scores.shape[0]:
        raise ValueError(
            f"length mismatch: {actual.shape[0]} labels vs {scores.shape[0]} scores"
        )
    pos = int(np.count_nonzero(actual == 1))
    neg = actual.shape[0] - pos
    if pos == 0 or neg == 0:
        raise DegenerateClassError("roc_curve needs both classes in the truth")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = actual[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = actual.shape[0]
    while i < n:
        j = i
        while j < n and sorted_scores[j] == sorted_scores[i]:
            j += 1
        group = sorted_labels[i:j]
        tp += int(np.count_nonzero(group == 1))
        fp += group.shape[0] - int(np.count_nonzero(group == 1))
        points.append((fp / neg, tp / pos))
        i = j
    fprs = np.array([p[0] for p in points])
    tprs = np.array([p[1] for p in points])
    auc = float(np.sum((tprs[1:] + tprs[:-1]) / 2.0 * np.diff(fprs)))
    return RocCurve(points=points, auc=auc)


def score(name: str, actual, predicted) -> float:
    """Named metric of hard predictions, for search-style callers.
    Maximization orientation: error-like metrics are negated."""
    if name not in _SCORERS:
        raise ValueError(f"unsupported metric {name!r}; choose from {sorted(_SCORERS)}")
    return _SCORERS[name](actual, predicted)


def _from_matrix(extract):
    def scorer(actual, predicted):
        return extract(confusion_matrix(actual, predicted))

    return scorer


_SCORERS = {
    "accuracy": _from_matrix(lambda cm: classification_report(cm).accuracy),
    "precision": _from_matrix(lambda cm: classification_report(cm).precision),
    "recall": _from_matrix(lambda cm: classification_report(cm).recall),
    "f1": _from_matrix(lambda cm: classification_report(cm).f1),
    "specificity": _from_matrix(lambda cm: classification_report(cm).specificity),
    "kappa": _from_matrix(kappa),
    "mcc": _from_matrix(mcc),
    "neg_mse": lambda actual, predicted: -mse(actual, predicted),
}

SUPPORTED_METRICS = tuple(sorted(_SCORERS))
