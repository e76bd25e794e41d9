"""Classification metrics (phishing = positive class) and correlation tables."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .base import check_labels
from .errors import DegenerateError, InputError
from .metrics import correlate_metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionMatrix":
        t, p = y_true == 1, y_pred == 1
        return cls(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(~t & ~p)), int(np.sum(t & ~p)))


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    phishing: ClassScores
    non_phishing: ClassScores
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: ConfusionMatrix
    zero_division: list[str] = field(default_factory=list)

    @property
    def phishing_f1(self) -> float:
        return self.phishing.f1

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self) -> list[tuple]:
        return [
            ("phishing", self.phishing.precision, self.phishing.recall, self.phishing.f1, self.phishing.support),
            ("non_phishing", self.non_phishing.precision, self.non_phishing.recall, self.non_phishing.f1,
             self.non_phishing.support),
            ("macro", self.macro_precision, self.macro_recall, self.macro_f1,
             self.phishing.support + self.non_phishing.support),
        ]


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def _class_scores(tp, fp, fn, tag, flags) -> ClassScores:
    p = _ratio(tp, tp + fp, f"{tag}.precision", flags)
    r = _ratio(tp, tp + fn, f"{tag}.recall", flags)
    f = _ratio(2 * p * r, p + r, f"{tag}.f1", flags)
    return ClassScores(p, r, f, tp + fn)


def classification_report(y_true, y_pred) -> ClassificationReport:
    """Per-class and unweighted macro precision/recall/F1. A zero
    denominator yields 0 and is listed in ``zero_division``."""
    y_true, y_pred = check_labels(y_true), check_labels(y_pred)
    if len(y_true) != len(y_pred):
        raise InputError(f"{len(y_true)} true labels but {len(y_pred)} predictions")
    cm = ConfusionMatrix.from_labels(y_true, y_pred)
    flags: list[str] = []
    pos = _class_scores(cm.tp, cm.fp, cm.fn, "phishing", flags)
    neg = _class_scores(cm.tn, cm.fn, cm.fp, "non_phishing", flags)
    return ClassificationReport(
        pos, neg,
        (pos.precision + neg.precision) / 2,
        (pos.recall + neg.recall) / 2,
        (pos.f1 + neg.f1) / 2,
        cm, flags,
    )


def false_positive_count(y_true, y_pred) -> int:
    y_true, y_pred = check_labels(y_true), check_labels(y_pred)
    if len(y_true) != len(y_pred):
        raise InputError(f"{len(y_true)} true labels but {len(y_pred)} predictions")
    return int(np.sum((y_true == -1) & (y_pred == 1)))


METRIC_COLUMNS = ("expressibility", "meyer_wallach", "von_neumann")
SCORE_COLUMNS = ("precision", "recall", "f1")


def correlation_report(rows, metrics=METRIC_COLUMNS, scores=SCORE_COLUMNS, group="encoder") -> list[dict]:
    """Pearson r of every (metric, score) pair within each ``group`` value.

    ``rows`` are dicts holding the group key, metric and score columns. An
    entry is ``None`` with ``defined=False`` when a column is constant.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault(r[group], []).append(r)
    out = []
    for g in sorted(groups):
        members = groups[g]
        if len(members) < 3:
            raise InputError(f"{group}={g}: need at least 3 circuits, got {len(members)}")
        for m in metrics:
            for s in scores:
                x = [r[m] for r in members]
                y = [r[s] for r in members]
                try:
                    value, defined = correlate_metrics(x, y), True
                except DegenerateError:
                    value, defined = None, False
                out.append({group: g, "metric": m, "score": s, "r": value, "defined": defined, "n": len(members)})
    return out
