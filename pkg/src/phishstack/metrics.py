"""Confusion counts and the six evaluation scores.

Positive class is phishing. A sample is predicted positive iff its
probability is strictly greater than the threshold.
"""

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.stats import rankdata

from .errors import LengthMismatchError, SingleClassEvaluationError

METRIC_NAMES = ("accuracy", "sensitivity", "precision", "gmean", "f1", "roc_auc")
TABLE_HEADER = ("Classifier", "Accuracy", "Sensitivity", "Precision", "G-mean", "F1-score", "ROC-AUC")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    sensitivity: float
    precision: float
    specificity: float
    gmean: float
    f1: float
    roc_auc: float
    confusion: ConfusionMatrix
    threshold: float = 0.5
    # names of scores whose denominator was zero (reported as 0.0)
    degenerate: tuple = ()

    def as_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "confusion"}
        d["degenerate"] = list(self.degenerate)
        d["confusion"] = {k: getattr(self.confusion, k) for k in ("tp", "fp", "tn", "fn")}
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["confusion"] = ConfusionMatrix(**d["confusion"])
        d["degenerate"] = tuple(d.get("degenerate", ()))
        return cls(**d)

    def table_row(self):
        return [format_percent(getattr(self, name)) for name in METRIC_NAMES]


def _check_pair(y, p):
    y = np.asarray(y).ravel()
    p = np.asarray(p, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise LengthMismatchError(f"{y.shape[0]} labels vs {p.shape[0]} scores")
    return y.astype(np.int64), p


def confusion(y, p, threshold=0.5):
    y, p = _check_pair(y, p)
    if y.size == 0:
        raise LengthMismatchError("empty input")
    pred = p > threshold
    pos = y == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    tn = int(np.sum(~pred & ~pos))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def scores(cm, roc_auc=float("nan"), threshold=0.5):
    """All scores derivable from ``cm``; ``roc_auc`` is passed through."""
    if cm.total < 1:
        raise ValueError("empty confusion matrix")
    flags = []
    accuracy = (cm.tp + cm.tn) / cm.total
    sensitivity = _ratio(cm.tp, cm.tp + cm.fn, "sensitivity", flags)
    specificity = _ratio(cm.tn, cm.tn + cm.fp, "specificity", flags)
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", flags)
    gmean = math.sqrt(sensitivity * specificity)
    f1 = _ratio(2 * precision * sensitivity, precision + sensitivity, "f1", flags)
    return MetricsReport(accuracy=accuracy, sensitivity=sensitivity, precision=precision,
                         specificity=specificity, gmean=gmean, f1=f1, roc_auc=roc_auc,
                         confusion=cm, threshold=threshold, degenerate=tuple(flags))


def roc_auc(y, p):
    """Mann-Whitney AUC: P(score of random positive > random negative), ties count 1/2."""
    y, p = _check_pair(y, p)
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassEvaluationError("ROC-AUC needs both classes")
    ranks = rankdata(p, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate(y, p, threshold=0.5):
    """Full report for one evaluation set; AUC is NaN (and flagged) when single-class."""
    cm = confusion(y, p, threshold)
    y_arr = np.asarray(y)
    if y_arr.min() == y_arr.max():
        rep = scores(cm, float("nan"), threshold)
        return _with_flag(rep, "roc_auc")
    return scores(cm, roc_auc(y, p), threshold)


def _with_flag(rep, name):
    d = {f.name: getattr(rep, f.name) for f in fields(rep)}
    d["degenerate"] = rep.degenerate + (name,)
    return MetricsReport(**d)


def mean_report(reports):
    """Arithmetic mean of each score over folds; confusion counts are summed."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    avg = {name: float(np.mean([getattr(r, name) for r in reports]))
           for name in ("accuracy", "sensitivity", "precision", "specificity", "gmean", "f1", "roc_auc")}
    cm = ConfusionMatrix(*(sum(getattr(r.confusion, k) for r in reports) for k in ("tp", "fp", "tn", "fn")))
    flags = tuple(sorted({f for r in reports for f in r.degenerate}))
    return MetricsReport(confusion=cm, threshold=reports[0].threshold, degenerate=flags, **avg)


def format_percent(x):
    """0.9749 -> '97.49'."""
    if x != x:
        return "nan"
    return f"{100.0 * x:.2f}"
