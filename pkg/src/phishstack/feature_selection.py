"""Recursive feature elimination with cross-validated choice of the subset size."""

from dataclasses import dataclass

import numpy as np

from . import learners
from .dataset import derive_seed, stratified_kfold
from .errors import MaskIndexOutOfRangeError

LARGE_FEATURE_COUNT = 40
MIN_FEATURES_TO_KEEP = 1


@dataclass(frozen=True)
class FeatureMask:
    learner_kind: str
    selected: tuple
    cv_score_at_selection: float

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        object.__setattr__(self, "selected", sel)
        if not sel:
            raise ValueError("feature mask is empty")
        if any(b <= a for a, b in zip(sel[:-1], sel[1:])) or sel[0] < 0:
            raise ValueError("mask indices must be strictly increasing and non-negative")
        if not 0.0 <= self.cv_score_at_selection <= 1.0:
            raise ValueError("cv score outside [0, 1]")

    @classmethod
    def full(cls, kind, d, score=0.0):
        return cls(kind, tuple(range(d)), score)

    def to_text(self):
        return f"{self.learner_kind}\t{self.cv_score_at_selection:.6f}\t{','.join(map(str, self.selected))}"

    @classmethod
    def from_text(cls, line):
        kind, score, idx = line.rstrip("\n").split("\t")
        return cls(kind, tuple(int(i) for i in idx.split(",")), float(score))


@dataclass(frozen=True)
class RfecvRecord:
    feature_count: int
    mean_cv_accuracy: float
    removed_indices: tuple   # features dropped to arrive at this record


@dataclass(frozen=True)
class RfecvTrace:
    records: tuple

    def __post_init__(self):
        counts = [r.feature_count for r in self.records]
        if any(b >= a for a, b in zip(counts[:-1], counts[1:])):
            raise ValueError("feature counts must strictly decrease along the trace")

    def to_text(self):
        lines = ["feature_count\tmean_cv_accuracy\tremoved_indices"]
        for r in self.records:
            lines.append(f"{r.feature_count}\t{r.mean_cv_accuracy:.6f}\t{','.join(map(str, r.removed_indices))}")
        return "\n".join(lines) + "\n"


def elimination_step(n_features):
    return 3 if n_features > LARGE_FEATURE_COUNT else 1


def cv_accuracy(ds, spec, plan, columns):
    """Mean per-fold accuracy of ``spec`` restricted to ``columns``."""
    X = ds.features[:, columns]
    y = ds.labels
    accs = []
    for f in range(plan.k):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        model = learners.fit(spec, X[tr], y[tr], salt=f)
        accs.append(np.mean((learners.predict_proba(model, X[te]) > 0.5) == (y[te] == 1)))
    return float(np.mean(accs))


def rfecv(ds, spec, k, seed, min_features=MIN_FEATURES_TO_KEEP):
    """Eliminate down to ``min_features``, then keep the best-scoring subset.

    Every subset along the way is scored by stratified k-fold accuracy; the
    importances that decide what to drop come from a fit on all rows. Equal
    scores resolve toward the smaller subset.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    plan = stratified_kfold(ds, k, derive_seed(seed, "rfecv"))
    current = np.arange(ds.d)
    removed = ()
    records, subsets = [], []
    while True:
        score = cv_accuracy(ds, spec, plan, current)
        records.append(RfecvRecord(int(current.size), score, removed))
        subsets.append(current)
        if current.size <= min_features:
            break
        Xc = ds.features[:, current]
        model = learners.fit(spec, Xc, ds.labels, salt=plan.k)
        imp = learners.feature_importance(model, Xc, ds.labels, seed=derive_seed(seed, "imp", current.size))
        n_drop = min(elimination_step(current.size), current.size - min_features)
        drop = np.argsort(imp, kind="stable")[:n_drop]
        removed = tuple(sorted(int(current[i]) for i in drop))
        current = np.delete(current, drop)

    scores = np.array([r.mean_cv_accuracy for r in records])
    best = int(np.flatnonzero(scores >= scores.max() - 1e-12)[-1])
    mask = FeatureMask(spec.kind, tuple(np.sort(subsets[best])), float(scores[best]))
    return mask, RfecvTrace(tuple(records))


def apply_mask(ds, mask):
    idx = np.asarray(mask.selected, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= ds.d):
        raise MaskIndexOutOfRangeError(f"mask index outside [0, {ds.d})")
    return ds.select_columns(idx)
