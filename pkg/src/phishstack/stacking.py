"""Two-level stacking: out-of-fold base probabilities feed an MLP meta-learner.

Base classifiers only ever predict rows they were not trained on while the
meta-features are built; the fit log kept in :class:`MetaFeatures` makes that
auditable. Base classifiers are added to the ensemble greedily.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import learners
from .dataset import derive_seed, stratified_kfold
from .errors import DimensionMismatchError, LeakageError
from .meta_mlp import MlpConfig, mlp_fit, mlp_predict

GREEDY_EPSILON = 1e-4
HOLDOUT_FRACTION = 0.2


@dataclass(frozen=True)
class FitRecord:
    column: int
    fold: int
    train_rows: np.ndarray
    predicted_rows: np.ndarray


@dataclass(frozen=True, eq=False)
class MetaFeatures:
    matrix: np.ndarray
    column_specs: tuple          # (LearnerSpec, FeatureMask) per column
    fold_provenance: np.ndarray  # inner fold whose model produced each row
    fit_log: tuple = field(default=(), repr=False)

    def columns(self, idx):
        idx = list(idx)
        keep = set(idx)
        remap = {j: i for i, j in enumerate(idx)}
        log = tuple(FitRecord(remap[r.column], r.fold, r.train_rows, r.predicted_rows)
                    for r in self.fit_log if r.column in keep)
        return MetaFeatures(self.matrix[:, idx], tuple(self.column_specs[j] for j in idx),
                            self.fold_provenance, log)


def audit_leakage(meta):
    """(column, row) pairs whose prediction came from a model trained on that row."""
    violations = []
    covered = np.zeros(meta.matrix.shape, dtype=bool)
    for rec in meta.fit_log:
        overlap = np.intersect1d(rec.train_rows, rec.predicted_rows)
        violations.extend((rec.column, int(r)) for r in overlap)
        bad = meta.fold_provenance[rec.predicted_rows] != rec.fold
        violations.extend((rec.column, int(r)) for r in rec.predicted_rows[bad])
        covered[rec.predicted_rows, rec.column] = True
    for col in np.flatnonzero(~covered.all(axis=0)):
        violations.extend((int(col), int(r)) for r in np.flatnonzero(~covered[:, col]))
    return violations


def oof_probabilities(train, pool, k, seed):
    """Out-of-fold P(phishing) for every pool member, rows in ``train`` order."""
    pool = list(pool)
    if not pool:
        raise ValueError("empty learner pool")
    plan = stratified_kfold(train, k, derive_seed(seed, "oof"))
    X, y = train.features, train.labels
    out = np.empty((train.n, len(pool)))
    log = []
    for f in range(plan.k):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        for j, (spec, mask) in enumerate(pool):
            cols = np.asarray(mask.selected)
            model = learners.fit(spec, X[np.ix_(tr, cols)], y[tr], salt=f)
            out[te, j] = learners.predict_proba(model, X[np.ix_(te, cols)])
            log.append(FitRecord(j, f, tr, te))
    meta = MetaFeatures(out, tuple(pool), plan.assignment, tuple(log))
    violations = audit_leakage(meta)
    if violations:
        raise LeakageError(f"{len(violations)} out-of-fold predictions leaked, first: {violations[0]}")
    return meta


def holdout_accuracy(Z, y, meta_config, seed, fraction=HOLDOUT_FRACTION):
    """Accuracy of the meta-learner on a stratified holdout slice of ``Z``."""
    rng = np.random.default_rng(derive_seed(seed, "greedy-holdout"))
    test = []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        n_te = max(1, int(round(fraction * idx.size)))
        test.append(rng.choice(idx, size=min(n_te, idx.size - 1), replace=False))
    test = np.sort(np.concatenate(test))
    train = np.setdiff1d(np.arange(y.size), test)
    model = mlp_fit(meta_config, Z[train], y[train])
    return float(np.mean((mlp_predict(model, Z[test]) > 0.5) == (y[test] == 1)))


@dataclass(frozen=True, eq=False)
class GreedySelection:
    selected: tuple              # (LearnerSpec, FeatureMask) in addition order
    indices: tuple               # positions in the candidate list
    score_history: tuple         # stacked holdout accuracy after each addition
    standalone_accuracy: tuple   # k-fold accuracy of each candidate
    meta: MetaFeatures           # OOF columns of every candidate


def _tie_rank(candidates):
    return [learners.KINDS.index(spec.kind) for spec, _ in candidates]


def greedy_select(train, candidates, k, seed, meta_config=None, oof=None):
    """Forward selection of base classifiers for the stack.

    The candidate with the best standalone k-fold accuracy seeds the pool.
    Each round tries every remaining candidate and keeps the one with the
    largest stacked accuracy, provided it beats the current pool by more
    than ``GREEDY_EPSILON``.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidates")
    meta_config = meta_config or MlpConfig(seed=seed)
    meta = oof if oof is not None else oof_probabilities(train, candidates, k, seed)
    y = train.labels
    standalone = [float(np.mean((meta.matrix[:, j] > 0.5) == (y == 1))) for j in range(len(candidates))]
    rank = _tie_rank(candidates)
    # canonical kind order, then list position, decides every tie
    order = sorted(range(len(candidates)), key=lambda j: (rank[j], j))

    first = max(order, key=lambda j: standalone[j])
    pool = [first]
    score = holdout_accuracy(meta.matrix[:, pool], y, meta_config, seed)
    history = [score]
    while True:
        best_j, best_s = None, None
        for j in order:
            if j in pool:
                continue
            s = holdout_accuracy(meta.matrix[:, pool + [j]], y, meta_config, seed)
            if s - score > GREEDY_EPSILON and (best_s is None or s > best_s):
                best_j, best_s = j, s
        if best_j is None:
            break
        pool.append(best_j)
        score = best_s
        history.append(score)
    return GreedySelection(tuple(candidates[j] for j in pool), tuple(pool), tuple(history),
                           tuple(standalone), meta)


@dataclass(frozen=True, eq=False)
class StackModel:
    bases: tuple                 # (LearnerSpec, FeatureMask, TrainedLearner)
    meta: object                 # MlpModel
    k_inner: int
    seed: int
    n_features: int
    meta_config: MlpConfig = field(default_factory=MlpConfig)
    feature_names: tuple = ()
    schema_hash: Optional[bytes] = None

    def __post_init__(self):
        if not self.bases:
            raise ValueError("stack needs at least one base classifier")
        if self.meta.input_width != len(self.bases):
            raise ValueError(f"meta input width {self.meta.input_width} != {len(self.bases)} bases")

    @property
    def kinds(self):
        return tuple(spec.kind for spec, _, _ in self.bases)


def fit_stack(train, selected, k, seed, meta_config=None, oof=None):
    """Meta-learner on OOF probabilities; bases refit on all of ``train``."""
    selected = list(selected)
    if not selected:
        raise ValueError("no base classifiers selected")
    meta_config = meta_config or MlpConfig(seed=seed)
    meta = oof if oof is not None else oof_probabilities(train, selected, k, seed)
    if meta.matrix.shape[1] != len(selected):
        raise ValueError("meta-features do not match the selected pool")
    mlp = mlp_fit(meta_config, meta.matrix, train.labels)
    bases = []
    for spec, mask in selected:
        cols = np.asarray(mask.selected)
        bases.append((spec, mask, learners.fit(spec, train.features[:, cols], train.labels, salt=k)))
    schema_hash = train.schema.schema_hash() if train.schema is not None and train.schema.is_resolved else None
    return StackModel(tuple(bases), mlp, k, seed, train.d, meta_config, train.feature_names, schema_hash)


def base_matrix(m, X):
    """Base-classifier probabilities, one column per base in stack order."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise DimensionMismatchError(f"stack expects {m.n_features} columns, got shape {X.shape}")
    if X.shape[0] == 0:
        return np.empty((0, len(m.bases)))
    return np.column_stack([learners.predict_proba(model, X[:, list(mask.selected)])
                            for _, mask, model in m.bases])


def predict_stack(m, X):
    Z = base_matrix(m, X)
    if Z.shape[0] == 0:
        return np.empty(0)
    return mlp_predict(m.meta, Z)
