"""Uniform fit / predict-probability / importance interface over the base classifiers."""

import os
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
from scipy.special import expit
from sklearn.ensemble import (
    AdaBoostClassifier,
    ExtraTreesClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.tree import DecisionTreeClassifier

from ..dataset import derive_seed
from ..errors import DimensionMismatchError, SingleClassTrainingError
from . import linear, local, trees

# canonical order; also the tie-break order for greedy selection
KINDS = ("LR", "NB", "KNN", "SVM_LINEAR", "DTREE", "RF", "EXTRA_TREES", "GBM", "ADABOOST")

DEFAULT_HYPERPARAMS = {
    "LR": {"C": 1.0, "tol": 1e-5, "max_iter": 1000},
    "NB": {"var_floor": 1e-9},
    "KNN": {"k_neighbors": 5},
    "SVM_LINEAR": {"C": 1.0, "epochs": 200, "calibration_fraction": 0.2},
    "DTREE": {"max_depth": None},
    "RF": {"n_trees": 100, "max_depth": None},
    "EXTRA_TREES": {"n_trees": 100, "max_depth": None},
    "GBM": {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3},
    "ADABOOST": {"n_rounds": 50, "learning_rate": 1.0},
}

# distance- and gradient-based kinds see min-max scaled inputs
SCALED_KINDS = frozenset({"LR", "KNN", "SVM_LINEAR"})
PERMUTATION_KINDS = frozenset({"KNN", "NB"})
PERMUTATION_REPEATS = 3


def _positive(name, v):
    if v is None or v <= 0:
        raise ValueError(f"{name} must be > 0, got {v!r}")


def _at_least_one(name, v):
    if v is None or int(v) != v or v < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {v!r}")


def _depth(v):
    if v is not None:
        _at_least_one("max_depth", v)


_VALIDATORS = {
    "C": _positive, "tol": _positive, "max_iter": _at_least_one, "var_floor": _positive,
    "k_neighbors": _at_least_one, "epochs": _at_least_one, "n_trees": _at_least_one,
    "n_stages": _at_least_one, "n_rounds": _at_least_one, "learning_rate": _positive,
    "max_depth": lambda name, v: _depth(v),
}


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        merged = dict(DEFAULT_HYPERPARAMS[self.kind])
        unknown = set(self.hyperparams) - set(merged)
        if unknown:
            raise ValueError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        merged.update(self.hyperparams)
        for name, value in merged.items():
            if name == "calibration_fraction":
                if not 0.0 < value < 1.0:
                    raise ValueError("calibration_fraction must be in (0, 1)")
            else:
                _VALIDATORS[name](name, value)
        object.__setattr__(self, "hyperparams", MappingProxyType(merged))

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.hyperparams.items())), self.seed))

    def __eq__(self, other):
        return (isinstance(other, LearnerSpec) and self.kind == other.kind
                and dict(self.hyperparams) == dict(other.hyperparams) and self.seed == other.seed)

    def to_dict(self):
        return {"kind": self.kind, "hyperparams": dict(self.hyperparams), "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], dict(d.get("hyperparams", {})), int(d.get("seed", 0)))


@dataclass(frozen=True, eq=False)
class TrainedLearner:
    """Fitted base classifier. ``state`` holds only named numpy arrays."""

    spec: LearnerSpec
    n_features: int
    state: dict
    native_importance: np.ndarray = None

    def __post_init__(self):
        for arr in self.state.values():
            arr.flags.writeable = False


def _workers():
    try:
        return max(1, int(os.environ.get("PHISHSTACK_WORKERS", "1")))
    except ValueError:
        return 1


def _sk_seed(spec, salt):
    return derive_seed(spec.seed, salt) % (2**31 - 1)


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X shape {X.shape} incompatible with {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise SingleClassTrainingError("need at least two training rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("training matrix contains non-finite values")
    if y.min() == y.max():
        raise SingleClassTrainingError(f"training labels are all {int(y[0])}")
    return X, y


def _scale_fit(X):
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    return {"scale_min": lo, "scale_span": span}


def _scale_apply(state, X):
    return (X - state["scale_min"]) / state["scale_span"]


def fit(spec, X, y, salt=0):
    """Train one base classifier. Deterministic in ``(spec, X, y, salt)``.

    ``salt`` lets a caller fit the same spec on several folds without the
    folds sharing one random stream.
    """
    X, y = _check_xy(X, y)
    hp = spec.hyperparams
    kind = spec.kind
    state = {}
    importance = None
    Xs = X
    if kind in SCALED_KINDS:
        state.update(_scale_fit(X))
        Xs = _scale_apply(state, X)

    if kind == "LR":
        state.update(linear.fit_logistic(Xs, y, C=hp["C"], tol=hp["tol"], max_iter=hp["max_iter"]))
        importance = np.abs(state["coef"])
    elif kind == "SVM_LINEAR":
        calib, train = _calibration_split(y, hp["calibration_fraction"], derive_seed(spec.seed, salt, "platt"))
        state.update(linear.fit_linear_svm(Xs, y, calib, train, C=hp["C"], epochs=hp["epochs"],
                                           random_state=_sk_seed(spec, salt)))
        importance = np.abs(state["coef"])
    elif kind == "NB":
        state.update(local.fit_gaussian_nb(X, y, var_floor=hp["var_floor"]))
    elif kind == "KNN":
        state["X"] = Xs.copy()
        state["y"] = y.copy()
        state["k_neighbors"] = np.array([hp["k_neighbors"]], dtype=np.int64)
    else:
        est = _sk_tree_estimator(spec, salt)
        est.fit(X, y)
        state.update(_extract_tree_state(kind, est, y))
        importance = np.asarray(est.feature_importances_, dtype=np.float64).copy()
        importance = np.nan_to_num(importance, nan=0.0)

    return TrainedLearner(spec=spec, n_features=X.shape[1], state=state, native_importance=importance)


def _calibration_split(y, fraction, seed):
    """Stratified (train, calibration) index split; tiny classes calibrate on all rows."""
    rng = np.random.default_rng(seed)
    calib, train = [], []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        n_cal = int(round(fraction * idx.size))
        if n_cal < 1 or idx.size - n_cal < 1:
            return np.arange(y.size), np.arange(y.size)
        calib.append(idx[:n_cal])
        train.append(idx[n_cal:])
    return np.sort(np.concatenate(calib)), np.sort(np.concatenate(train))


def _sk_tree_estimator(spec, salt):
    hp = spec.hyperparams
    rs = _sk_seed(spec, salt)
    if spec.kind == "DTREE":
        return DecisionTreeClassifier(max_depth=hp["max_depth"], random_state=rs)
    if spec.kind == "RF":
        return RandomForestClassifier(n_estimators=hp["n_trees"], max_depth=hp["max_depth"],
                                      max_features="sqrt", random_state=rs, n_jobs=_workers())
    if spec.kind == "EXTRA_TREES":
        return ExtraTreesClassifier(n_estimators=hp["n_trees"], max_depth=hp["max_depth"],
                                    max_features="sqrt", random_state=rs, n_jobs=_workers())
    if spec.kind == "GBM":
        return GradientBoostingClassifier(n_estimators=hp["n_stages"], learning_rate=hp["learning_rate"],
                                          max_depth=hp["max_depth"], random_state=rs)
    if spec.kind == "ADABOOST":
        return AdaBoostClassifier(estimator=DecisionTreeClassifier(max_depth=1),
                                  n_estimators=hp["n_rounds"], learning_rate=hp["learning_rate"],
                                  random_state=rs)
    raise AssertionError(spec.kind)


def _extract_tree_state(kind, est, y):
    if kind == "DTREE":
        return trees.flatten_trees([est.tree_], trees.classifier_p1)
    if kind in ("RF", "EXTRA_TREES"):
        return trees.flatten_trees([e.tree_ for e in est.estimators_], trees.classifier_p1)
    if kind == "GBM":
        state = trees.flatten_trees([e.tree_ for e in est.estimators_[:, 0]], trees.regressor_value)
        p = float(np.mean(y))
        state["gbm_init_raw"] = np.array([np.log(p / (1.0 - p))])
        state["gbm_learning_rate"] = np.array([est.learning_rate], dtype=np.float64)
        return state
    if kind == "ADABOOST":
        n = len(est.estimators_)
        state = trees.flatten_trees([e.tree_ for e in est.estimators_], trees.classifier_vote)
        state["ada_weights"] = np.asarray(est.estimator_weights_[:n], dtype=np.float64).copy()
        return state
    raise AssertionError(kind)


def predict_proba(m, X):
    """P(phishing) for each row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise DimensionMismatchError(
            f"{m.spec.kind} was trained on {m.n_features} features, got matrix of shape {X.shape}")
    if X.shape[0] == 0:
        return np.empty(0)
    s = m.state
    kind = m.spec.kind
    if kind in SCALED_KINDS:
        X = _scale_apply(s, X)
    if kind == "LR":
        p = expit(linear.linear_margin(s, X))
    elif kind == "SVM_LINEAR":
        p = linear.platt_proba(linear.linear_margin(s, X), *s["platt"])
    elif kind == "NB":
        p = local.gaussian_nb_proba(s, X)
    elif kind == "KNN":
        p = local.knn_proba(s, X, int(s["k_neighbors"][0]))
    elif kind in ("DTREE", "RF", "EXTRA_TREES"):
        p = trees.leaf_outputs(s, X).mean(axis=1)
    elif kind == "GBM":
        raw = s["gbm_init_raw"][0] + s["gbm_learning_rate"][0] * trees.leaf_outputs(s, X).sum(axis=1)
        p = expit(raw)
    elif kind == "ADABOOST":
        w = s["ada_weights"]
        votes = 2.0 * trees.leaf_outputs(s, X) - 1.0
        p = expit(2.0 * (votes @ w) / w.sum())
    else:
        raise AssertionError(kind)
    return np.clip(p, 0.0, 1.0)


def feature_importance(m, X, y, seed=0):
    """Non-negative per-feature weights used to rank features for elimination.

    Native importances where the model defines them (absolute coefficients,
    impurity decrease); otherwise permutation importance on ``(X, y)``.
    """
    if m.native_importance is not None:
        return np.maximum(m.native_importance, 0.0)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).ravel()
    return permutation_importance(m, X, y, seed)


def permutation_importance(m, X, y, seed=0, repeats=PERMUTATION_REPEATS):
    rng = np.random.default_rng(derive_seed(seed, "perm"))
    base = np.mean((predict_proba(m, X) > 0.5) == (y == 1))
    out = np.zeros(X.shape[1])
    Xp = X.copy()
    for j in range(X.shape[1]):
        drops = []
        for _ in range(repeats):
            Xp[:, j] = X[rng.permutation(X.shape[0]), j]
            drops.append(base - np.mean((predict_proba(m, Xp) > 0.5) == (y == 1)))
        Xp[:, j] = X[:, j]
        out[j] = max(0.0, float(np.mean(drops)))
    return out


def default_spec(kind, seed=0):
    return LearnerSpec(kind, {}, seed)
