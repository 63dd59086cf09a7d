import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier

from phishstack import learners
from phishstack.errors import DimensionMismatchError, SingleClassTrainingError
from phishstack.learners import KINDS, LearnerSpec, TrainedLearner, feature_importance, fit, predict_proba
from phishstack.learners.base import _sk_tree_estimator
from phishstack.learners.trees import leaf_outputs

FAST = {"RF": {"n_trees": 15}, "EXTRA_TREES": {"n_trees": 15}, "GBM": {"n_stages": 20},
        "ADABOOST": {"n_rounds": 15}, "SVM_LINEAR": {"epochs": 30}}


def quick(kind, seed=0):
    return LearnerSpec(kind, FAST.get(kind, {}), seed)


def noisy_data(n=120, d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + 0.5 * X[:, min(1, d - 1)] + 0.4 * rng.normal(size=n) > 0).astype(int)
    return X, y


def blobs():
    rng = np.random.default_rng(5)
    pos = rng.uniform(-1, 1, size=(20, 2)) + [3.0, 3.0]
    neg = rng.uniform(-1, 1, size=(20, 2)) + [-3.0, -3.0]
    return np.vstack([pos, neg]), np.array([1] * 20 + [0] * 20)


def test_lr_separable_blobs():
    X, y = blobs()
    # x0 + x1 = 0 separates with distance >= 1 from every point
    margin = (X[:, 0] + X[:, 1]) * (2 * y - 1) / np.sqrt(2)
    assert margin.min() >= 1.0
    m = fit(LearnerSpec("LR"), X, y)
    assert np.all((predict_proba(m, X) > 0.5) == (y == 1))


@pytest.mark.parametrize("kind", KINDS)
def test_single_class_rejected(kind):
    X = np.arange(10.0).reshape(5, 2)
    with pytest.raises(SingleClassTrainingError):
        fit(quick(kind), X, np.ones(5, dtype=int))


@pytest.mark.parametrize("kind", KINDS)
def test_dimension_mismatch_and_empty(kind):
    X, y = noisy_data(60, 3)
    m = fit(quick(kind), X, y)
    with pytest.raises(DimensionMismatchError):
        predict_proba(m, np.zeros((2, 4)))
    assert predict_proba(m, np.zeros((0, 3))).shape == (0,)


@pytest.mark.parametrize("kind", KINDS)
def test_bounds_determinism_and_importance_shape(kind):
    X, y = noisy_data(80, 3, seed=1)
    Q = np.random.default_rng(2).normal(scale=3, size=(50, 3))
    a = fit(quick(kind, seed=4), X, y, salt=2)
    b = fit(quick(kind, seed=4), X, y, salt=2)
    pa, pb = predict_proba(a, Q), predict_proba(b, Q)
    assert np.array_equal(pa, pb)
    assert np.all((pa >= 0) & (pa <= 1))
    assert np.allclose(pa + (1 - pa), 1.0, atol=1e-9)
    imp = feature_importance(a, X, y, seed=0)
    assert imp.shape == (3,) and np.all(imp >= 0)


@pytest.mark.parametrize("kind", KINDS)
def test_single_feature(kind):
    X, y = noisy_data(60, 1, seed=3)
    m = fit(quick(kind), X, y)
    imp = feature_importance(m, X, y)
    assert imp.shape == (1,) and imp[0] >= 0


def test_lr_importance_is_abs_coefficients():
    spec = LearnerSpec("LR")
    state = {"scale_min": np.zeros(3), "scale_span": np.ones(3),
             "coef": np.array([2.0, -0.5, 0.0]), "intercept": np.array([0.0])}
    m = TrainedLearner(spec, 3, state, np.abs(state["coef"]))
    assert feature_importance(m, np.zeros((2, 3)), np.array([0, 1])).tolist() == [2.0, 0.5, 0.0]
    X, y = noisy_data(80, 3)
    fitted = fit(spec, X, y)
    assert np.array_equal(feature_importance(fitted, X, y), np.abs(fitted.state["coef"]))


def test_knn_neighbor_fraction():
    # five closest to the query at 0 are 4 positives and 1 negative
    X = np.array([[0.1], [0.2], [-0.1], [-0.2], [0.3], [5.0], [5.1], [5.2], [6.0]])
    y = np.array([1, 1, 1, 1, 0, 0, 0, 0, 1])
    m = fit(LearnerSpec("KNN"), X, y)
    assert predict_proba(m, np.array([[0.0]]))[0] == 0.8


def test_knn_ties_go_to_lower_index():
    # after min-max scaling the query sits exactly halfway between rows 0 and 1
    X = np.array([[0.0], [2.0], [5.0], [8.0]])
    y = np.array([1, 0, 0, 1])
    m = fit(LearnerSpec("KNN", {"k_neighbors": 1}), X, y)
    assert predict_proba(m, np.array([[1.0]]))[0] == 1.0


def test_nb_training_duplicate():
    X = np.array([[0.0, 0.1], [0.2, 0.0], [0.1, 0.2], [4.0, 4.1], [4.2, 3.9], [3.9, 4.0]])
    y = np.array([1, 1, 1, 0, 0, 0])
    m = fit(LearnerSpec("NB"), X, y)
    p = predict_proba(m, X)
    assert np.all(p[:3] > 0.5) and np.all(p[3:] < 0.5)


def test_nb_constant_feature_is_finite():
    X = np.column_stack([np.ones(6), [0, 1, 0, 5, 6, 5]])
    m = fit(LearnerSpec("NB"), X, np.array([1, 1, 1, 0, 0, 0]))
    assert np.all(np.isfinite(predict_proba(m, X)))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_svm_zero_margin_is_half(seed):
    # mirror-symmetric classes with heavy overlap, so the sigmoid midpoint
    # is pinned by many calibration rows near the boundary
    rng = np.random.default_rng(seed)
    half = rng.normal(size=(2000, 2)) + 0.3
    X = np.vstack([half, -half])
    y = np.array([1] * 2000 + [0] * 2000)
    m = fit(LearnerSpec("SVM_LINEAR", {}, seed), X, y)
    a, b = m.state["platt"]
    assert a < 0  # larger margin, larger probability
    assert abs(expit(-b) - 0.5) <= 0.05


def test_knn_permutation_importance_finds_label_copy():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, size=120)
    X = np.column_stack([y.astype(float), rng.uniform(size=120)])
    m = fit(LearnerSpec("KNN"), X, y)
    imp = feature_importance(m, X, y, seed=1)
    assert imp[0] > imp[1]


@pytest.mark.parametrize("kind,cls,params", [
    ("RF", RandomForestClassifier, {"n_trees": 20}),
    ("GBM", GradientBoostingClassifier, {"n_stages": 30}),
])
def test_tree_inference_matches_reference(kind, cls, params):
    X, y = noisy_data(150, 4, seed=8)
    spec = LearnerSpec(kind, params, 3)
    m = fit(spec, X, y, salt=1)
    ref = _sk_tree_estimator(spec, 1).fit(X, y)
    Q = np.random.default_rng(1).normal(size=(40, 4))
    assert np.allclose(predict_proba(m, Q), ref.predict_proba(Q)[:, 1], atol=1e-12, rtol=0)


def test_duplicated_rows_leave_tree_unchanged():
    X, y = noisy_data(100, 4, seed=9)
    spec = LearnerSpec("DTREE", {}, 1)
    a = fit(spec, X, y)
    b = fit(spec, np.vstack([X, X]), np.concatenate([y, y]))
    Q = np.random.default_rng(0).normal(size=(200, 4))
    assert np.array_equal(predict_proba(a, Q), predict_proba(b, Q))


def _staged_losses(m, X, y):
    s = m.state
    out = leaf_outputs(s, X)
    if m.spec.kind == "GBM":
        raw = s["gbm_init_raw"][0] + s["gbm_learning_rate"][0] * np.cumsum(out, axis=1)
        p = np.clip(expit(raw), 1e-15, 1 - 1e-15)
        return -np.mean(y[:, None] * np.log(p) + (1 - y[:, None]) * np.log(1 - p), axis=0)
    votes = 2.0 * out - 1.0
    F = np.cumsum(votes * s["ada_weights"], axis=1)
    return np.mean(np.exp(-(2 * y[:, None] - 1) * F / 2.0), axis=0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(["GBM", "ADABOOST"]))
def test_boosting_training_loss_non_increasing(seed, kind):
    X, y = noisy_data(80, 3, seed=seed)
    m = fit(LearnerSpec(kind, FAST[kind], seed), X, y)
    loss = _staged_losses(m, X, y)
    assert np.all(np.diff(loss) <= 1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        LearnerSpec("SVM_RBF")
    with pytest.raises(ValueError):
        LearnerSpec("RF", {"n_trees": 0})
    with pytest.raises(ValueError):
        LearnerSpec("GBM", {"learning_rate": 0.0})
    with pytest.raises(ValueError):
        LearnerSpec("KNN", {"k_neighbors": 0})
    with pytest.raises(ValueError):
        LearnerSpec("LR", {"bogus": 1})
    spec = LearnerSpec("RF", {"n_trees": 7}, 3)
    assert LearnerSpec.from_dict(spec.to_dict()) == spec
    assert spec.hyperparams["max_depth"] is None
    assert learners.default_spec("KNN").hyperparams["k_neighbors"] == 5
