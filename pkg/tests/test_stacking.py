import numpy as np
import pytest

from phishstack.errors import DimensionMismatchError, LeakageError
from phishstack.feature_selection import FeatureMask
from phishstack.learners import LearnerSpec, fit, predict_proba
from phishstack.meta_mlp import MlpConfig
from phishstack.stacking import (
    GREEDY_EPSILON, FitRecord, MetaFeatures, audit_leakage, base_matrix, fit_stack, greedy_select,
    oof_probabilities, predict_stack,
)
from phishstack.synthetic import make_tabular

from conftest import make_ds

FAST_META = MlpConfig(hidden_layers=(8,), max_epochs=60, seed=0)


def noisy(n=300, noise=0.1, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (X[:, 0] > 0).astype(int)
    flip = rng.uniform(size=n) < noise
    y[flip] = 1 - y[flip]
    return make_ds(X, y)


def one_nn():
    return LearnerSpec("KNN", {"k_neighbors": 1})


def test_memorizer_oof_below_resubstitution():
    ds = noisy()
    spec = one_nn()
    meta = oof_probabilities(ds, [(spec, FeatureMask.full("KNN", 3))], 10, seed=0)
    resub = np.mean((predict_proba(fit(spec, ds.features, ds.labels), ds.features) > 0.5) == (ds.labels == 1))
    oof = np.mean((meta.matrix[:, 0] > 0.5) == (ds.labels == 1))
    assert resub == 1.0
    assert oof < resub
    assert audit_leakage(meta) == []


def test_oof_shape_and_bounds():
    ds = noisy(100)
    pool = [(LearnerSpec(k), FeatureMask.full(k, 3)) for k in ("LR", "NB", "DTREE")]
    meta = oof_probabilities(ds, pool, 10, seed=1)
    assert meta.matrix.shape == (100, 3)
    assert np.all((meta.matrix >= 0) & (meta.matrix <= 1))
    assert meta.column_specs == tuple(pool)


def test_canary_row_provenance():
    ds = noisy(100)
    X = ds.features.copy()
    X[37] = [50.0, -50.0, 50.0]  # unique outlier
    ds = make_ds(X, ds.labels)
    meta = oof_probabilities(ds, [(LearnerSpec("LR"), FeatureMask.full("LR", 3))], 5, seed=0)
    (rec,) = [r for r in meta.fit_log if 37 in r.predicted_rows]
    assert 37 not in rec.train_rows
    assert meta.fold_provenance[37] == rec.fold


def test_audit_catches_planted_leak():
    rows = np.arange(6)
    good = MetaFeatures(np.zeros((6, 1)), (None,), np.array([0, 0, 0, 1, 1, 1]),
                        (FitRecord(0, 0, rows[3:], rows[:3]), FitRecord(0, 1, rows[:3], rows[3:])))
    assert audit_leakage(good) == []
    bad = MetaFeatures(good.matrix, good.column_specs, good.fold_provenance,
                       (FitRecord(0, 0, rows, rows[:3]), FitRecord(0, 1, rows[:3], rows[3:])))
    assert {(0, 0), (0, 1), (0, 2)} <= set(audit_leakage(bad))
    gap = MetaFeatures(good.matrix, good.column_specs, good.fold_provenance, good.fit_log[:1])
    assert len(audit_leakage(gap)) == 3


def test_leak_is_a_hard_error(monkeypatch):
    import phishstack.stacking as stacking
    monkeypatch.setattr(stacking, "audit_leakage", lambda meta: [(0, 1)])
    with pytest.raises(LeakageError):
        oof_probabilities(noisy(60), [(LearnerSpec("LR"), FeatureMask.full("LR", 3))], 3, seed=0)


def test_greedy_stops_after_perfect_candidate():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(120, 2))
    y = (X[:, 0] > 0).astype(int)
    ds = make_ds(X, y)
    cands = [(LearnerSpec("DTREE"), FeatureMask("DTREE", (0,), 1.0)),
             (LearnerSpec("NB"), FeatureMask("NB", (1,), 0.5))]
    g = greedy_select(ds, cands, 5, seed=0, meta_config=FAST_META)
    assert [s.kind for s, _ in g.selected] == ["DTREE"]
    assert g.standalone_accuracy[0] == 1.0
    assert len(g.score_history) == 1


def test_greedy_history_strictly_increasing():
    ds = make_tabular(300, 6, seed=3)
    cands = [(LearnerSpec(k), FeatureMask.full(k, 6)) for k in ("LR", "NB", "KNN", "DTREE")]
    g = greedy_select(ds, cands, 5, seed=0, meta_config=FAST_META)
    assert all(b - a > GREEDY_EPSILON for a, b in zip(g.score_history[:-1], g.score_history[1:]))
    assert len(set(g.indices)) == len(g.indices) >= 1
    # first pick is the best standalone candidate, earliest kind on ties
    best = max(g.standalone_accuracy)
    assert g.indices[0] == g.standalone_accuracy.index(best)


def test_fit_stack_single_base_and_column_order():
    ds = make_tabular(200, 6, seed=1)
    sel = [(LearnerSpec("LR"), FeatureMask("LR", (0, 2, 3), 0.8))]
    m = fit_stack(ds, sel, 4, seed=0, meta_config=FAST_META)
    assert m.meta.input_width == 1 and m.kinds == ("LR",)

    sel = [(LearnerSpec("NB"), FeatureMask("NB", (1, 4), 0.8)), (LearnerSpec("LR"), FeatureMask("LR", (0, 5), 0.8))]
    m = fit_stack(ds, sel, 4, seed=0, meta_config=FAST_META)
    Z = base_matrix(m, ds.features)
    for j, (_, mask, model) in enumerate(m.bases):
        assert np.array_equal(Z[:, j], predict_proba(model, ds.features[:, list(mask.selected)]))
    assert [s.kind for s, _, _ in m.bases] == ["NB", "LR"]


def test_predict_stack_contract():
    ds = make_tabular(200, 6, seed=2)
    sel = [(LearnerSpec("LR"), FeatureMask.full("LR", 6)), (LearnerSpec("DTREE"), FeatureMask.full("DTREE", 6))]
    m = fit_stack(ds, sel, 4, seed=0, meta_config=FAST_META)
    assert predict_stack(m, np.zeros((0, 6))).shape == (0,)
    row = ds.features[:1]
    p = predict_stack(m, np.vstack([row, row, row]))
    assert p[0] == p[1] == p[2]
    assert np.all((p > 0) & (p < 1))
    with pytest.raises(DimensionMismatchError):
        predict_stack(m, np.zeros((2, 5)))
    a = fit_stack(ds, sel, 4, seed=0, meta_config=FAST_META)
    assert np.array_equal(predict_stack(a, ds.features), predict_stack(m, ds.features))


def test_confident_bases_give_positive_output():
    # separable meta-features: a single column that is high exactly for positives
    rng = np.random.default_rng(0)
    n = 200
    y = rng.integers(0, 2, size=n)
    X = np.column_stack([y + 0.05 * rng.normal(size=n), rng.normal(size=n)])
    ds = make_ds(X, y)
    sel = [(LearnerSpec("DTREE"), FeatureMask("DTREE", (0,), 1.0)), (LearnerSpec("RF", {"n_trees": 10}),
                                                                      FeatureMask("RF", (0,), 1.0))]
    m = fit_stack(ds, sel, 5, seed=0, meta_config=MlpConfig(hidden_layers=(8,), max_epochs=200, seed=0))
    query = np.array([[1.0, 0.0]])
    assert np.all(base_matrix(m, query) >= 0.99)
    assert predict_stack(m, query)[0] > 0.5


def test_fit_stack_rejects_empty():
    with pytest.raises(ValueError):
        fit_stack(noisy(40), [], 3, seed=0)
