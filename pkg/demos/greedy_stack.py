"""Out-of-fold meta-features, greedy base selection, then a stacked model."""

import numpy as np

from phishstack.dataset import derive_seed, split_by_fold, stratified_kfold
from phishstack.feature_selection import FeatureMask
from phishstack.learners import LearnerSpec
from phishstack.meta_mlp import MlpConfig
from phishstack.stacking import audit_leakage, fit_stack, greedy_select, predict_stack
from phishstack.synthetic import SELECTION_KINDS, make_selection_benchmark

ds = make_selection_benchmark(n=1000)
plan = stratified_kfold(ds, 5, derive_seed(0, "outer"))
train, test = split_by_fold(ds, plan, 0)

pool = [(LearnerSpec(k, {}, 0), FeatureMask.full(k, ds.d)) for k in SELECTION_KINDS]
meta_cfg = MlpConfig(seed=0)
g = greedy_select(train, pool, k=5, seed=0, meta_config=meta_cfg)

for (spec, _), acc in zip(pool, g.standalone_accuracy):
    print(f"{spec.kind:6s} oof accuracy {acc:.4f}")
print("picked", [s.kind for s, _ in g.selected], "holdout history", g.score_history)
print("leaks", audit_leakage(g.meta))   # every OOF column came from a fit without that row

oof = g.meta.columns(g.indices)
stack = fit_stack(train, list(g.selected), 5, 0, meta_cfg, oof=oof)
p = predict_stack(stack, test.features)
print("stacked test accuracy", np.mean((p > 0.5) == (test.labels == 1)))
