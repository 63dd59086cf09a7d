"""Every base classifier on the bundled 200x6 table, same split."""

import numpy as np

from phishstack import learners
from phishstack.dataset import derive_seed, split_by_fold, stratified_kfold
from phishstack.synthetic import load_bundled

ds = load_bundled()
plan = stratified_kfold(ds, 5, derive_seed(0, "demo"))
train, test = split_by_fold(ds, plan, 0)
print(train.n, "train rows,", test.n, "test rows")

for kind in learners.KINDS:
    m = learners.fit(learners.default_spec(kind), train.features, train.labels)
    p = learners.predict_proba(m, test.features)
    acc = np.mean((p > 0.5) == (test.labels == 1))
    imp = learners.feature_importance(m, train.features, train.labels, seed=0)
    print(f"{kind:12s} acc {acc:.3f}  top feature {int(np.argmax(imp))}")
