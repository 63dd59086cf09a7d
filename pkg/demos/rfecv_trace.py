"""Recursive elimination on a table where only features 0-2 matter."""

from phishstack.feature_selection import apply_mask, rfecv
from phishstack.learners import LearnerSpec
from phishstack.synthetic import make_rfecv_benchmark

ds = make_rfecv_benchmark(n=600)
mask, trace = rfecv(ds, LearnerSpec("DTREE", {}, 0), k=5, seed=0)

print(trace.to_text())
print("kept", mask.selected, f"cv accuracy {mask.cv_score_at_selection:.4f}")
print(apply_mask(ds, mask).features.shape)
