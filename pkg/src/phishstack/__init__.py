"""Stacking-ensemble phishing website detection.

Per-classifier recursive feature elimination, leakage-free out-of-fold
probability stacking, greedy forward selection of base classifiers and an
MLP meta-learner, evaluated by nested stratified cross-validation.
"""

__version__ = "0.1.0"
