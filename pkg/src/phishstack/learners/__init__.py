"""Pool of base classifiers behind one train / predict-probability / importance interface."""

from .base import (
    DEFAULT_HYPERPARAMS,
    KINDS,
    LearnerSpec,
    TrainedLearner,
    default_spec,
    feature_importance,
    fit,
    permutation_importance,
    predict_proba,
)

__all__ = [
    "DEFAULT_HYPERPARAMS", "KINDS", "LearnerSpec", "TrainedLearner", "default_spec",
    "feature_importance", "fit", "permutation_importance", "predict_proba",
]
