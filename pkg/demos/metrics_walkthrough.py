"""Scores for a handful of hand-made predictions."""

import numpy as np

from phishstack.metrics import confusion, evaluate, roc_auc

y = np.array([1, 1, 1, 0, 0, 0, 0, 1])
p = np.array([0.9, 0.7, 0.4, 0.2, 0.6, 0.1, 0.3, 0.8])

cm = confusion(y, p)            # threshold 0.5, strict >
print(cm)
print("AUC", roc_auc(y, p))     # rank based, ties get half credit

rep = evaluate(y, p)
for name, value in rep.as_dict().items():
    print(f"{name:12s} {value}")

# one class only: scores with a zero denominator come back as 0.0 and are named here
print(evaluate(np.zeros(4, int), np.full(4, 0.1)).degenerate)
