"""Batch prediction with a saved stack."""

import csv
import io

import numpy as np

from ..dataset import load_schema, read_table
from ..metrics import evaluate
from ..stacking import predict_stack
from .persistence import load_model


def predict_batch(model_path, csv_path, schema_path, threshold=0.5, out=None):
    """Score every row of ``csv_path``.

    Returns the output text: a ``row,probability,label`` CSV, followed by a
    ``# metric,value`` footer when the input carries labels with both
    classes present. An input without data rows gives an empty output.
    """
    schema = load_schema(schema_path)
    X, y, resolved = read_table(csv_path, schema, require_labels=False)
    model = load_model(model_path, resolved)
    if X.shape[0] == 0:
        text = ""
    else:
        p = predict_stack(model, X)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "probability", "label"])
        for i, pi in enumerate(p):
            w.writerow([i, repr(float(pi)), int(pi > threshold)])
        if y is not None and np.unique(y).size == 2:
            rep = evaluate(y, p, threshold)
            for name in ("accuracy", "sensitivity", "precision", "specificity", "gmean", "f1", "roc_auc"):
                buf.write(f"# {name},{getattr(rep, name)!r}\n")
        text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text

