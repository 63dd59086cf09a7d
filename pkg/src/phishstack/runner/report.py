"""Result tables and run manifests.

``result.json`` holds everything a run produced (timings included). The
tables and ``manifest.json`` are derived from it and are byte-identical for
two runs with the same config, seed and data.
"""

import csv
import io
import json
import platform
from pathlib import Path

import numpy as np
import scipy
import sklearn

from .. import __version__
from ..metrics import TABLE_HEADER
from .experiment import ExperimentResult

RESULT_FILE = "result.json"


def write_result(res, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / RESULT_FILE
    path.write_text(json.dumps(res.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_result(path):
    path = Path(path)
    if path.is_dir():
        path = path / RESULT_FILE
    return ExperimentResult.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def candidate_table(res):
    rows = [list(TABLE_HEADER)]
    for kind, rep in res.candidate_summary.items():
        rows.append([kind] + rep.table_row())
    return rows


def stacked_table(res):
    rows = [list(TABLE_HEADER)]
    if res.stacked_summary is not None:
        label = "Stacked MLP (" + "+".join(_modal_bases(res)) + ")"
        rows.append([label] + res.stacked_summary.table_row())
    return rows


def fold_table(res):
    rows = [["Fold"] + list(TABLE_HEADER[1:]) + ["Bases", "MLP"]]
    for fr in res.folds:
        if fr.stacked_report is None:
            rows.append([str(fr.fold)] + ["error"] * (len(TABLE_HEADER) - 1) + ["", ""])
            continue
        rows.append([str(fr.fold)] + fr.stacked_report.table_row()
                    + ["+".join(fr.selected), "-".join(str(w) for w in fr.mlp_choice)])
    return rows


def _modal_bases(res):
    counts = {}
    for fr in res.folds:
        if fr.selected:
            key = tuple(fr.selected)
            counts[key] = counts.get(key, 0) + 1
    if not counts:
        return []
    return list(max(sorted(counts), key=lambda k: counts[k]))


def masks_text(res):
    lines = []
    for fr in res.folds:
        for kind in sorted(fr.masks):
            lines.append(f"fold={fr.fold} {fr.masks[kind].to_text()}")
    return "\n".join(lines) + ("\n" if lines else "")


def manifest(res):
    return {
        "phishstack": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "seed": res.config["seed"],
        "config_hash": res.config_hash,
        "schema_hash": res.schema_hash,
        "dataset": res.dataset,
        "n_rows": res.n_rows,
        "n_features": res.n_features,
        "outer_k": res.config["outer_k"],
        "inner_k": res.config["inner_k"],
        "candidates": res.config["candidates"],
        "modal_mlp": res.modal_mlp,
        "folds_failed": [fr.fold for fr in res.folds if fr.error],
    }


def emit_report(res, out_dir):
    """Write the tables, mask listing and manifest; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "candidates.csv": _csv_text(candidate_table(res)),
        "stacked.csv": _csv_text(stacked_table(res)),
        "folds.csv": _csv_text(fold_table(res)),
        "masks.txt": masks_text(res),
        "manifest.json": json.dumps(manifest(res), indent=1, sort_keys=True) + "\n",
    }
    paths = {}
    for name, text in files.items():
        p = out / name
        p.write_text(text, encoding="utf-8")
        paths[name] = p
    return paths
