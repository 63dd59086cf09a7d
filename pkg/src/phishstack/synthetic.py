"""Small synthetic phishing-like datasets for smoke runs, tests and demos."""

from importlib import resources

import numpy as np

from .dataset import Dataset, DatasetSchema, load_csv, load_schema

BUNDLED_CSV = "synthetic_200x6.csv"
BUNDLED_SCHEMA = "synthetic_200x6.schema"


def make_tabular(n=200, d=6, seed=0, label_noise=0.05):
    """Mixed ternary / continuous features with an interaction-driven label.

    Half of the columns take values in {-1, 0, 1} like the UCI phishing
    features, the rest are continuous. The first three columns carry signal.
    """
    rng = np.random.default_rng(seed)
    X = np.empty((n, d))
    n_tern = (d + 1) // 2
    X[:, :n_tern] = rng.choice([-1.0, 0.0, 1.0], size=(n, n_tern), p=[0.35, 0.2, 0.45])
    X[:, n_tern:] = np.round(rng.normal(size=(n, d - n_tern)), 3)
    score = 1.4 * X[:, 0] + 0.9 * X[:, min(1, d - 1)] * (X[:, min(2, d - 1)] > 0)
    if d > n_tern:
        score = score + 0.8 * X[:, n_tern]
    y = (score + 0.3 * rng.normal(size=n) > 0.2).astype(np.int64)
    flip = rng.uniform(size=n) < label_noise
    y[flip] = 1 - y[flip]
    names = tuple(f"f{i}" for i in range(d))
    return Dataset(X, y, names, provenance=f"synthetic(n={n}, d={d}, seed={seed})")


def synthetic_schema(d=6):
    return DatasetSchema(tuple(f"f{i}" for i in range(d)), "label", "1", "0", name="synthetic")


def write_csv(ds, path, label_column="label"):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(ds.feature_names + (label_column,)) + "\n")
        for row, lab in zip(ds.features, ds.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(lab)}\n")


def bundled_paths():
    """Paths of the shipped 200x6 CSV and its schema file."""
    base = resources.files("phishstack") / "data"
    return base / BUNDLED_CSV, base / BUNDLED_SCHEMA


def load_bundled():
    csv_path, schema_path = bundled_paths()
    return load_csv(csv_path, load_schema(schema_path))


def make_rfecv_benchmark(n=1000, seed=0, label_noise=0.02):
    """Ten features, three of which decide the label through an and/or rule.

    Columns 3-5 are ternary noise, 6-9 continuous noise. Small enough that
    every one of the 1023 feature subsets can be scored exhaustively.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 10))
    X[:, 3:6] = np.round(X[:, 3:6])
    y = ((X[:, 0] > 0.2) | ((X[:, 1] > 0.0) & (X[:, 2] < 0.3))).astype(np.int64)
    flip = rng.uniform(size=n) < label_noise
    y[flip] = 1 - y[flip]
    return Dataset(X, y, tuple(f"f{i}" for i in range(10)), provenance=f"rfecv-benchmark(n={n}, seed={seed})")


SELECTION_KINDS = ("LR", "NB", "KNN", "DTREE")


def make_selection_benchmark(n=2000, seed=0):
    """6-feature set used with :data:`SELECTION_KINDS` as a 4-candidate pool.

    2000 rows keep the greedy holdout slice at 400 rows (0.25 pp per row).
    """
    return make_tabular(n, 6, seed=seed, label_noise=0.05)
