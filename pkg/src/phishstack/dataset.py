"""Loading, validation and stratified partitioning of tabular phishing data.

Labels are always encoded with ``1 = phishing`` and ``0 = legitimate``. The raw
encoding differs between sources, so the mapping is part of the
:class:`DatasetSchema` rather than hard-coded.
"""

import csv
import hashlib
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import kvfile
from .errors import (
    EmptyDatasetError,
    FoldIndexOutOfRangeError,
    MissingColumnError,
    NonNumericCellError,
    SchemaError,
    TooFewSamplesPerClassError,
    UnknownLabelValueError,
)

WILDCARD = "*"


@dataclass(frozen=True)
class DatasetSchema:
    """Column layout and label encoding of one CSV source.

    ``feature_columns`` may be ``None`` (written ``*`` in a schema file), in
    which case every header column except the label and ``exclude_columns``
    is a feature; :meth:`resolve` pins the list against a concrete header.
    """

    feature_columns: Optional[tuple]
    label_column: str
    positive_label_value: str
    negative_label_value: str
    exclude_columns: tuple = ()
    expected_rows: Optional[int] = None
    expected_positive: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        if self.feature_columns is not None:
            cols = tuple(self.feature_columns)
            object.__setattr__(self, "feature_columns", cols)
            if not cols:
                raise SchemaError("feature_columns is empty")
            if len(set(cols)) != len(cols):
                dup = sorted({c for c in cols if cols.count(c) > 1})
                raise SchemaError(f"duplicate feature columns: {dup}")
            if self.label_column in cols:
                raise SchemaError(f"label column {self.label_column!r} listed as a feature")
        object.__setattr__(self, "exclude_columns", tuple(self.exclude_columns))
        object.__setattr__(self, "positive_label_value", str(self.positive_label_value).strip())
        object.__setattr__(self, "negative_label_value", str(self.negative_label_value).strip())
        if _same_label(self.positive_label_value, self.negative_label_value):
            raise SchemaError("positive and negative label values coincide")

    @property
    def is_resolved(self):
        return self.feature_columns is not None

    def resolve(self, header):
        if self.is_resolved:
            return self
        skip = set(self.exclude_columns) | {self.label_column}
        cols = tuple(c for c in header if c not in skip)
        return replace(self, feature_columns=cols)

    def schema_hash(self):
        """SHA-256 over the resolved column list and label encoding."""
        if not self.is_resolved:
            raise SchemaError("schema hash needs a resolved column list")
        canon = "\x1f".join([
            "\x1e".join(self.feature_columns),
            self.label_column,
            _canonical_label(self.positive_label_value),
            _canonical_label(self.negative_label_value),
        ])
        return hashlib.sha256(canon.encode("utf-8")).digest()

    def to_text(self):
        items = [("name", self.name), ("label_column", self.label_column),
                 ("positive_label", self.positive_label_value),
                 ("negative_label", self.negative_label_value)]
        items.append(("feature_columns", list(self.feature_columns) if self.is_resolved else WILDCARD))
        if self.exclude_columns:
            items.append(("exclude_columns", list(self.exclude_columns)))
        if self.expected_rows is not None:
            items.append(("expected_rows", self.expected_rows))
        if self.expected_positive is not None:
            items.append(("expected_positive", self.expected_positive))
        return kvfile.format_kv(items)


def parse_schema(text, source="<string>"):
    kv = kvfile.parse_kv(text, source)
    try:
        label = kv["label_column"]
        pos = kv["positive_label"]
        neg = kv["negative_label"]
        raw_cols = kv["feature_columns"]
    except KeyError as exc:
        raise SchemaError(f"{source}: missing key {exc.args[0]!r}") from None
    cols = None if raw_cols.strip() == WILDCARD else tuple(kvfile.split_list(raw_cols))
    return DatasetSchema(
        feature_columns=cols,
        label_column=label,
        positive_label_value=pos,
        negative_label_value=neg,
        exclude_columns=tuple(kvfile.split_list(kv.get("exclude_columns", ""))),
        expected_rows=int(kv["expected_rows"]) if kv.get("expected_rows") else None,
        expected_positive=int(kv["expected_positive"]) if kv.get("expected_positive") else None,
        name=kv.get("name", ""),
    )


def load_schema(path):
    path = Path(path)
    return parse_schema(path.read_text(encoding="utf-8"), source=path)


def _canonical_label(value):
    try:
        f = float(value)
    except ValueError:
        return value.strip()
    return repr(f)


def _same_label(a, b):
    return _canonical_label(a) == _canonical_label(b)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix with binary labels (1 = phishing)."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    provenance: str = ""
    schema: Optional[DatasetSchema] = field(default=None, repr=False)
    # original row numbers, carried through take() for leakage audits
    row_ids: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels).astype(np.int64).ravel()
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        names = tuple(self.feature_names)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if X.shape[1] != len(names):
            raise ValueError(f"{X.shape[1]} feature columns but {len(names)} names")
        if not np.all(np.isfinite(X)):
            r, c = np.argwhere(~np.isfinite(X))[0]
            raise NonNumericCellError(int(r), names[c], X[r, c])
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0/1")
        ids = np.arange(y.shape[0]) if self.row_ids is None else np.array(self.row_ids, dtype=np.int64)
        if ids.shape != y.shape:
            raise ValueError("row_ids length does not match labels")
        for arr in (X, y, ids):
            arr.flags.writeable = False
        object.__setattr__(self, "row_ids", ids)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def n_positive(self):
        return int(self.labels.sum())

    def take(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.features[rows], self.labels[rows], self.feature_names,
                       self.provenance, self.schema, self.row_ids[rows])

    def select_columns(self, cols):
        cols = np.asarray(cols, dtype=np.int64)
        return Dataset(self.features[:, cols], self.labels,
                       tuple(self.feature_names[c] for c in cols), self.provenance, self.schema,
                       self.row_ids)

    def equals(self, other):
        return (self.feature_names == other.feature_names
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))


def read_table(path, schema, require_labels=True):
    """Parse a CSV into ``(X, y_or_None, resolved_schema)``.

    ``y`` is ``None`` only when ``require_labels`` is false and the label
    column is absent.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        rows = [r for r in reader if r and any(cell.strip() for cell in r)]

    schema = schema.resolve(header)
    position = {name: i for i, name in enumerate(header)}
    for col in schema.feature_columns:
        if col not in position:
            raise MissingColumnError(col, path)
    has_label = schema.label_column in position
    if require_labels and not has_label:
        raise MissingColumnError(schema.label_column, path)

    n = len(rows)
    X = np.empty((n, len(schema.feature_columns)), dtype=np.float64)
    for j, col in enumerate(schema.feature_columns):
        ci = position[col]
        cells = [r[ci] if ci < len(r) else "" for r in rows]
        try:
            X[:, j] = np.asarray(cells, dtype=np.float64) if n else X[:, j]
        except ValueError:
            _raise_bad_cell(cells, col)
        if not np.all(np.isfinite(X[:, j])):
            i = int(np.flatnonzero(~np.isfinite(X[:, j]))[0])
            raise NonNumericCellError(i + 1, col, cells[i])

    y = None
    if has_label:
        li = position[schema.label_column]
        pos = _canonical_label(schema.positive_label_value)
        neg = _canonical_label(schema.negative_label_value)
        y = np.empty(n, dtype=np.int64)
        for i, r in enumerate(rows):
            raw = r[li] if li < len(r) else ""
            c = _canonical_label(raw)
            if c == pos:
                y[i] = 1
            elif c == neg:
                y[i] = 0
            else:
                raise UnknownLabelValueError(raw, row=i + 1)
    return X, y, schema


def _raise_bad_cell(cells, col):
    for i, cell in enumerate(cells):
        try:
            float(cell)
        except ValueError:
            # row numbers are 1-based data rows (header excluded)
            raise NonNumericCellError(i + 1, col, cell) from None
    raise AssertionError("unreachable")


def load_csv(path, schema):
    """Load a labelled CSV into a :class:`Dataset` following ``schema``.

    Rows keep file order and columns follow ``schema.feature_columns``. When
    the schema carries expected row or phishing counts, a mismatch warns
    (it usually means the label mapping is inverted).
    """
    X, y, resolved = read_table(path, schema, require_labels=True)
    if X.shape[0] == 0:
        raise EmptyDatasetError(f"{path}: no data rows")
    if y.min() == y.max():
        raise TooFewSamplesPerClassError(f"{path}: only one class present")
    if resolved.expected_rows is not None and resolved.expected_rows != len(y):
        warnings.warn(f"{path}: expected {resolved.expected_rows} rows, found {len(y)}")
    if resolved.expected_positive is not None and resolved.expected_positive != int(y.sum()):
        warnings.warn(
            f"{path}: expected {resolved.expected_positive} phishing rows, found {int(y.sum())}; "
            "check positive_label in the schema"
        )
    return Dataset(X, y, resolved.feature_columns, provenance=str(path), schema=resolved)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignment: np.ndarray
    seed: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        a.flags.writeable = False
        object.__setattr__(self, "assignment", a)

    def test_indices(self, fold):
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold):
        return np.flatnonzero(self.assignment != fold)

    def fold_sizes(self):
        return np.bincount(self.assignment, minlength=self.k)


def stratified_kfold(ds, k, seed):
    """Stratified fold assignment, deterministic in ``(labels, k, seed)``.

    Each class is shuffled and dealt round-robin; the negative class picks up
    where the positives stopped, so total fold sizes differ by at most one as
    well as the per-class counts.
    """
    labels = ds.labels if isinstance(ds, Dataset) else np.asarray(ds)
    return stratified_assignment(labels, k, seed)


def stratified_assignment(labels, k, seed):
    labels = np.asarray(labels)
    n = labels.shape[0]
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise TooFewSamplesPerClassError(f"{n} samples cannot fill {k} folds")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5F01D]))
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        assignment[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return FoldPlan(k=k, assignment=assignment, seed=int(seed))


def split_by_fold(ds, plan, test_fold):
    if not 0 <= test_fold < plan.k:
        raise FoldIndexOutOfRangeError(f"fold {test_fold} outside [0, {plan.k})")
    if plan.assignment.shape[0] != ds.n:
        raise ValueError("fold plan does not match dataset size")
    return ds.take(plan.train_indices(test_fold)), ds.take(plan.test_indices(test_fold))


def derive_seed(seed, *salt):
    """Independent child seed for a named sub-task (fold, learner, ...)."""
    words = [int(seed) & 0xFFFFFFFF]
    for s in salt:
        if isinstance(s, str):
            words.extend(s.encode("utf-8"))
        else:
            words.append(int(s) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1)[0])
