import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishstack.dataset import (
    DatasetSchema, derive_seed, load_csv, load_schema, parse_schema, read_table, split_by_fold,
    stratified_kfold,
)
from phishstack.errors import (
    EmptyDatasetError, FoldIndexOutOfRangeError, MissingColumnError, NonNumericCellError, SchemaError,
    TooFewSamplesPerClassError, UnknownLabelValueError,
)
from phishstack.runner.config import bundled_schema

from conftest import make_ds

SCHEMA = DatasetSchema(("a", "b"), "Result", "-1", "1")


def test_three_rows_mapped(write_text):
    p = write_text("t.csv", "b,a,Result\n1,2,-1\n3,4,1\n5,6,-1\n")
    ds = load_csv(p, SCHEMA)
    assert ds.labels.tolist() == [1, 0, 1]
    # column order follows the schema, not the file
    assert ds.features.tolist() == [[2, 1], [4, 3], [6, 5]]
    assert ds.feature_names == ("a", "b")


def test_bad_cell_located(write_text):
    p = write_text("t.csv", "a,b,Result\n1,2,-1\n3,abc,1\n")
    with pytest.raises(NonNumericCellError) as err:
        load_csv(p, SCHEMA)
    assert err.value.row == 2 and err.value.column == "b" and err.value.value == "abc"


def test_missing_column_named(write_text):
    p = write_text("t.csv", "a,Result\n1,-1\n2,1\n")
    with pytest.raises(MissingColumnError) as err:
        load_csv(p, SCHEMA)
    assert err.value.column == "b"


def test_unknown_label(write_text):
    p = write_text("t.csv", "a,b,Result\n1,2,-1\n3,4,0\n")
    with pytest.raises(UnknownLabelValueError) as err:
        load_csv(p, SCHEMA)
    assert err.value.value == "0"


def test_empty(write_text):
    with pytest.raises(EmptyDatasetError):
        load_csv(write_text("t.csv", "a,b,Result\n"), SCHEMA)
    with pytest.raises(EmptyDatasetError):
        load_csv(write_text("u.csv", ""), SCHEMA)


def test_single_class_rejected(write_text):
    with pytest.raises(TooFewSamplesPerClassError):
        load_csv(write_text("t.csv", "a,b,Result\n1,2,1\n3,4,1\n"), SCHEMA)


def test_float_label_encoding(write_text):
    p = write_text("t.csv", "a,b,Result\n1,2,-1.0\n3,4,1.0\n")
    assert load_csv(p, SCHEMA).labels.tolist() == [1, 0]


def test_string_labels_and_wildcard(write_text):
    schema = parse_schema("label_column = status\npositive_label = phishing\nnegative_label = legitimate\n"
                          "feature_columns = *\nexclude_columns = url\n")
    p = write_text("t.csv", "url,x,y,status\nhttp://a,1,2,phishing\nhttp://b,3,4,legitimate\n")
    ds = load_csv(p, schema)
    assert ds.feature_names == ("x", "y")
    assert ds.labels.tolist() == [1, 0]
    assert ds.schema.is_resolved


def test_count_mismatch_warns(write_text):
    schema = DatasetSchema(("a",), "y", "1", "0", expected_rows=3, expected_positive=2)
    with pytest.warns(UserWarning, match="phishing rows"):
        load_csv(write_text("t.csv", "a,y\n1,1\n2,0\n3,0\n"), schema)


def test_schema_invariants():
    with pytest.raises(SchemaError):
        DatasetSchema((), "y", "1", "0")
    with pytest.raises(SchemaError):
        DatasetSchema(("a", "a"), "y", "1", "0")
    with pytest.raises(SchemaError):
        DatasetSchema(("a", "y"), "y", "1", "0")
    with pytest.raises(SchemaError):
        DatasetSchema(("a",), "y", "1", "1.0")
    with pytest.raises(SchemaError):
        parse_schema("label_column = y\n")


def test_schema_text_round_trip():
    s = DatasetSchema(("a", "b"), "Result", "-1", "1", expected_rows=10, name="x")
    assert parse_schema(s.to_text()) == s


def test_bundled_schemas_load():
    d1 = load_schema(bundled_schema("dataset1"))
    assert len(d1.feature_columns) == 30
    assert d1.positive_label_value == "-1" and d1.expected_positive == 4898
    for name in ("dataset2", "dataset3", "dataset4"):
        assert load_schema(bundled_schema(name)).label_column


def test_schema_hashes_differ():
    h1 = load_schema(bundled_schema("dataset1")).schema_hash()
    h2 = DatasetSchema(("a",), "Result", "-1", "1").schema_hash()
    assert len(h1) == 32 and h1 != h2


def test_loading_is_deterministic(write_text):
    p = write_text("t.csv", "a,b,Result\n1.5,2,-1\n3,4,1\n")
    assert load_csv(p, SCHEMA).equals(load_csv(p, SCHEMA))


def test_dataset_rejects_non_finite():
    with pytest.raises(NonNumericCellError):
        make_ds([[1.0], [np.nan]], [0, 1])
    with pytest.raises(ValueError):
        make_ds([[1.0], [2.0]], [0, 2])


def test_dataset_is_read_only():
    ds = make_ds([[1.0], [2.0]], [0, 1])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5


def test_read_table_without_labels(write_text):
    X, y, _ = read_table(write_text("t.csv", "a,b\n1,2\n"), SCHEMA, require_labels=False)
    assert y is None and X.shape == (1, 2)


def test_folds_even_counts():
    y = np.array([1] * 60 + [0] * 40)
    plan = stratified_kfold(y, 10, seed=3)
    for f in range(10):
        idx = plan.test_indices(f)
        assert y[idx].sum() == 6 and (y[idx] == 0).sum() == 4


def test_folds_one_each():
    y = np.array([1] * 5 + [0] * 5)
    plan = stratified_kfold(y, 10, seed=0)
    assert plan.fold_sizes().tolist() == [1] * 10


def test_dataset1_sized_folds():
    # 11055 rows with 4898 phishing, as in the UCI table
    y = np.zeros(11055, dtype=int)
    y[:4898] = 1
    sizes = stratified_kfold(y, 10, seed=0).fold_sizes()
    assert set(sizes.tolist()) <= {1105, 1106}
    assert sizes.sum() == 11055
    ds = make_ds(np.zeros((11055, 1)), y)
    train, test = split_by_fold(ds, stratified_kfold(ds, 10, 0), 0)
    assert train.n in (9949, 9950) and test.n in (1105, 1106)


def test_split_two_halves():
    ds = make_ds([[0.0], [1.0], [2.0], [3.0]], [1, 1, 0, 0])
    plan = stratified_kfold(ds, 2, seed=9)
    for f in range(2):
        train, test = split_by_fold(ds, plan, f)
        assert test.n == 2 and test.n_positive == 1 and train.n_positive == 1
        assert train.feature_names == test.feature_names == ds.feature_names


def test_fold_index_out_of_range():
    ds = make_ds(np.zeros((20, 1)), [0, 1] * 10)
    with pytest.raises(FoldIndexOutOfRangeError):
        split_by_fold(ds, stratified_kfold(ds, 10, 0), 10)


def test_fold_preconditions():
    with pytest.raises(ValueError):
        stratified_kfold(np.array([0, 1, 0, 1]), 1, 0)
    with pytest.raises(TooFewSamplesPerClassError):
        stratified_kfold(np.array([0, 1, 0]), 4, 0)


def test_derive_seed_salts():
    assert derive_seed(0, "a") == derive_seed(0, "a")
    assert derive_seed(0, "a") != derive_seed(0, "b")
    assert derive_seed(0, 1) != derive_seed(1, 1)


@settings(max_examples=100, deadline=None)
@given(n_pos=st.integers(1, 80), n_neg=st.integers(1, 80), k=st.integers(2, 12), seed=st.integers(0, 2**31))
def test_fold_plan_properties(n_pos, n_neg, k, seed):
    if n_pos + n_neg < k:
        return
    y = np.array([1] * n_pos + [0] * n_neg)
    np.random.default_rng(seed).shuffle(y)
    plan = stratified_kfold(y, k, seed)
    sizes = plan.fold_sizes()
    assert sizes.min() >= 1 and sizes.max() - sizes.min() <= 1
    pos = np.bincount(plan.assignment[y == 1], minlength=k)
    assert pos.max() - pos.min() <= 1
    assert np.array_equal(plan.assignment, stratified_kfold(y, k, seed).assignment)

    ds = make_ds(np.arange(y.size, dtype=float)[:, None], y)
    seen = np.concatenate([split_by_fold(ds, plan, f)[1].row_ids for f in range(k)])
    assert np.array_equal(np.sort(seen), np.arange(y.size))
    for f in range(k):
        train, test = split_by_fold(ds, plan, f)
        assert not set(train.row_ids) & set(test.row_ids)
        assert train.n + test.n == ds.n
