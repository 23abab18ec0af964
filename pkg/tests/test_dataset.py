"""CSV ingestion, label encoding, and split determinism."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treereg.dataset import (
    CsvFormatError,
    Dataset,
    class_counts,
    load_csv,
    save_csv,
    split,
    split_repetitions,
)


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


BASIC = "a,b,label\n1.0,2.0,yes\n3.5,-1.25,no\n0.0,4.0,yes\n"


def test_load_csv_basic(tmp_path):
    ds = load_csv(_write(tmp_path, BASIC))
    assert ds.n_rows == 3 and ds.n_features == 2 and ds.n_classes == 2
    assert ds.class_names == ("yes", "no")  # first-appearance order
    assert ds.labels.tolist() == [0, 1, 0]
    assert ds.features[1].tolist() == [3.5, -1.25]


def test_load_csv_label_column_by_name_and_index(tmp_path):
    text = "label,a,b\nx,1,2\ny,3,4\n"
    path = _write(tmp_path, text)
    by_name = load_csv(path, "label")
    by_index = load_csv(path, 0)
    by_negative = load_csv(path, -3)
    for ds in (by_name, by_index, by_negative):
        assert ds.class_names == ("x", "y")
        assert ds.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_load_csv_errors_name_row_and_column(tmp_path):
    path = _write(tmp_path, "a,b,label\n1.0,oops,yes\n2.0,3.0,no\n")
    with pytest.raises(CsvFormatError, match=r"row 1.*'b'"):
        load_csv(path)
    path = _write(tmp_path, "a,b,label\n1.0,2.0,yes\n2.0,inf,no\n")
    with pytest.raises(CsvFormatError, match=r"non-finite.*row 2"):
        load_csv(path)


def test_load_csv_rejects_ragged_single_class_and_empty(tmp_path):
    with pytest.raises(CsvFormatError, match="cells"):
        load_csv(_write(tmp_path, "a,b,label\n1.0,2.0\n"))
    with pytest.raises(CsvFormatError, match="single class"):
        load_csv(_write(tmp_path, "a,label\n1.0,same\n2.0,same\n"))
    with pytest.raises(CsvFormatError, match="header"):
        load_csv(_write(tmp_path, "a,b,label\n"))
    with pytest.raises(CsvFormatError, match="cannot read"):
        load_csv(tmp_path / "missing.csv")
    with pytest.raises(CsvFormatError, match="not found"):
        load_csv(_write(tmp_path, BASIC), "nope")
    with pytest.raises(CsvFormatError, match="out of range"):
        load_csv(_write(tmp_path, BASIC), 3)


def test_load_csv_skips_blank_lines(tmp_path):
    ds = load_csv(_write(tmp_path, "a,label\n\n1.0,x\n\n2.0,y\n\n"))
    assert ds.n_rows == 2


@settings(deadline=None, max_examples=40)
@given(
    st.lists(
        st.lists(st.floats(-1e15, 1e15, allow_nan=False), min_size=3, max_size=3),
        min_size=2, max_size=20,
    ),
    st.data(),
)
def test_save_load_round_trip(rows, data):
    n = len(rows)
    labels = data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    labels[0] = 0
    labels[-1] = 1 if n > 1 else 0
    ds = Dataset(
        features=np.array(rows),
        labels=np.array(labels, dtype=np.int64),
        class_names=("zero", "one", "two"),
    )
    import tempfile, pathlib
    with tempfile.TemporaryDirectory() as td:
        path = pathlib.Path(td) / "rt.csv"
        save_csv(ds, path)
        back = load_csv(path)
    # repr round-trip: every float survives bit for bit
    assert np.array_equal(back.features, ds.features)
    assert [back.class_names[v] for v in back.labels] == [ds.class_names[v] for v in ds.labels]


def test_save_csv_header_and_names(tmp_path):
    ds = Dataset(features=[[1.0, 2.0]], labels=[0], class_names=("a", "b"))
    path = tmp_path / "out.csv"
    save_csv(ds, path, feature_names=["u", "v"], label_name="cls")
    assert path.read_text().splitlines()[0] == "u,v,cls"
    with pytest.raises(ValueError, match="feature_names"):
        save_csv(ds, path, feature_names=["only-one"])


def test_dataset_validation():
    with pytest.raises(ValueError, match="2-D"):
        Dataset(features=np.zeros(3), labels=np.zeros(3, dtype=int), class_names=("a", "b"))
    with pytest.raises(ValueError, match="at least one row"):
        Dataset(features=np.zeros((0, 2)), labels=np.zeros(0, dtype=int), class_names=("a", "b"))
    with pytest.raises(ValueError, match="labels length"):
        Dataset(features=np.zeros((3, 2)), labels=np.zeros(2, dtype=int), class_names=("a", "b"))
    with pytest.raises(ValueError, match="2 classes"):
        Dataset(features=np.zeros((3, 2)), labels=np.zeros(3, dtype=int), class_names=("a",))
    with pytest.raises(ValueError, match="out of range"):
        Dataset(features=np.zeros((3, 2)), labels=np.array([0, 1, 2]), class_names=("a", "b"))
    with pytest.raises(ValueError, match="NaN"):
        Dataset(features=[[np.nan, 0.0]], labels=[0], class_names=("a", "b"))
    with pytest.raises(ValueError, match="origins"):
        Dataset(features=np.zeros((3, 2)), labels=np.array([0, 1, 0]),
                class_names=("a", "b"), origins=np.zeros((3, 4), dtype=bool))


def test_dataset_arrays_are_readonly():
    ds = Dataset(features=[[1.0], [2.0]], labels=[0, 1], class_names=("a", "b"))
    with pytest.raises(ValueError):
        ds.features[0, 0] = 9.0
    with pytest.raises(ValueError):
        ds.labels[0] = 1


def test_take_allows_duplicates():
    ds = Dataset(features=[[1.0], [2.0], [3.0]], labels=[0, 1, 0], class_names=("a", "b"))
    sub = ds.take([2, 2, 0])
    assert sub.features[:, 0].tolist() == [3.0, 3.0, 1.0]
    assert sub.labels.tolist() == [0, 0, 0]
    assert sub.class_names == ds.class_names


def test_split_partitions_and_determinism(rng):
    ds = Dataset(
        features=rng.normal(size=(40, 3)),
        labels=rng.integers(0, 2, size=40),
        class_names=("a", "b"),
    )
    pair = split(ds, test_fraction=0.25, seed=9)
    assert pair.test.n_rows == 10 and pair.train.n_rows == 30
    merged = sorted(pair.train_indices.tolist() + pair.test_indices.tolist())
    assert merged == list(range(40))
    assert list(pair.train_indices) == sorted(pair.train_indices)
    again = split(ds, test_fraction=0.25, seed=9)
    assert np.array_equal(pair.test_indices, again.test_indices)
    other = split(ds, test_fraction=0.25, seed=10)
    assert not np.array_equal(pair.test_indices, other.test_indices)


def test_split_rejects_degenerate_requests():
    ds = Dataset(features=np.zeros((3, 1)), labels=[0, 1, 0], class_names=("a", "b"))
    with pytest.raises(ValueError, match="at least 4"):
        split(ds)
    big = Dataset(features=np.zeros((10, 1)), labels=[0, 1] * 5, class_names=("a", "b"))
    with pytest.raises(ValueError, match="test_fraction"):
        split(big, test_fraction=0.0)
    with pytest.raises(ValueError, match="empty partition"):
        split(big, test_fraction=0.01)


def test_split_repetitions_seeds_and_indices(rng):
    ds = Dataset(
        features=rng.normal(size=(24, 2)),
        labels=rng.integers(0, 2, size=24),
        class_names=("a", "b"),
    )
    pairs = split_repetitions(ds, n_repetitions=4, test_fraction=0.25, seed=100)
    assert [p.seed for p in pairs] == [100, 101, 102, 103]
    assert [p.repetition_index for p in pairs] == [0, 1, 2, 3]
    assert len({tuple(p.test_indices.tolist()) for p in pairs}) > 1


def test_class_counts():
    ds = Dataset(features=np.zeros((5, 1)), labels=[0, 2, 2, 0, 2], class_names=("a", "b", "c"))
    assert class_counts(ds).tolist() == [2, 0, 3]
