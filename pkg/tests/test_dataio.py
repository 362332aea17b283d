import numpy as np
import pytest

from nnlrs.dataio import (
    Dataset,
    MatrixFormatError,
    load_dataset,
    load_labels,
    load_matrix,
    read_header,
    save_labels,
    save_matrix,
)
from nnlrs.synth import make_subspaces


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_orientation(tmp_path):
    p = write(tmp_path, "m.csv", "1,2,3\n4,5,6\n")
    assert load_matrix(p).shape == (2, 3)
    M = load_matrix(p, rows_are_samples=True)
    assert M.shape == (3, 2)
    assert np.array_equal(M[:, 0], [1, 2, 3])


def test_ragged_names_line(tmp_path):
    p = write(tmp_path, "m.csv", "# header\n1,2,3\n\n4,5\n")
    with pytest.raises(MatrixFormatError, match=r"m\.csv:4: expected 3 fields, found 2"):
        load_matrix(p)


@pytest.mark.parametrize("bad", ["nan", "inf", "abc", ""])
def test_bad_entries_rejected(tmp_path, bad):
    p = write(tmp_path, "m.csv", f"1,2\n3,{bad}\n")
    with pytest.raises(MatrixFormatError, match=":2:"):
        load_matrix(p)


def test_empty_file(tmp_path):
    with pytest.raises(MatrixFormatError, match="no data"):
        load_matrix(write(tmp_path, "m.csv", "# only a header\n"))


def test_roundtrip_is_exact(tmp_path, rng):
    M = rng.standard_normal((4, 7)) * 10.0 ** rng.integers(-200, 200, (4, 7))
    p = tmp_path / "m.csv"
    save_matrix(p, M, header=["seed=1", "note"])
    assert read_header(p) == ["seed=1", "note"]
    assert np.array_equal(load_matrix(p), M)


def test_labels(tmp_path):
    p = tmp_path / "y.csv"
    save_labels(p, [0, 2, 1], header=["seed=3"])
    assert load_labels(p).tolist() == [0, 2, 1]
    with pytest.raises(MatrixFormatError, match="integers"):
        load_labels(write(tmp_path, "f.csv", "0\n1.5\n"))
    with pytest.raises(MatrixFormatError, match="one column"):
        load_labels(write(tmp_path, "w.csv", "0,1\n"))


def test_dataset_validation():
    with pytest.raises(ValueError, match="labels"):
        Dataset(X=np.ones((2, 3)), labels=[0, 1])
    with pytest.raises(ValueError, match="two samples"):
        Dataset(X=np.ones((2, 1)), labels=[0])
    with pytest.raises(ValueError, match="nonnegative"):
        Dataset(X=np.ones((2, 2)), labels=[0, -1])
    ds = Dataset(X=np.ones((2, 3)), labels=[0, 2, 1])
    assert ds.class_count == 3 and ds.n == 3


def test_load_dataset(tmp_path):
    save_matrix(tmp_path / "X.csv", np.arange(6.0).reshape(3, 2))
    save_labels(tmp_path / "y.csv", [1, 0, 1])
    ds = load_dataset(tmp_path / "X.csv", tmp_path / "y.csv", rows_are_samples=True, name="toy")
    assert ds.X.shape == (2, 3) and ds.name == "toy"


def test_synthetic_generator():
    a = make_subspaces(seed=5, corrupt_fraction=0.05)
    b = make_subspaces(seed=5, corrupt_fraction=0.05)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.corrupted, b.corrupted)
    assert a.X.shape == (20, 45) and len(a.corrupted) == 3
    assert np.array_equal(a.labels, np.repeat([0, 1, 2], 15))
    clean = make_subspaces(seed=5)
    for c, U in enumerate(clean.bases):
        block = clean.X[:, clean.labels == c]
        assert np.allclose(U @ (U.T @ block), block, atol=1e-12)
    with pytest.raises(ValueError):
        make_subspaces(n_subspaces=4, dim=6, ambient=20)
