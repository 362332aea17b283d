"""Delimited-text matrix and label files.

Format: UTF-8, comma-separated, one matrix row per line. Lines starting
with ``#`` are header/comment lines and blank lines are ignored.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["MatrixFormatError", "Dataset", "load_matrix", "save_matrix", "load_labels", "save_labels", "load_dataset", "read_header"]


class MatrixFormatError(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D (features x samples)")
        if self.labels.shape != (self.X.shape[1],):
            raise ValueError(f"{len(self.labels)} labels for {self.X.shape[1]} samples")
        if self.X.shape[1] < 2:
            raise ValueError("need at least two samples")
        if self.labels.min() < 0:
            raise ValueError("labels must be nonnegative integers")

    @property
    def class_count(self):
        return int(self.labels.max()) + 1

    @property
    def n(self):
        return self.X.shape[1]


def read_header(path):
    """``#``-prefixed lines at the top of a file, with the marker stripped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            out.append(line[1:].strip())
    return out


def _parse_rows(path):
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            try:
                vals = [float(f) for f in fields]
            except ValueError as exc:
                raise MatrixFormatError(f"{path}:{lineno}: cannot parse number ({exc})") from None
            if any(not math.isfinite(v) for v in vals):
                raise MatrixFormatError(f"{path}:{lineno}: non-finite entry")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise MatrixFormatError(f"{path}:{lineno}: expected {width} fields, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise MatrixFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def load_matrix(path, rows_are_samples=False):
    """Load a matrix file with samples as columns.

    With ``rows_are_samples=True`` the file is read as one sample per line
    and transposed.
    """
    M = _parse_rows(path)
    return M.T.copy() if rows_are_samples else M


def save_matrix(path, M, header=()):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_labels(path):
    M = _parse_rows(path)
    if M.shape[1] != 1:
        raise MatrixFormatError(f"{path}: label file must have one column, found {M.shape[1]}")
    v = M[:, 0]
    if not np.all(v == np.round(v)):
        raise MatrixFormatError(f"{path}: labels must be integers")
    return v.astype(int)


def save_labels(path, labels, header=()):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for v in labels:
            fh.write(f"{int(v)}\n")


def load_dataset(matrix_path, labels_path, rows_are_samples=False, name=None):
    X = load_matrix(matrix_path, rows_are_samples=rows_are_samples)
    y = load_labels(labels_path)
    return Dataset(X=X, labels=y, name=name or str(matrix_path))
