"""Tabular dataset ingestion, label encoding, and seeded train/test splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "CsvFormatError",
    "Dataset",
    "SplitPair",
    "class_counts",
    "load_csv",
    "save_csv",
    "split",
    "split_repetitions",
]


class CsvFormatError(ValueError):
    """Raised when a CSV file violates the expected tabular format."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable classification dataset.

    ``features`` is an (n, p) float matrix, ``labels`` holds dense class
    indices in ``[0, n_classes)``, and ``class_names`` maps those indices back
    to the original label strings.  ``origins`` is an optional (n, 5) boolean
    matrix of mixture-origin flags carried by synthetic data.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    origins: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", _readonly(np.asarray(self.features, dtype=np.float64)))
        object.__setattr__(self, "labels", _readonly(np.asarray(self.labels, dtype=np.int64)))
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))
        if self.origins is not None:
            object.__setattr__(self, "origins", _readonly(np.asarray(self.origins, dtype=bool)))
        self._validate()

    def _validate(self) -> None:
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        n = self.features.shape[0]
        if n == 0:
            raise ValueError("dataset must contain at least one row")
        if self.labels.shape != (n,):
            raise ValueError(f"labels length {self.labels.shape} does not match {n} feature rows")
        if len(self.class_names) < 2:
            raise ValueError(f"need at least 2 classes, got {len(self.class_names)}")
        if self.labels.min() < 0 or self.labels.max() >= len(self.class_names):
            raise ValueError("label index out of range for class_names")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain NaN or Inf values")
        if self.origins is not None and self.origins.shape != (n, 5):
            raise ValueError(f"origins must have shape ({n}, 5), got {self.origins.shape}")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def take(self, indices) -> "Dataset":
        """Row subset (duplicates allowed, e.g. for bootstrap resampling)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            class_names=self.class_names,
            origins=None if self.origins is None else self.origins[idx],
        )


@dataclass(frozen=True)
class SplitPair:
    """One train/test partition of a dataset plus the seed that produced it."""

    train: Dataset
    test: Dataset
    seed: int
    repetition_index: int
    train_indices: np.ndarray
    test_indices: np.ndarray


def _resolve_label_column(header: list[str], label_column: str | int | None) -> int:
    if label_column is None:
        return len(header) - 1
    if isinstance(label_column, str):
        try:
            return header.index(label_column)
        except ValueError:
            raise CsvFormatError(f"label column {label_column!r} not found in header {header}") from None
    idx = int(label_column)
    if idx < 0:
        idx += len(header)
    if not 0 <= idx < len(header):
        raise CsvFormatError(f"label column index {label_column} out of range for {len(header)} columns")
    return idx


def load_csv(path: str | Path, label_column: str | int | None = None) -> Dataset:
    """Load a header-bearing CSV into a Dataset.

    The label column defaults to the last one and may be selected by name or
    index.  Labels are encoded as dense indices in order of first appearance;
    every other cell must parse as a finite real number.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise CsvFormatError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    label_idx = _resolve_label_column(header, label_column)
    feat_cols = [j for j in range(len(header)) if j != label_idx]

    features = np.empty((len(rows) - 1, len(feat_cols)), dtype=np.float64)
    raw_labels: list[str] = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for out_j, j in enumerate(feat_cols):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"{path}: non-numeric value {cell!r} at row {i}, column {header[j]!r}"
                ) from None
            if not math.isfinite(value):
                raise CsvFormatError(f"{path}: non-finite value {cell!r} at row {i}, column {header[j]!r}")
            features[i - 1, out_j] = value
        raw_labels.append(row[label_idx].strip())

    class_names: list[str] = []
    encoding: dict[str, int] = {}
    labels = np.empty(len(raw_labels), dtype=np.int64)
    for i, lab in enumerate(raw_labels):
        if lab not in encoding:
            encoding[lab] = len(class_names)
            class_names.append(lab)
        labels[i] = encoding[lab]
    if len(class_names) < 2:
        raise CsvFormatError(f"{path}: label column holds a single class {class_names[0]!r}")
    return Dataset(features=features, labels=labels, class_names=tuple(class_names))


def save_csv(
    ds: Dataset,
    path: str | Path,
    feature_names: list[str] | None = None,
    label_name: str = "label",
) -> None:
    """Write a Dataset in the shared CSV format (header row, label column last)."""
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(ds.n_features)]
    if len(feature_names) != ds.n_features:
        raise ValueError("feature_names length mismatch")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(feature_names) + [label_name])
        for i in range(ds.n_rows):
            writer.writerow([repr(float(v)) for v in ds.features[i]] + [ds.class_names[ds.labels[i]]])


def split(
    ds: Dataset,
    test_fraction: float = 0.25,
    seed: int = 0,
    repetition_index: int = 0,
) -> SplitPair:
    """Deterministic uniform train/test split. Same (ds, seed) gives the same split."""
    if ds.n_rows < 4:
        raise ValueError(f"need at least 4 rows to split, got {ds.n_rows}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = ds.n_rows
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n_test >= n:
        raise ValueError(f"test_fraction {test_fraction} produces an empty partition for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return SplitPair(
        train=ds.take(train_idx),
        test=ds.take(test_idx),
        seed=seed,
        repetition_index=repetition_index,
        train_indices=_readonly(train_idx),
        test_indices=_readonly(test_idx),
    )


def split_repetitions(
    ds: Dataset,
    n_repetitions: int = 8,
    test_fraction: float = 0.25,
    seed: int = 0,
) -> list[SplitPair]:
    """Independent splits seeded seed+0 .. seed+n_repetitions-1."""
    return [split(ds, test_fraction, seed + i, repetition_index=i) for i in range(n_repetitions)]


def class_counts(ds: Dataset) -> np.ndarray:
    """Per-class sample counts; always sums to the number of rows."""
    return np.bincount(ds.labels, minlength=ds.n_classes)
