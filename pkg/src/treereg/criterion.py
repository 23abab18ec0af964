"""Split scoring: Gini impurity plus a penalty on even sample splits.

The regularizer rewards splits that send most samples one way.  For a split
placing n_left and n_right samples in the children it adds

    lambda * (1 - |n_left - n_right| / (n_left + n_right))

to each child's impurity, so a perfectly even split pays the full lambda and a
maximally uneven one pays nothing.  Grown with lambda > 0, trees concentrate
probability mass on short paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CriterionParams",
    "SplitCandidate",
    "best_split",
    "gini",
    "regularized_impurity",
    "split_evenness",
]


@dataclass(frozen=True)
class CriterionParams:
    """Split-scoring knobs. reg_lambda = 0 recovers plain Gini scoring."""

    reg_lambda: float = 0.0

    def __post_init__(self) -> None:
        if not self.reg_lambda >= 0.0:
            raise ValueError(f"reg_lambda must be >= 0, got {self.reg_lambda}")


def gini(proportions) -> float:
    """Gini impurity 1 - sum(p_i^2) of a class-proportion vector."""
    p = np.asarray(proportions, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("proportions must be a non-empty 1-D vector")
    if (p < 0.0).any():
        raise ValueError("proportions must be non-negative")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"proportions must sum to 1, got {total}")
    return 1.0 - float((p * p).sum())


def split_evenness(n_left: int, n_right: int) -> float:
    """1 - |n_left - n_right| / n: 1.0 for a 50/50 split, -> 0 as it skews."""
    if n_left < 0 or n_right < 0:
        raise ValueError("sample counts must be non-negative")
    n = n_left + n_right
    if n == 0:
        raise ValueError("split has no samples")
    return 1.0 - abs(n_left - n_right) / n


def regularized_impurity(gini_value: float, evenness: float, reg_lambda: float) -> float:
    """Gini plus the weighted evenness penalty. Bit-equal to gini at lambda 0."""
    return gini_value + reg_lambda * evenness


@dataclass(frozen=True)
class SplitCandidate:
    """Winning split of one node: threshold test `x[feature] <= threshold`."""

    feature_index: int
    threshold: float
    n_left: int
    n_right: int
    left_class_counts: np.ndarray
    right_class_counts: np.ndarray
    score: float


def _feature_best(
    column: np.ndarray, y: np.ndarray, n_classes: int, reg_lambda: float
) -> tuple[float, float, int, np.ndarray] | None:
    """Best threshold for one feature column, or None when it has one value.

    Returns (score, threshold, n_left, left_class_counts).  Candidate
    thresholds are midpoints of consecutive distinct sorted values; the
    lowest-threshold candidate wins score ties because argmin keeps the first
    minimum.
    """
    n = column.shape[0]
    order = np.argsort(column, kind="stable")
    sv = column[order]
    cuts = np.nonzero(sv[:-1] != sv[1:])[0]
    if cuts.size == 0:
        return None

    # Midpoint thresholds. When rounding pushes a midpoint up to the larger
    # value (adjacent floats) or out of range (overflow), fall back to the
    # lower value so `x <= threshold` routes exactly n_left rows left.
    lo = sv[cuts]
    hi = sv[cuts + 1]
    mid = (lo + hi) / 2.0
    thresholds = np.where(np.isfinite(mid) & (mid < hi), mid, lo)

    # Prefix class counts over the sorted order: left child of cut i holds
    # rows 0..i, so its histogram is the cumulative one-hot sum at i.
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), y[order]] = 1
    prefix = np.cumsum(onehot, axis=0)

    left_counts = prefix[cuts]
    total = prefix[-1]
    right_counts = total[np.newaxis, :] - left_counts
    n_left = cuts + 1
    n_right = n - n_left

    gini_left = 1.0 - ((left_counts / n_left[:, np.newaxis]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((right_counts / n_right[:, np.newaxis]) ** 2).sum(axis=1)
    evenness = 1.0 - np.abs(n_left - n_right) / n
    scores = (n_left / n) * gini_left + (n_right / n) * gini_right + reg_lambda * evenness

    best = int(np.argmin(scores))
    return float(scores[best]), float(thresholds[best]), int(n_left[best]), left_counts[best].copy()


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    feature_indices=None,
    params: CriterionParams = CriterionParams(),
) -> SplitCandidate | None:
    """Exhaustive best split of (X, y) over the given feature subset.

    Every midpoint between consecutive distinct values of each candidate
    feature is scored as

        (n_left / n) * gini(left) + (n_right / n) * gini(right)
        + reg_lambda * evenness

    and the minimum wins.  Ties go to the lowest feature index, then the
    lowest threshold.  Returns None when no feature admits a split.  The
    winning test is `x <= threshold` goes left, and the threshold is placed
    so that routing reproduces n_left exactly even for adjacent floats.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError("y length does not match X")
    if n < 2:
        return None
    if feature_indices is None:
        candidates = range(p)
    else:
        candidates = [int(j) for j in feature_indices]
        if any(not 0 <= j < p for j in candidates):
            raise ValueError("feature index out of range")

    best: tuple[float, float, int, np.ndarray] | None = None
    best_feature = -1
    for j in candidates:
        found = _feature_best(X[:, j], y, n_classes, params.reg_lambda)
        if found is None:
            continue
        # Strict < keeps the earlier (lower-index) feature on score ties.
        if best is None or found[0] < best[0]:
            best = found
            best_feature = j
    if best is None:
        return None

    score, threshold, n_left, left_counts = best
    total = np.bincount(y, minlength=n_classes)
    return SplitCandidate(
        feature_index=best_feature,
        threshold=threshold,
        n_left=n_left,
        n_right=n - n_left,
        left_class_counts=left_counts,
        right_class_counts=total - left_counts,
        score=score,
    )
