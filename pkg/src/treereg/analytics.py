"""Model and dataset measurements: expected traversal depth, balanced
accuracy, class-imbalance chi-square, and size statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criterion import split_evenness
from .trainer import Forest, Tree, TreeNode, iter_nodes

__all__ = [
    "DepthReport",
    "ForestSizeReport",
    "balanced_accuracy",
    "chi_square",
    "expected_depth",
    "forest_expected_depth",
    "mean_split_evenness",
    "size_stats",
]


@dataclass(frozen=True)
class DepthReport:
    """Per-tree size and depth summary."""

    expected_depth: float
    leaf_count: int
    node_count: int
    max_path_depth: int


@dataclass(frozen=True)
class ForestSizeReport:
    per_tree: tuple[DepthReport, ...]
    forest_mean_expected_depth: float
    total_leaf_count: int
    total_node_count: int
    max_path_depth: int


def _leaf_depth_probs(node: TreeNode, depth: int, out: list[tuple[int, float]]) -> None:
    if node.kind == "leaf":
        out.append((depth, node.absolute_probability))
        return
    _leaf_depth_probs(node.left, depth + 1, out)
    _leaf_depth_probs(node.right, depth + 1, out)


def expected_depth(tree: Tree) -> float:
    """Mean traversal depth: sum over leaves of absolute_probability * depth.

    A single-leaf tree scores 0.  Raises when the leaf probabilities have
    drifted from a distribution (sum off 1 by more than 1e-6).
    """
    leaves: list[tuple[int, float]] = []
    _leaf_depth_probs(tree.root, 0, leaves)
    total = sum(p for _, p in leaves)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"leaf absolute probabilities sum to {total}, expected 1")
    return sum(p * d for d, p in leaves)


def forest_expected_depth(forest: Forest) -> float:
    """Unweighted mean of per-tree expected depths."""
    return sum(expected_depth(t) for t in forest.trees) / len(forest.trees)


def balanced_accuracy(predictions, truth) -> float:
    """Mean per-class recall over the classes present in truth."""
    preds = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(truth, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError(f"shape mismatch: predictions {preds.shape} vs truth {labels.shape}")
    if labels.size == 0:
        raise ValueError("truth is empty")
    recalls = []
    for cls in np.unique(labels):
        mask = labels == cls
        recalls.append(float((preds[mask] == cls).sum() / mask.sum()))
    return float(np.mean(recalls))


def chi_square(class_counts) -> float:
    """Goodness-of-fit statistic of class counts against the uniform
    distribution: sum of (observed - n/k)^2 / (n/k).  High values flag
    imbalance; 0 means perfectly even classes."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size < 2:
        raise ValueError("need counts for at least 2 classes")
    if (counts < 0).any():
        raise ValueError("counts must be non-negative")
    n = float(counts.sum())
    if n == 0:
        raise ValueError("all counts are zero")
    expected = n / counts.size
    return float(((counts - expected) ** 2 / expected).sum())


def _tree_report(tree: Tree) -> DepthReport:
    leaf_count = 0
    node_count = 0
    for node in iter_nodes(tree):
        node_count += 1
        if node.kind == "leaf":
            leaf_count += 1
    leaves: list[tuple[int, float]] = []
    _leaf_depth_probs(tree.root, 0, leaves)
    return DepthReport(
        expected_depth=expected_depth(tree),
        leaf_count=leaf_count,
        node_count=node_count,
        max_path_depth=max(d for d, _ in leaves),
    )


def size_stats(forest: Forest) -> ForestSizeReport:
    reports = tuple(_tree_report(t) for t in forest.trees)
    return ForestSizeReport(
        per_tree=reports,
        forest_mean_expected_depth=sum(r.expected_depth for r in reports) / len(reports),
        total_leaf_count=sum(r.leaf_count for r in reports),
        total_node_count=sum(r.node_count for r in reports),
        max_path_depth=max(r.max_path_depth for r in reports),
    )


def mean_split_evenness(forest: Forest) -> float:
    """Mean over all internal nodes of 1 - |n_left - n_right| / n.

    Falls toward 0 as training favours uneven splits; forests of bare leaves
    have no splits and raise.
    """
    values = []
    for tree in forest.trees:
        for node in iter_nodes(tree):
            if node.kind == "internal":
                values.append(split_evenness(node.left.n_samples, node.right.n_samples))
    if not values:
        raise ValueError("forest contains no internal nodes")
    return float(np.mean(values))
