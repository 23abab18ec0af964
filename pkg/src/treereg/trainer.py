"""CART tree growth with the regularized split score, forest assembly, and
forest (de)serialization.

Every node carries its training-sample histogram plus two probabilities:
branch_probability (fraction of the parent's samples routed here) and
absolute_probability (product of branch probabilities down from the root).
Those annotations drive the expected-depth analysis, the cache-aware layouts,
and nothing during prediction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criterion import CriterionParams, best_split
from .dataset import Dataset

__all__ = [
    "Forest",
    "SCHEMA_VERSION",
    "TrainParams",
    "Tree",
    "TreeNode",
    "default_max_features_grid",
    "dict_to_forest",
    "forest_to_dict",
    "grow_tree",
    "iter_nodes",
    "load_forest",
    "predict",
    "predict_batch",
    "resolve_max_features",
    "save_forest",
    "train_forest",
]

SCHEMA_VERSION = 1

_U64 = (1 << 64) - 1


@dataclass(eq=False)
class TreeNode:
    """One tree node; identity comparison so nodes can key layout maps."""

    kind: str  # "internal" or "leaf"
    n_samples: int
    class_histogram: np.ndarray
    branch_probability: float
    absolute_probability: float
    feature_index: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    predicted_class: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


@dataclass(frozen=True)
class Tree:
    root: TreeNode
    n_features: int
    n_classes: int


@dataclass(frozen=True)
class TrainParams:
    """Training configuration.

    max_features is the size of the uniform random feature subset drawn at
    each node; None means all features.  reg_lambda weights the uneven-split
    penalty; 0 gives plain CART.
    """

    max_depth: int = 20
    n_trees: int = 1
    max_features: int | None = None
    reg_lambda: float = 0.0
    bootstrap: bool = True
    seed: int = 0
    min_samples_split: int = 2

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError(f"max_features must be >= 1, got {self.max_features}")
        if not self.reg_lambda >= 0.0:
            raise ValueError(f"reg_lambda must be >= 0, got {self.reg_lambda}")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    params: TrainParams
    class_names: tuple[str, ...]
    n_features: int

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def default_max_features_grid(p: int) -> list[int]:
    """Feature-subset sizes half-sqrt, sqrt, twice-sqrt, and all, clamped to [1, p]."""
    if p < 1:
        raise ValueError("need at least one feature")
    root = math.isqrt(p)
    grid = {max(1, root // 2), max(1, root), min(p, 2 * root), p}
    return sorted(grid)


def resolve_max_features(spec: str | int | None, p: int) -> int | None:
    """Map a CLI-style max_features token to a subset size.

    Accepts an integer (string or int), or one of half-sqrt / sqrt /
    twice-sqrt / all.  None passes through (meaning all features).
    """
    if spec is None:
        return None
    if isinstance(spec, int):
        value = spec
    else:
        token = spec.strip().lower()
        named = {
            "half-sqrt": max(1, math.isqrt(p) // 2),
            "sqrt": max(1, math.isqrt(p)),
            "twice-sqrt": min(p, 2 * math.isqrt(p)),
            "all": p,
        }
        if token in named:
            return named[token]
        try:
            value = int(token)
        except ValueError:
            raise ValueError(
                f"max_features must be an integer or one of {sorted(named)}, got {spec!r}"
            ) from None
    if not 1 <= value <= p:
        raise ValueError(f"max_features must lie in [1, {p}], got {value}")
    return value


# ---------------------------------------------------------------- growth


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: TrainParams,
    crit: CriterionParams,
    rng: np.random.Generator,
    depth: int,
    branch_probability: float,
    absolute_probability: float,
) -> TreeNode:
    n = y.shape[0]
    hist = np.bincount(y, minlength=n_classes)

    def leaf() -> TreeNode:
        return TreeNode(
            kind="leaf",
            n_samples=n,
            class_histogram=hist,
            branch_probability=branch_probability,
            absolute_probability=absolute_probability,
            predicted_class=int(np.argmax(hist)),
        )

    if depth >= params.max_depth or n < params.min_samples_split or (hist > 0).sum() < 2:
        return leaf()

    p = X.shape[1]
    mf = p if params.max_features is None else min(params.max_features, p)
    if mf >= p:
        subset = None  # all features, no rng draw
    else:
        subset = np.sort(rng.choice(p, size=mf, replace=False))

    found = best_split(X, y, n_classes, subset, crit)
    if found is None:
        return leaf()
    if crit.reg_lambda > 0.0:
        # A split must beat the node it replaces: when the penalty pushes the
        # best score above the node's own impurity, splitting would make the
        # criterion worse, so the node terminates.  This is what shortens
        # high-probability paths as reg_lambda grows.  Skipped at lambda 0,
        # where the weighted child Gini can never exceed the parent's.
        parent_gini = 1.0 - float(((hist / n) ** 2).sum())
        if found.score > parent_gini:
            return leaf()

    mask = X[:, found.feature_index] <= found.threshold
    frac_left = found.n_left / n
    frac_right = found.n_right / n
    node = TreeNode(
        kind="internal",
        n_samples=n,
        class_histogram=hist,
        branch_probability=branch_probability,
        absolute_probability=absolute_probability,
        feature_index=found.feature_index,
        threshold=found.threshold,
    )
    node.left = _grow(
        X[mask], y[mask], n_classes, params, crit, rng,
        depth + 1, frac_left, absolute_probability * frac_left,
    )
    node.right = _grow(
        X[~mask], y[~mask], n_classes, params, crit, rng,
        depth + 1, frac_right, absolute_probability * frac_right,
    )
    return node


def grow_tree(train: Dataset, params: TrainParams, rng: np.random.Generator) -> Tree:
    """Grow one tree on the given sample.

    At each node a uniform random subset of max_features features is offered
    to the split search.  A node becomes a leaf at max_depth, below
    min_samples_split samples, on purity, when no feature admits a split, or
    (with reg_lambda > 0) when the best penalized score exceeds the node's own
    Gini, meaning no split improves the regularized criterion.  Root depth is
    0, so max_depth = 1 yields at most a stump.
    """
    if params.max_features is not None and params.max_features > train.n_features:
        raise ValueError(
            f"max_features {params.max_features} exceeds feature count {train.n_features}"
        )
    crit = CriterionParams(reg_lambda=params.reg_lambda)
    root = _grow(
        train.features, train.labels, train.n_classes, params, crit, rng,
        depth=0, branch_probability=1.0, absolute_probability=1.0,
    )
    return Tree(root=root, n_features=train.n_features, n_classes=train.n_classes)


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    # Per-tree stream derived from (seed, index): trees are reproducible
    # independent of how training is scheduled across workers.
    return np.random.default_rng(np.random.SeedSequence([seed & _U64, tree_index]))


def _grow_one(train: Dataset, params: TrainParams, tree_index: int) -> Tree:
    rng = _tree_rng(params.seed, tree_index)
    sample = train
    if params.bootstrap:
        indices = rng.integers(0, train.n_rows, size=train.n_rows)
        sample = train.take(indices)
    return grow_tree(sample, params, rng)


def train_forest(train: Dataset, params: TrainParams, jobs: int = 1) -> Forest:
    """Train n_trees trees, each on its own bootstrap resample when enabled.

    Tree t draws from a stream seeded by (seed, t), so the forest is
    bit-identical for any worker count.
    """
    if jobs == 1 or params.n_trees == 1:
        trees = [_grow_one(train, params, t) for t in range(params.n_trees)]
    else:
        from joblib import Parallel, delayed

        trees = Parallel(n_jobs=jobs)(
            delayed(_grow_one)(train, params, t) for t in range(params.n_trees)
        )
    return Forest(
        trees=tuple(trees),
        params=params,
        class_names=train.class_names,
        n_features=train.n_features,
    )


# ---------------------------------------------------------------- prediction


def _route(node: TreeNode, row) -> int:
    while node.kind != "leaf":
        node = node.left if row[node.feature_index] <= node.threshold else node.right
    return node.predicted_class


def predict(forest: Forest, row) -> int:
    """Majority vote over trees; vote ties resolve to the lowest class index."""
    values = np.asarray(row, dtype=np.float64)
    if values.shape != (forest.n_features,):
        raise ValueError(f"row must have {forest.n_features} features, got shape {values.shape}")
    cells = values.tolist()
    votes = [0] * forest.n_classes
    for tree in forest.trees:
        votes[_route(tree.root, cells)] += 1
    best = 0
    for c in range(1, forest.n_classes):
        if votes[c] > votes[best]:
            best = c
    return best


def predict_batch(forest: Forest, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise ValueError(f"X must be (n, {forest.n_features}), got shape {X.shape}")
    n_classes = forest.n_classes
    roots = [tree.root for tree in forest.trees]
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, row in enumerate(X):
        cells = row.tolist()
        votes = [0] * n_classes
        for root in roots:
            votes[_route(root, cells)] += 1
        best = 0
        for c in range(1, n_classes):
            if votes[c] > votes[best]:
                best = c
        out[i] = best
    return out


def iter_nodes(tree: Tree):
    """Preorder node iterator (parent, then left subtree, then right)."""
    stack = [tree.root]
    while stack:
        node = stack.pop()
        yield node
        if node.kind == "internal":
            stack.append(node.right)
            stack.append(node.left)


# ---------------------------------------------------------------- serialization


def _node_to_dict(node: TreeNode) -> dict:
    out = {
        "kind": node.kind,
        "n_samples": int(node.n_samples),
        "class_histogram": [int(c) for c in node.class_histogram],
        "branch_probability": float(node.branch_probability),
        "absolute_probability": float(node.absolute_probability),
    }
    if node.kind == "internal":
        out["feature_index"] = int(node.feature_index)
        out["threshold"] = float(node.threshold)
    else:
        out["predicted_class"] = int(node.predicted_class)
    return out


def forest_to_dict(forest: Forest) -> dict:
    """JSON-ready document: params, class names, and per-tree preorder node lists."""
    trees = []
    for tree in forest.trees:
        trees.append([_node_to_dict(node) for node in iter_nodes(tree)])
    return {
        "schema_version": SCHEMA_VERSION,
        "params": {
            "max_depth": forest.params.max_depth,
            "n_trees": forest.params.n_trees,
            "max_features": forest.params.max_features,
            "reg_lambda": forest.params.reg_lambda,
            "bootstrap": forest.params.bootstrap,
            "seed": forest.params.seed,
            "min_samples_split": forest.params.min_samples_split,
        },
        "class_names": list(forest.class_names),
        "n_features": forest.n_features,
        "n_classes": forest.n_classes,
        "trees": trees,
    }


def _node_from_list(nodes: list[dict], cursor: list[int]) -> TreeNode:
    raw = nodes[cursor[0]]
    cursor[0] += 1
    node = TreeNode(
        kind=raw["kind"],
        n_samples=int(raw["n_samples"]),
        class_histogram=np.asarray(raw["class_histogram"], dtype=np.int64),
        branch_probability=float(raw["branch_probability"]),
        absolute_probability=float(raw["absolute_probability"]),
    )
    if node.kind == "internal":
        node.feature_index = int(raw["feature_index"])
        node.threshold = float(raw["threshold"])
        node.left = _node_from_list(nodes, cursor)
        node.right = _node_from_list(nodes, cursor)
    elif node.kind == "leaf":
        node.predicted_class = int(raw["predicted_class"])
    else:
        raise ValueError(f"unknown node kind {node.kind!r}")
    return node


def dict_to_forest(doc: dict) -> Forest:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    params = TrainParams(**doc["params"])
    n_features = int(doc["n_features"])
    n_classes = int(doc["n_classes"])
    trees = []
    for nodes in doc["trees"]:
        cursor = [0]
        root = _node_from_list(nodes, cursor)
        if cursor[0] != len(nodes):
            raise ValueError("trailing nodes after tree reconstruction")
        trees.append(Tree(root=root, n_features=n_features, n_classes=n_classes))
    return Forest(
        trees=tuple(trees),
        params=params,
        class_names=tuple(doc["class_names"]),
        n_features=n_features,
    )


def save_forest(forest: Forest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(forest_to_dict(forest), indent=2, sort_keys=True) + "\n")


def load_forest(path: str | Path) -> Forest:
    return dict_to_forest(json.loads(Path(path).read_text()))
