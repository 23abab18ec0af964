"""Flat, cache-aware node orderings for probability-annotated trees.

Two strategies:

* ``bfs_default``: plain level order, the baseline array layout.
* ``probability_greedy``: starting from the root, repeatedly descend into the
  child whose subtree holds the most probable leaf (ties left), emitting the
  chain contiguously; the not-taken subtrees are kept back and laid out
  afterwards in descending order of their root's absolute probability (ties:
  the leftmost/uppermost subtree first).  The most probable root-to-leaf path
  therefore always occupies indices 0, 1, 2, ...
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .trainer import Forest, Tree, TreeNode, forest_to_dict, iter_nodes

__all__ = [
    "FlatNode",
    "NodeArray",
    "STRATEGIES",
    "array_predict",
    "flatten",
    "forest_layout_document",
    "hot_path",
    "to_tree",
]

STRATEGIES = ("bfs_default", "probability_greedy")


@dataclass(frozen=True)
class FlatNode:
    """One record of a flattened tree; child indices are -1 on leaves."""

    feature_index: int
    threshold: float
    left_index: int
    right_index: int
    leaf_flag: bool
    class_index: int
    absolute_probability: float


@dataclass(frozen=True)
class NodeArray:
    nodes: tuple[FlatNode, ...]
    strategy: str
    n_features: int
    n_classes: int


def _preorder_index(tree: Tree) -> dict[int, int]:
    return {id(node): i for i, node in enumerate(iter_nodes(tree))}


def _subtree_max_leaf_prob(root: TreeNode) -> dict[int, float]:
    """Max absolute leaf probability within each node's subtree."""
    out: dict[int, float] = {}
    stack: list[tuple[TreeNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if node.kind == "leaf":
            out[id(node)] = node.absolute_probability
        elif not expanded:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))
        else:
            out[id(node)] = max(out[id(node.left)], out[id(node.right)])
    return out


def _order_bfs(tree: Tree) -> list[TreeNode]:
    order = []
    queue = deque([tree.root])
    while queue:
        node = queue.popleft()
        order.append(node)
        if node.kind == "internal":
            queue.append(node.left)
            queue.append(node.right)
    return order


def _order_greedy(tree: Tree) -> list[TreeNode]:
    subtree_max = _subtree_max_leaf_prob(tree.root)
    pre = _preorder_index(tree)
    order: list[TreeNode] = []
    # Deferred subtrees keyed by (-absolute_probability, preorder position):
    # highest probability first, ties resolved toward the upper-left subtree.
    pool: list[tuple[float, int, TreeNode]] = [(-1.0, 0, tree.root)]
    while pool:
        _, _, node = heapq.heappop(pool)
        while node.kind == "internal":
            order.append(node)
            if subtree_max[id(node.left)] >= subtree_max[id(node.right)]:
                chain, deferred = node.left, node.right
            else:
                chain, deferred = node.right, node.left
            heapq.heappush(pool, (-deferred.absolute_probability, pre[id(deferred)], deferred))
            node = chain
        order.append(node)
    return order


def flatten(tree: Tree, strategy: str = "bfs_default") -> NodeArray:
    """Flatten a tree into a NodeArray in the strategy's order; index 0 is the root."""
    if strategy == "bfs_default":
        order = _order_bfs(tree)
    elif strategy == "probability_greedy":
        order = _order_greedy(tree)
    else:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    position = {id(node): i for i, node in enumerate(order)}
    records = []
    for node in order:
        if node.kind == "leaf":
            records.append(FlatNode(
                feature_index=-1,
                threshold=0.0,
                left_index=-1,
                right_index=-1,
                leaf_flag=True,
                class_index=int(node.predicted_class),
                absolute_probability=float(node.absolute_probability),
            ))
        else:
            records.append(FlatNode(
                feature_index=int(node.feature_index),
                threshold=float(node.threshold),
                left_index=position[id(node.left)],
                right_index=position[id(node.right)],
                leaf_flag=False,
                class_index=-1,
                absolute_probability=float(node.absolute_probability),
            ))
    return NodeArray(
        nodes=tuple(records),
        strategy=strategy,
        n_features=tree.n_features,
        n_classes=tree.n_classes,
    )


def _array_subtree_max(array: NodeArray) -> list[float]:
    nodes = array.nodes
    out = [0.0] * len(nodes)
    stack: list[tuple[int, bool]] = [(0, False)]
    while stack:
        i, expanded = stack.pop()
        node = nodes[i]
        if node.leaf_flag:
            out[i] = node.absolute_probability
        elif not expanded:
            stack.append((i, True))
            stack.append((node.right_index, False))
            stack.append((node.left_index, False))
        else:
            out[i] = max(out[node.left_index], out[node.right_index])
    return out


def hot_path(array: NodeArray) -> list[int]:
    """Array indices of the root-to-leaf path with maximal absolute
    probability; probability ties follow the left child."""
    subtree_max = _array_subtree_max(array)
    path = [0]
    node = array.nodes[0]
    while not node.leaf_flag:
        if subtree_max[node.left_index] >= subtree_max[node.right_index]:
            path.append(node.left_index)
        else:
            path.append(node.right_index)
        node = array.nodes[path[-1]]
    return path


def to_tree(array: NodeArray) -> Tree:
    """Rebuild a Tree from a NodeArray.

    Sample counts and histograms are not stored in flat records, so the
    rebuilt nodes carry zero counts; probabilities and routing structure are
    exact.  Branch probabilities are recovered as child/parent absolute
    probability ratios.
    """
    nodes = array.nodes
    zeros = np.zeros(array.n_classes, dtype=np.int64)

    def build(i: int, branch_probability: float) -> TreeNode:
        rec = nodes[i]
        if rec.leaf_flag:
            return TreeNode(
                kind="leaf",
                n_samples=0,
                class_histogram=zeros.copy(),
                branch_probability=branch_probability,
                absolute_probability=rec.absolute_probability,
                predicted_class=rec.class_index,
            )
        node = TreeNode(
            kind="internal",
            n_samples=0,
            class_histogram=zeros.copy(),
            branch_probability=branch_probability,
            absolute_probability=rec.absolute_probability,
            feature_index=rec.feature_index,
            threshold=rec.threshold,
        )
        parent_p = rec.absolute_probability
        for attr, child in (("left", rec.left_index), ("right", rec.right_index)):
            child_p = nodes[child].absolute_probability
            setattr(node, attr, build(child, child_p / parent_p if parent_p > 0 else 0.0))
        return node

    return Tree(root=build(0, 1.0), n_features=array.n_features, n_classes=array.n_classes)


def array_predict(array: NodeArray, row) -> int:
    """Route one feature row through the flat records; equals tree routing."""
    cells = np.asarray(row, dtype=np.float64)
    if cells.shape != (array.n_features,):
        raise ValueError(f"row must have {array.n_features} features, got shape {cells.shape}")
    values = cells.tolist()
    node = array.nodes[0]
    while not node.leaf_flag:
        nxt = node.left_index if values[node.feature_index] <= node.threshold else node.right_index
        node = array.nodes[nxt]
    return node.class_index


def forest_layout_document(forest: Forest, strategy: str) -> dict:
    """Forest JSON document plus per-tree layout orders.

    layout_orders[t][i] is the preorder index (position in the serialized
    node list) of the node placed at flat position i under the strategy.
    """
    doc = forest_to_dict(forest)
    orders = []
    for tree in forest.trees:
        pre = _preorder_index(tree)
        if strategy == "bfs_default":
            flat = _order_bfs(tree)
        elif strategy == "probability_greedy":
            flat = _order_greedy(tree)
        else:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
        orders.append([pre[id(node)] for node in flat])
    doc["layout_strategy"] = strategy
    doc["layout_orders"] = orders
    return doc
