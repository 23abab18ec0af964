"""Flat layouts: BFS order, greedy hot-path placement, bijection round-trips,
and traversal equivalence with the pointer tree."""

import numpy as np
import pytest

from treereg.layout import (
    STRATEGIES,
    array_predict,
    flatten,
    forest_layout_document,
    hot_path,
    to_tree,
)
from treereg.trainer import TrainParams, Tree, TreeNode, _route, iter_nodes, train_forest

from conftest import random_dataset
from oracles import random_probability_tree


def _leaf(prob, branch, cls=0):
    return TreeNode(kind="leaf", n_samples=0, class_histogram=np.zeros(2, dtype=np.int64),
                    branch_probability=branch, absolute_probability=prob, predicted_class=cls)


def _internal(prob, branch, feature=0, threshold=0.0):
    return TreeNode(kind="internal", n_samples=0, class_histogram=np.zeros(2, dtype=np.int64),
                    branch_probability=branch, absolute_probability=prob,
                    feature_index=feature, threshold=threshold)


def right_heavy_tree():
    """Hot path goes root -> right -> right-left; left is a cold subtree."""
    root = _internal(1.0, 1.0, feature=0, threshold=0.0)
    root.left = _internal(0.2, 0.2, feature=1, threshold=-1.0)
    root.left.left = _leaf(0.1, 0.5, cls=0)
    root.left.right = _leaf(0.1, 0.5, cls=1)
    root.right = _internal(0.8, 0.8, feature=2, threshold=1.0)
    root.right.left = _leaf(0.6, 0.75, cls=1)
    root.right.right = _leaf(0.2, 0.25, cls=0)
    return Tree(root=root, n_features=3, n_classes=2)


def test_bfs_is_level_order():
    array = flatten(right_heavy_tree(), "bfs_default")
    assert [n.feature_index for n in array.nodes[:3]] == [0, 1, 2]
    assert all(n.leaf_flag for n in array.nodes[3:])
    assert array.nodes[0].left_index == 1 and array.nodes[0].right_index == 2


def test_greedy_places_hot_chain_first():
    array = flatten(right_heavy_tree(), "probability_greedy")
    # chain: root, right child, its most probable leaf
    assert array.nodes[0].feature_index == 0
    assert array.nodes[1].feature_index == 2
    assert array.nodes[2].leaf_flag and array.nodes[2].absolute_probability == 0.6
    assert hot_path(array) == [0, 1, 2]
    # deferred subtrees follow in descending root probability: the cold left
    # internal node (0.2) ties the cold right leaf (0.2); upper-left wins.
    assert array.nodes[3].feature_index == 1
    assert array.nodes[4].absolute_probability in (0.1, 0.2)


def test_single_leaf_tree():
    lone = Tree(root=_leaf(1.0, 1.0, cls=1), n_features=2, n_classes=2)
    for strategy in STRATEGIES:
        array = flatten(lone, strategy)
        assert len(array.nodes) == 1
        assert hot_path(array) == [0]
        assert array_predict(array, [0.0, 0.0]) == 1


def test_flatten_rejects_unknown_strategy():
    with pytest.raises(ValueError, match="strategy"):
        flatten(right_heavy_tree(), "zigzag")
    with pytest.raises(ValueError, match="strategy"):
        forest_layout_document(
            train_forest(random_dataset(np.random.default_rng(0), 20, 2),
                         TrainParams(max_depth=2, seed=0)),
            "zigzag",
        )


def test_hot_path_consecutive_on_random_trees(rng):
    for _ in range(60):
        tree = random_probability_tree(rng, max_depth=8)
        array = flatten(tree, "probability_greedy")
        path = hot_path(array)
        assert path == list(range(len(path))), "hot path not at the array front"
        assert array.nodes[path[-1]].leaf_flag


def test_hot_path_is_max_probability_leaf(rng):
    for _ in range(30):
        tree = random_probability_tree(rng, max_depth=7)
        array = flatten(tree, "probability_greedy")
        end = array.nodes[hot_path(array)[-1]]
        best = max(n.absolute_probability for n in array.nodes if n.leaf_flag)
        assert end.absolute_probability == best


def test_flatten_is_a_bijection(rng):
    for strategy in STRATEGIES:
        for _ in range(20):
            tree = random_probability_tree(rng, max_depth=7)
            array = flatten(tree, strategy)
            n_nodes = len(list(iter_nodes(tree)))
            assert len(array.nodes) == n_nodes
            # every child index appears exactly once; index 0 is the root
            children = [i for n in array.nodes if not n.leaf_flag
                        for i in (n.left_index, n.right_index)]
            assert sorted(children + [0]) == list(range(n_nodes))


def test_round_trip_preserves_structure(rng):
    for strategy in STRATEGIES:
        tree = random_probability_tree(rng, max_depth=8)
        array = flatten(tree, strategy)
        rebuilt = to_tree(array)
        again = flatten(rebuilt, strategy)
        assert again.nodes == array.nodes
        # a second strategy still sees the same multiset of nodes
        keys = lambda arr: sorted(
            (n.leaf_flag, n.feature_index, n.threshold, n.class_index,
             n.absolute_probability) for n in arr.nodes)
        assert keys(flatten(rebuilt, "bfs_default")) == keys(flatten(tree, "bfs_default"))


def test_traversal_equivalence_random_rows(rng):
    for _ in range(25):
        tree = random_probability_tree(rng, n_features=5, max_depth=8)
        arrays = [flatten(tree, s) for s in STRATEGIES]
        rows = rng.normal(size=(40, 5)) * 3.0
        for row in rows:
            want = _route(tree.root, row.tolist())
            for array in arrays:
                assert array_predict(array, row) == want


def test_traversal_equivalence_on_trained_forest(rng):
    ds = random_dataset(rng, 150, 4, n_classes=3)
    forest = train_forest(ds, TrainParams(max_depth=6, n_trees=3, seed=5))
    for tree in forest.trees:
        for strategy in STRATEGIES:
            array = flatten(tree, strategy)
            for row in ds.features[:60]:
                assert array_predict(array, row) == _route(tree.root, row.tolist())


def test_array_predict_validates_row_width():
    array = flatten(right_heavy_tree(), "bfs_default")
    with pytest.raises(ValueError, match="features"):
        array_predict(array, [0.0])


def test_forest_layout_document(rng):
    ds = random_dataset(rng, 60, 3)
    forest = train_forest(ds, TrainParams(max_depth=4, n_trees=2, seed=7))
    doc = forest_layout_document(forest, "probability_greedy")
    assert doc["layout_strategy"] == "probability_greedy"
    assert len(doc["layout_orders"]) == 2
    for order, tree_nodes in zip(doc["layout_orders"], doc["trees"]):
        assert sorted(order) == list(range(len(tree_nodes)))
        assert order[0] == 0  # the root stays first under every strategy
    bfs = forest_layout_document(forest, "bfs_default")
    assert bfs["trees"] == doc["trees"]  # layout never rewrites the forest itself
