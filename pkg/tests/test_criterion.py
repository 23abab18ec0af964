"""Split scoring tests: formula spot checks against exact-fraction oracles,
bit-exact agreement with the brute-force scan, and tie-break rules."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from treereg.criterion import (
    CriterionParams,
    best_split,
    gini,
    regularized_impurity,
    split_evenness,
)

from oracles import (
    oracle_best_split,
    oracle_evenness_fraction,
    oracle_gini_fraction,
)


def test_gini_spot_value():
    expected = float(oracle_gini_fraction([0.7, 0.3]))
    assert abs(expected - 0.42) <= 1e-12
    assert abs(gini([0.7, 0.3]) - 0.42) <= 1e-12


def test_gini_pure_and_uniform():
    assert gini([1.0]) == 0.0
    assert gini([0.0, 1.0]) == 0.0
    assert abs(gini([0.5, 0.5]) - 0.5) <= 1e-12
    assert abs(gini([0.25] * 4) - 0.75) <= 1e-12


@given(st.lists(st.integers(1, 1000), min_size=1, max_size=6))
def test_gini_matches_fraction_oracle(counts):
    total = sum(counts)
    proportions = [c / total for c in counts]  # sums to 1 within the gate
    assert abs(gini(proportions) - float(oracle_gini_fraction(proportions))) <= 1e-12


def test_gini_rejects_bad_input():
    with pytest.raises(ValueError):
        gini([])
    with pytest.raises(ValueError):
        gini([[0.5, 0.5]])
    with pytest.raises(ValueError):
        gini([-0.1, 1.1])
    with pytest.raises(ValueError):
        gini([0.4, 0.4])


def test_evenness_spot_value():
    assert split_evenness(75, 25) == 0.5
    assert split_evenness(50, 50) == 1.0
    assert split_evenness(99, 1) == 1.0 - 98 / 100
    assert split_evenness(10, 0) == 0.0


@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_evenness_matches_fraction_oracle(n_left, n_right):
    if n_left + n_right == 0:
        with pytest.raises(ValueError):
            split_evenness(n_left, n_right)
        return
    got = split_evenness(n_left, n_right)
    assert abs(got - float(oracle_evenness_fraction(n_left, n_right))) <= 1e-12
    assert 0.0 <= got <= 1.0
    assert got == split_evenness(n_right, n_left)


def test_regularized_impurity_spot_value():
    assert abs(regularized_impurity(0.42, 0.5, 0.5) - 0.67) <= 1e-12


@given(
    st.floats(0, 1), st.floats(0, 1),
    st.floats(0, 100, allow_nan=False, allow_infinity=False),
)
def test_regularized_impurity_lambda_zero_is_identity(g, evenness, lam):
    assert regularized_impurity(g, evenness, 0.0) == g
    assert regularized_impurity(g, evenness, lam) == g + lam * evenness


def test_criterion_params_rejects_negative_lambda():
    with pytest.raises(ValueError):
        CriterionParams(reg_lambda=-0.5)
    with pytest.raises(ValueError):
        CriterionParams(reg_lambda=float("nan"))


# ---------------------------------------------------------------- best_split


def _assert_matches_oracle(X, y, n_classes, lam):
    got = best_split(X, y, n_classes, params=CriterionParams(reg_lambda=lam))
    ref = oracle_best_split(X, y, n_classes, reg_lambda=lam)
    if ref is None:
        assert got is None
        return
    feature, threshold, n_left, left_counts, score = ref
    assert got is not None
    assert got.feature_index == feature
    assert got.threshold == threshold
    assert got.n_left == n_left
    assert got.left_class_counts.tolist() == left_counts
    assert got.score == score
    assert got.n_left + got.n_right == len(y)
    # The published threshold must reproduce the scored left count exactly.
    assert int((np.asarray(X)[:, feature] <= threshold).sum()) == n_left


def test_best_split_two_point_dataset():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    found = best_split(X, y, 2)
    assert found.feature_index == 0
    assert found.threshold == 0.5
    assert found.n_left == 1 and found.n_right == 1
    assert found.score == 0.0


def test_best_split_constant_features_returns_none():
    X = np.full((6, 3), 2.5)
    y = np.array([0, 1, 0, 1, 0, 1])
    assert best_split(X, y, 2) is None


def test_best_split_single_row_returns_none():
    assert best_split(np.array([[1.0, 2.0]]), np.array([0]), 2) is None


def test_best_split_feature_tie_goes_to_lower_index():
    # Identical columns: both score equally everywhere.
    col = np.array([0.0, 0.0, 1.0, 1.0])
    X = np.column_stack([col, col])
    y = np.array([0, 0, 1, 1])
    found = best_split(X, y, 2)
    assert found.feature_index == 0


def test_best_split_threshold_tie_goes_to_lowest():
    # Symmetric labels: splitting off the left pair scores the same as the
    # right pair; the lower threshold must win.
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 1, 0])
    found = best_split(X, y, 2)
    ref = oracle_best_split(X, y, 2)
    assert found.threshold == ref[1] == 0.5


def test_best_split_respects_feature_subset():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 4))
    y = (X[:, 2] > 0).astype(np.int64)
    full = best_split(X, y, 2)
    assert full.feature_index == 2
    constrained = best_split(X, y, 2, feature_indices=[0, 3])
    assert constrained.feature_index in (0, 3)
    ref = oracle_best_split(X[:, [0, 3]], y, 2)
    assert constrained.threshold == ref[1]
    assert constrained.feature_index == [0, 3][ref[0]]


def test_best_split_validates_inputs():
    X = np.zeros((4, 2))
    y = np.array([0, 1, 0, 1])
    with pytest.raises(ValueError):
        best_split(np.zeros(4), y, 2)
    with pytest.raises(ValueError):
        best_split(X, y[:3], 2)
    with pytest.raises(ValueError):
        best_split(X, y, 2, feature_indices=[2])
    with pytest.raises(ValueError):
        best_split(X, y, 2, feature_indices=[-1])


def test_adjacent_float_midpoint_falls_back_to_lower_value():
    # Odd-mantissa neighbour pair: the midpoint rounds up to hi, the
    # degenerate case the threshold rule must catch.
    lo = math.nextafter(1.0, math.inf)
    hi = math.nextafter(lo, math.inf)
    assert (lo + hi) / 2.0 == hi
    X = np.array([[lo], [lo], [hi], [hi]])
    y = np.array([0, 0, 1, 1])
    found = best_split(X, y, 2)
    assert found.threshold == lo
    assert found.n_left == 2
    assert int((X[:, 0] <= found.threshold).sum()) == 2


def test_adjacent_float_midpoint_that_rounds_down_is_kept():
    # Even-mantissa pair: the midpoint rounds down onto lo, which is a valid
    # threshold already (routes exactly the lo rows left).
    lo = 1.0
    hi = math.nextafter(lo, math.inf)
    assert (lo + hi) / 2.0 == lo
    X = np.array([[lo], [hi], [hi]])
    y = np.array([0, 1, 1])
    found = best_split(X, y, 2)
    assert found.threshold == lo
    assert found.n_left == 1
    assert int((X[:, 0] <= found.threshold).sum()) == 1


def test_huge_value_midpoint_does_not_overflow():
    big = np.finfo(np.float64).max
    X = np.array([[-big], [-big], [big], [big]])
    y = np.array([0, 0, 1, 1])
    found = best_split(X, y, 2)
    assert math.isfinite(found.threshold)
    assert int((X[:, 0] <= found.threshold).sum()) == found.n_left == 2


@settings(deadline=None, max_examples=60)
@given(
    hnp.arrays(
        np.float64,
        hnp.array_shapes(min_dims=2, max_dims=2, min_side=2, max_side=24),
        elements=st.floats(-1e12, 1e12, allow_nan=False),
    ),
    st.integers(0, 2**31),
    st.sampled_from([0.0, 0.25, 1.0, 5.0]),
)
def test_best_split_matches_oracle_property(X, label_seed, lam):
    if X.shape[1] > 5:
        X = X[:, :5]
    y = np.random.default_rng(label_seed).integers(0, 3, size=X.shape[0])
    _assert_matches_oracle(X, y, 3, lam)


def test_best_split_matches_oracle_on_duplicate_heavy_data(rng):
    for _ in range(40):
        n = int(rng.integers(2, 40))
        p = int(rng.integers(1, 5))
        k = int(rng.integers(2, 4))
        X = rng.integers(-3, 4, size=(n, p)).astype(np.float64)
        y = rng.integers(0, k, size=n)
        lam = float(rng.choice([0.0, 0.5, 2.0, 10.0]))
        _assert_matches_oracle(X, y, k, lam)


def test_lambda_shifts_winner_toward_uneven_split():
    # Label noise makes the even split slightly better on impurity alone, but
    # a strong penalty prefers peeling off the single extreme row.
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0]])
    y = np.array([0, 0, 0, 1, 1, 1, 1, 1])
    even = best_split(X, y, 2, params=CriterionParams(reg_lambda=0.0))
    uneven = best_split(X, y, 2, params=CriterionParams(reg_lambda=5.0))
    assert even.n_left == 3
    assert min(uneven.n_left, uneven.n_right) == 1
    assert split_evenness(uneven.n_left, uneven.n_right) < split_evenness(even.n_left, even.n_right)
