"""Suite-wide fixtures.

Every forest trained anywhere in the suite (including through the tuner and
the benchmark grid) is checked for probability conservation: a session-scoped
patch wraps train_forest in all modules that imported it and asserts the
invariant on each result.  FORESTS_CHECKED counts them.

test_acceptance registers one verdict line per gate in ACCEPTANCE_VERDICTS;
they are replayed after the run so they show up without -s.
"""

from __future__ import annotations

import numpy as np
import pytest

from treereg import bench, trainer, tuner
from treereg.dataset import Dataset

from oracles import assert_probability_conservation

FORESTS_CHECKED = [0]

ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def conserve_probabilities_on_every_trained_forest():
    real = trainer.train_forest

    def checked(train, params, jobs=1):
        forest = real(train, params, jobs=jobs)
        assert_probability_conservation(forest)
        FORESTS_CHECKED[0] += 1
        return forest

    patched = [trainer, tuner, bench]
    for mod in patched:
        mod.train_forest = checked
    try:
        yield
    finally:
        for mod in patched:
            mod.train_forest = real


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng: np.random.Generator, n_rows: int, n_features: int,
                   n_classes: int = 2, duplicate_fraction: float = 0.3) -> Dataset:
    """Small random dataset with deliberate duplicate feature values so that
    tie handling and distinct-value thresholds get exercised."""
    X = rng.normal(size=(n_rows, n_features))
    dup = rng.random(size=X.shape) < duplicate_fraction
    X[dup] = np.round(X[dup])  # collide values onto a small integer grid
    y = rng.integers(n_classes, size=n_rows)
    if len(np.unique(y)) < 2:  # class_names needs >= 2 classes
        y[0] = (y[0] + 1) % n_classes
        y[-1] = (y[0] + 1) % n_classes
    return Dataset(
        features=X,
        labels=y.astype(np.int64),
        class_names=tuple(str(c) for c in range(n_classes)),
    )
