"""Synthetic binary-classification data with controllable feature dependence.

Five informative features are drawn from two-component Gaussian mixtures; five
noise features are uniform on [0, 10].  Each mixture draw records an origin
flag (True when the sample came from the component centred at 1), and the
label is a boolean function of those flags, so the ground-truth structure of
every generated table is known exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

__all__ = [
    "MixtureSpec",
    "SynthConfig",
    "generate",
    "label_outcome",
    "sample_mixture",
]

DEPENDENCE_MODES = ("independent", "weakly_dependent", "strongly_dependent")
OUTCOME_MODELS = ("simple", "medium", "complex")

FEATURE_NAMES = tuple(f"x{j}" for j in range(1, 11))
ORIGIN_NAMES = tuple(f"o{j}" for j in range(1, 6))


@dataclass(frozen=True)
class MixtureSpec:
    """Two-component unit-variance Gaussian mixture.

    With probability ``weight`` a draw comes from N(1, 1) and its origin flag
    is True; otherwise it comes from N(delta_mu + shift, 1) and the flag is
    False.
    """

    weight: float
    shift: float
    delta_mu: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"mixture weight must lie in [0, 1], got {self.weight}")


def _mixture_column(rng: np.random.Generator, n: int, spec: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    # One uniform decides the component, one normal supplies the noise; the
    # component only moves the mean.  Draw order is fixed so that a given rng
    # state always yields the same column.
    origin = rng.random(n) < spec.weight
    values = rng.standard_normal(n) + np.where(origin, 1.0, spec.delta_mu + spec.shift)
    return values, origin


def sample_mixture(rng: np.random.Generator, n: int, spec: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Draw n values and their origin flags from a mixture."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return _mixture_column(rng, n, spec)


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    ``dependence`` selects how features 4 and 5 are built: drawn fresh
    ("independent") or derived from other informative features
    ("weakly_dependent", "strongly_dependent").  ``model`` picks the label
    formula, ``balance`` is the mixture
    weight of feature 1, and ``delta_mu`` shifts every second mixture
    component, controlling class separation.
    """

    dependence: str = "independent"
    model: str = "simple"
    balance: float = 0.5
    delta_mu: float = 0.0
    num: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dependence not in DEPENDENCE_MODES:
            raise ValueError(f"dependence must be one of {DEPENDENCE_MODES}, got {self.dependence!r}")
        if self.model not in OUTCOME_MODELS:
            raise ValueError(f"model must be one of {OUTCOME_MODELS}, got {self.model!r}")
        if not 0.0 <= self.balance <= 1.0:
            raise ValueError(f"balance must lie in [0, 1], got {self.balance}")
        if self.num < 1:
            raise ValueError(f"num must be positive, got {self.num}")


def _outcomes(origins: np.ndarray, model: str) -> np.ndarray:
    o1, o2, o3, o4, o5 = (origins[:, j] for j in range(5))
    if model == "simple":
        return o1
    if model == "medium":
        return (o1 & o4) | ~o2
    return (o1 & ~o3) | (~o5 & ~o4) | o2


def label_outcome(origins, model: str) -> bool:
    """Label for a single 5-tuple of origin flags."""
    if model not in OUTCOME_MODELS:
        raise ValueError(f"model must be one of {OUTCOME_MODELS}, got {model!r}")
    row = np.asarray(origins, dtype=bool).reshape(1, 5)
    return bool(_outcomes(row, model)[0])


def generate(config: SynthConfig) -> Dataset:
    """Generate a 10-feature, 2-class dataset per the configured recipe.

    Feature columns (1-based):
      x1 = mixture(balance, shift 0)         x6..x10 = U[0, 10] noise
      x2 = mixture(0.1, shift -5)
      x3 = mixture(0.5, shift +2)
      x4 = mixture(0.3, shift +3)   or x2 + x3 when dependence != independent
      x5 = mixture(0.8, shift -2)   or x3 + 0.5 * x1 when strongly_dependent

    Derived columns reuse the already-drawn realizations of their summands and
    inherit the origin flag of the first summand (o4 = o2, o5 = o3), so
    dependence is exact, not just distributional.
    """
    rng = np.random.default_rng(config.seed)
    n = config.num
    dm = config.delta_mu

    values = np.empty((n, 10), dtype=np.float64)
    origins = np.empty((n, 5), dtype=bool)

    values[:, 0], origins[:, 0] = _mixture_column(rng, n, MixtureSpec(config.balance, 0.0, dm))
    values[:, 1], origins[:, 1] = _mixture_column(rng, n, MixtureSpec(0.1, -5.0, dm))
    values[:, 2], origins[:, 2] = _mixture_column(rng, n, MixtureSpec(0.5, 2.0, dm))

    if config.dependence == "independent":
        values[:, 3], origins[:, 3] = _mixture_column(rng, n, MixtureSpec(0.3, 3.0, dm))
        values[:, 4], origins[:, 4] = _mixture_column(rng, n, MixtureSpec(0.8, -2.0, dm))
    else:
        values[:, 3] = values[:, 1] + values[:, 2]
        origins[:, 3] = origins[:, 1]
        if config.dependence == "weakly_dependent":
            values[:, 4], origins[:, 4] = _mixture_column(rng, n, MixtureSpec(0.8, -2.0, dm))
        else:
            values[:, 4] = values[:, 2] + 0.5 * values[:, 0]
            origins[:, 4] = origins[:, 2]

    values[:, 5:10] = rng.uniform(0.0, 10.0, size=(n, 5))

    labels = _outcomes(origins, config.model).astype(np.int64)
    return Dataset(features=values, labels=labels, class_names=("0", "1"), origins=origins)
