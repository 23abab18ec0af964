"""Decision-forest training with an uneven-split penalty, plus the tooling
around it: expected-depth analytics, penalty tuning, cache-aware node layout,
C kernel generation, and an interpreter-vs-compiled benchmark harness.
"""

__version__ = "0.1.0"

from .analytics import (
    balanced_accuracy,
    chi_square,
    expected_depth,
    forest_expected_depth,
    mean_split_evenness,
    size_stats,
)
from .criterion import (
    CriterionParams,
    SplitCandidate,
    best_split,
    gini,
    regularized_impurity,
    split_evenness,
)
from .dataset import CsvFormatError, Dataset, SplitPair, load_csv, save_csv, split, split_repetitions
from .layout import NodeArray, STRATEGIES, flatten, forest_layout_document, hot_path
from .synthgen import DEPENDENCE_MODES, OUTCOME_MODELS, MixtureSpec, SynthConfig, generate
from .trainer import (
    Forest,
    TrainParams,
    Tree,
    TreeNode,
    dict_to_forest,
    forest_to_dict,
    grow_tree,
    load_forest,
    predict,
    predict_batch,
    save_forest,
    train_forest,
)
from .tuner import TuneTrace, best_lambda_under_budget, pareto_front, tune_lambda

__all__ = [
    "CsvFormatError",
    "CriterionParams",
    "DEPENDENCE_MODES",
    "Dataset",
    "Forest",
    "MixtureSpec",
    "NodeArray",
    "OUTCOME_MODELS",
    "STRATEGIES",
    "SplitCandidate",
    "SplitPair",
    "SynthConfig",
    "TrainParams",
    "Tree",
    "TreeNode",
    "TuneTrace",
    "balanced_accuracy",
    "best_lambda_under_budget",
    "best_split",
    "chi_square",
    "dict_to_forest",
    "expected_depth",
    "flatten",
    "forest_expected_depth",
    "forest_layout_document",
    "forest_to_dict",
    "generate",
    "gini",
    "grow_tree",
    "hot_path",
    "load_csv",
    "load_forest",
    "mean_split_evenness",
    "pareto_front",
    "predict",
    "predict_batch",
    "regularized_impurity",
    "save_csv",
    "save_forest",
    "size_stats",
    "split",
    "split_evenness",
    "split_repetitions",
    "train_forest",
    "tune_lambda",
    "__version__",
]
