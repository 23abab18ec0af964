"""Automatic selection of the uneven-split penalty weight.

The tuner walks an increasing schedule of penalty weights, training a forest
per weight over several train/test repetitions, and stops once the expected
traversal depth stops improving (relative change below a threshold), the
schedule/cap is exhausted, or an accuracy budget is spent.  The chosen weight
is the last one evaluated before the stop triggered: the smallest weight that
already delivers the plateau depth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .analytics import balanced_accuracy, forest_expected_depth
from .dataset import Dataset, split_repetitions
from .trainer import TrainParams, predict_batch, train_forest

__all__ = [
    "DEFAULT_SCHEDULE",
    "TunePoint",
    "TuneTrace",
    "best_lambda_under_budget",
    "pareto_front",
    "tune_lambda",
    "write_trace_csv",
]

DEFAULT_SCHEDULE = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0)

STOP_REASONS = ("converged", "lambda_cap", "accuracy_budget")


@dataclass(frozen=True)
class TunePoint:
    """One evaluated penalty weight. relative_change is None on the first point."""

    reg_lambda: float
    expected_depth: float
    balanced_accuracy: float
    relative_change: float | None


@dataclass(frozen=True)
class TuneTrace:
    points: tuple[TunePoint, ...]
    chosen_lambda: float
    stop_reason: str


def _evaluate(pairs, params: TrainParams, reg_lambda: float, jobs: int) -> tuple[float, float]:
    """Mean expected depth and balanced accuracy over the split repetitions.

    Forest seeds are params.seed + repetition index, so different weights are
    compared on identical splits with identical per-repetition seeding.
    """
    depth_sum = 0.0
    acc_sum = 0.0
    for pair in pairs:
        p = replace(params, reg_lambda=reg_lambda, seed=params.seed + pair.repetition_index)
        forest = train_forest(pair.train, p, jobs=jobs)
        depth_sum += forest_expected_depth(forest)
        acc_sum += balanced_accuracy(predict_batch(forest, pair.test.features), pair.test.labels)
    return depth_sum / len(pairs), acc_sum / len(pairs)


def _relative_change(previous: float, current: float) -> float:
    if previous == 0.0:
        return 0.0 if current == 0.0 else math.inf
    return abs(current - previous) / previous


def tune_lambda(
    ds: Dataset,
    params: TrainParams,
    threshold: float = 0.05,
    schedule=DEFAULT_SCHEDULE,
    lambda_cap: float = 40.0,
    n_repetitions: int = 8,
    test_fraction: float = 0.25,
    accuracy_budget: float | None = None,
    stop_early: bool = True,
    jobs: int = 1,
) -> TuneTrace:
    """Walk the weight schedule until expected depth stops changing.

    Stops at the first weight whose relative expected-depth change versus the
    previous weight falls below `threshold` (stop_reason "converged"), when
    the schedule or `lambda_cap` is exhausted ("lambda_cap"), or when the
    balanced-accuracy drop versus weight 0 exceeds `accuracy_budget`
    ("accuracy_budget").  chosen_lambda is the weight evaluated just before
    the stop.  With stop_early=False the whole schedule is still evaluated
    and the trace extends past the stopping point; chosen_lambda and
    stop_reason are unchanged.
    """
    sched = [float(v) for v in schedule]
    if not sched:
        raise ValueError("schedule is empty")
    if sched[0] != 0.0:
        raise ValueError(f"schedule must start at 0, got {sched[0]}")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly increasing")
    if not threshold > 0.0:
        raise ValueError(f"threshold must be > 0, got {threshold}")

    pairs = split_repetitions(ds, n_repetitions, test_fraction, seed=params.seed)
    points: list[TunePoint] = []
    chosen: float | None = None
    reason: str | None = None

    for lam in sched:
        if lam > lambda_cap:
            if reason is None:
                chosen, reason = points[-1].reg_lambda, "lambda_cap"
            break
        depth, acc = _evaluate(pairs, params, lam, jobs)
        change = None if not points else _relative_change(points[-1].expected_depth, depth)
        points.append(TunePoint(lam, depth, acc, change))
        if reason is not None or len(points) == 1:
            continue
        if accuracy_budget is not None and points[0].balanced_accuracy - acc > accuracy_budget:
            chosen, reason = points[-2].reg_lambda, "accuracy_budget"
            if stop_early:
                break
        elif change is not None and change < threshold:
            chosen, reason = points[-2].reg_lambda, "converged"
            if stop_early:
                break

    if reason is None:
        chosen, reason = points[-1].reg_lambda, "lambda_cap"
    return TuneTrace(points=tuple(points), chosen_lambda=chosen, stop_reason=reason)


def write_trace_csv(trace: TuneTrace, path: str | Path) -> None:
    """Trace rows as CSV; stop_reason appears on the final row only."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "expected_depth", "balanced_accuracy", "relative_change", "stop_reason"])
        for i, pt in enumerate(trace.points):
            writer.writerow([
                repr(pt.reg_lambda),
                repr(pt.expected_depth),
                repr(pt.balanced_accuracy),
                "" if pt.relative_change is None else repr(pt.relative_change),
                trace.stop_reason if i == len(trace.points) - 1 else "",
            ])


def best_lambda_under_budget(candidates, accuracy_budget: float) -> float:
    """Fastest weight whose accuracy drop fits the budget.

    `candidates` holds (reg_lambda, accuracy_drop, time) triples and must
    include the weight-0 baseline.  Among admissible weights the lowest time
    wins, ties going to the smaller weight; if nothing is admissible (budget
    < 0) the baseline weight 0 is returned.
    """
    rows = [(float(lam), float(drop), float(time)) for lam, drop, time in candidates]
    if not any(lam == 0.0 for lam, _, _ in rows):
        raise ValueError("candidates lack the lambda=0 baseline")
    admissible = [(time, lam) for lam, drop, time in rows if drop <= accuracy_budget]
    if not admissible:
        return 0.0
    return min(admissible)[1]


def _default_key(row):
    try:
        return (row.accuracy_drop, row.relative_time)
    except AttributeError:
        return (row[0], row[1])


def pareto_front(rows, key=None) -> list:
    """Rows not strictly dominated in (accuracy_drop, relative_time).

    Both coordinates are minimized.  a dominates b when a is <= in both and <
    in at least one; equal rows therefore survive together.  Input order is
    preserved.
    """
    rows = list(rows)
    key = key or _default_key
    coords = [key(r) for r in rows]
    front = []
    for i, (di, ti) in enumerate(coords):
        dominated = any(
            (dj <= di and tj <= ti) and (dj < di or tj < ti)
            for j, (dj, tj) in enumerate(coords)
            if j != i
        )
        if not dominated:
            front.append(rows[i])
    return front
