"""Experiment grid execution and inference timing.

The interpreter path is always available; compiled kernels are timed when a
system C compiler can be found (environment variables TREEREG_CC or CC, then
cc/gcc/clang on PATH).  Without a toolchain, compiled styles fall back to
interpreter timings and rows are flagged timing_source=interpreter.

Relative execution time pairs each row with the reg_lambda=0 row that agrees
on every other field (dataset, depth, trees, feature subset, kernel, layout,
repetition), mirroring a like-for-like before/after comparison.
"""

from __future__ import annotations

import csv
import os
import shutil
import statistics
import subprocess
import tempfile
import time
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .analytics import balanced_accuracy, forest_expected_depth
from .codegen import EmittedBundle, emit_driver, emit_kernel
from .dataset import Dataset, save_csv, split_repetitions
from .trainer import Forest, TrainParams, predict_batch, resolve_max_features, train_forest

__all__ = [
    "CompileError",
    "CompiledTiming",
    "ExperimentRow",
    "KernelMismatchError",
    "REPORT_COLUMNS",
    "ResultLine",
    "TIMING_COLUMNS",
    "ToolchainUnavailable",
    "compile_and_time",
    "find_compiler",
    "format_result_line",
    "parse_result_line",
    "read_report",
    "run_grid",
    "time_interpreter",
    "write_report",
]

CFLAGS = ("-std=c99", "-O2", "-Wall", "-Wextra", "-pedantic")

DEFAULT_TIMING_REPS = 50

# Columns whose values depend on wall-clock measurement; everything else in a
# report is a pure function of the manifest.
TIMING_COLUMNS = ("mean_ns_per_sample", "relative_time")


class ToolchainUnavailable(RuntimeError):
    """No C compiler could be located."""


class CompileError(RuntimeError):
    """Kernel compilation failed; the message carries the compiler output and source."""


class KernelMismatchError(RuntimeError):
    """Compiled kernel predictions diverged from the interpreter."""


@dataclass(frozen=True)
class ExperimentRow:
    dataset: str
    reg_lambda: float
    max_depth: int
    n_trees: int
    max_features: int
    kernel_style: str
    layout_strategy: str
    repetition: int
    balanced_accuracy: float
    expected_depth: float
    mean_ns_per_sample: float
    relative_time: float
    accuracy_drop: float
    timing_source: str


REPORT_COLUMNS = (
    "dataset",
    "reg_lambda",
    "max_depth",
    "n_trees",
    "max_features",
    "kernel_style",
    "layout_strategy",
    "repetition",
    "balanced_accuracy",
    "expected_depth",
    "mean_ns_per_sample",
    "relative_time",
    "accuracy_drop",
    "timing_source",
)

_COLUMN_TYPES = {
    "dataset": str,
    "reg_lambda": float,
    "max_depth": int,
    "n_trees": int,
    "max_features": int,
    "kernel_style": str,
    "layout_strategy": str,
    "repetition": int,
    "balanced_accuracy": float,
    "expected_depth": float,
    "mean_ns_per_sample": float,
    "relative_time": float,
    "accuracy_drop": float,
    "timing_source": str,
}


# ---------------------------------------------------------------- timing


def time_interpreter(forest: Forest, test: Dataset, reps: int = DEFAULT_TIMING_REPS) -> float:
    """Median over reps of mean nanoseconds per sample for full-test-set
    inference through the Python interpreter.  One untimed warm-up pass."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if test.n_rows < 1:
        raise ValueError("test set is empty")
    X = test.features
    predict_batch(forest, X)  # warm-up
    means = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        predict_batch(forest, X)
        means.append((time.perf_counter_ns() - t0) / test.n_rows)
    return float(statistics.median(means))


# ---------------------------------------------------------------- RESULT lines


@dataclass(frozen=True)
class ResultLine:
    style: str
    reps: int
    rows: int
    mean_ns_per_sample: float
    histogram: tuple[int, ...]


def format_result_line(result: ResultLine) -> str:
    hist = ",".join(str(c) for c in result.histogram)
    return (
        f"RESULT style={result.style} reps={result.reps} rows={result.rows} "
        f"mean_ns_per_sample={result.mean_ns_per_sample!r} histogram={hist}"
    )


def parse_result_line(text: str) -> ResultLine:
    """Parse the driver's RESULT line (the last one if several appear)."""
    line = None
    for candidate in text.splitlines():
        if candidate.startswith("RESULT "):
            line = candidate.strip()
    if line is None:
        raise ValueError(f"no RESULT line in driver output:\n{text}")
    fields: dict[str, str] = {}
    for token in line.split()[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"malformed RESULT token {token!r}")
        fields[key] = value
    expected = {"style", "reps", "rows", "mean_ns_per_sample", "histogram"}
    if set(fields) != expected:
        raise ValueError(f"RESULT fields {sorted(fields)} != expected {sorted(expected)}")
    return ResultLine(
        style=fields["style"],
        reps=int(fields["reps"]),
        rows=int(fields["rows"]),
        mean_ns_per_sample=float(fields["mean_ns_per_sample"]),
        histogram=tuple(int(c) for c in fields["histogram"].split(",")),
    )


# ---------------------------------------------------------------- compilation


def find_compiler() -> str | None:
    """C compiler executable from TREEREG_CC, CC, or PATH; None if absent."""
    for env in ("TREEREG_CC", "CC"):
        value = os.environ.get(env)
        if value:
            found = shutil.which(value)
            if found:
                return found
    for name in ("cc", "gcc", "clang"):
        found = shutil.which(name)
        if found:
            return found
    return None


@dataclass(frozen=True)
class CompiledTiming:
    mean_ns_per_sample: float
    result: ResultLine
    compile_warnings: str
    predictions: np.ndarray | None


def compile_and_time(
    bundle: EmittedBundle,
    test_csv: str | Path,
    compiler: str | None = None,
    expected_predictions=None,
    extra_cflags: tuple[str, ...] = (),
) -> CompiledTiming:
    """Compile a driver-complete bundle, run it on test_csv, parse RESULT.

    Verifies the histogram sums to the row count, and, when
    expected_predictions is given, that per-row predictions match exactly.
    """
    cc = compiler or find_compiler()
    if cc is None:
        raise ToolchainUnavailable(
            "no C compiler found (set TREEREG_CC or CC, or install cc/gcc/clang)"
        )
    if bundle.driver_source is None:
        raise ValueError("bundle has no driver; call emit_driver first")

    with tempfile.TemporaryDirectory(prefix="treereg-cc-") as tmp:
        work = Path(tmp)
        from .codegen import write_bundle

        write_bundle(bundle, work)
        exe = work / "driver"
        cmd = [cc, *CFLAGS, *extra_cflags, "kernel.c", "driver.c", "csv_loader.c", "-o", str(exe), "-lm"]
        proc = subprocess.run(cmd, cwd=work, capture_output=True, text=True)
        if proc.returncode != 0:
            raise CompileError(
                f"compilation failed ({' '.join(cmd)}):\n{proc.stderr}\n"
                f"--- kernel.c ---\n{bundle.kernel_source}"
            )
        warnings = proc.stderr

        pred_path = work / "predictions.txt"
        args = [str(exe), str(Path(test_csv).resolve())]
        want_preds = expected_predictions is not None
        if want_preds:
            args.append(str(pred_path))
        run = subprocess.run(args, capture_output=True, text=True)
        if run.returncode != 0:
            raise RuntimeError(f"driver failed (exit {run.returncode}): {run.stderr.strip()}")
        result = parse_result_line(run.stdout)

        if sum(result.histogram) != result.rows:
            raise ValueError(
                f"histogram sums to {sum(result.histogram)} but driver saw {result.rows} rows"
            )
        predictions = None
        if want_preds:
            predictions = np.loadtxt(pred_path, dtype=np.int64, ndmin=1)
            expected = np.asarray(expected_predictions, dtype=np.int64)
            if predictions.shape != expected.shape:
                raise KernelMismatchError(
                    f"driver predicted {predictions.shape[0]} rows, expected {expected.shape[0]}"
                )
            diffs = np.nonzero(predictions != expected)[0]
            if diffs.size:
                i = int(diffs[0])
                raise KernelMismatchError(
                    f"{diffs.size} prediction mismatches; first at row {i}: "
                    f"kernel={predictions[i]} interpreter={expected[i]}"
                )
    return CompiledTiming(
        mean_ns_per_sample=result.mean_ns_per_sample,
        result=result,
        compile_warnings=warnings,
        predictions=predictions,
    )


# ---------------------------------------------------------------- grid


def _parse_style(token: str) -> tuple[str, str]:
    style, sep, layout = token.partition(":")
    if style == "interpreter":
        if sep:
            raise ValueError(f"interpreter style takes no layout, got {token!r}")
        return ("interpreter", "none")
    if style == "ifelse":
        if sep:
            raise ValueError(f"ifelse style takes no layout, got {token!r}")
        return ("ifelse", "none")
    if style == "native":
        return ("native", layout or "bfs_default")
    raise ValueError(f"unknown style {token!r}")


def default_styles(with_compiler: bool) -> list[str]:
    if with_compiler:
        return ["interpreter", "ifelse", "native:bfs_default", "native:probability_greedy"]
    return ["interpreter"]


def run_grid(
    datasets: dict[str, Dataset],
    lambdas,
    depths,
    n_trees_list,
    max_features_list,
    seed: int = 0,
    n_repetitions: int = 8,
    test_fraction: float = 0.25,
    styles=None,
    timing_reps: int = DEFAULT_TIMING_REPS,
    bootstrap: bool = True,
    jobs: int = 1,
    compiler: str | None = "auto",
) -> list[ExperimentRow]:
    """Cross product of datasets x lambdas x depths x trees x feature subsets
    x styles, repeated over train/test splits.

    Training is one forest per (dataset, repetition, depth, trees, features,
    lambda), shared by all styles.  Timing runs sequentially.  All non-timing
    outputs are pure functions of the arguments.
    """
    lambda_values = [float(v) for v in lambdas]
    if 0.0 not in lambda_values:
        raise ValueError("lambda grid must include the 0 baseline")

    if compiler == "auto":
        cc = find_compiler()
    else:
        cc = compiler
    if styles is None:
        styles = default_styles(with_compiler=cc is not None)
    resolved_styles = [_parse_style(s) for s in styles]
    needs_compiler = any(s != "interpreter" for s, _ in resolved_styles)

    raw: list[dict] = []
    with tempfile.TemporaryDirectory(prefix="treereg-grid-") as tmp:
        for name in sorted(datasets):
            ds = datasets[name]
            pairs = split_repetitions(ds, n_repetitions, test_fraction, seed)
            for pair in pairs:
                test_csv = None
                if needs_compiler and cc is not None:
                    test_csv = Path(tmp) / f"{name}-rep{pair.repetition_index}.csv"
                    save_csv(pair.test, test_csv)
                for depth, nt, mf in product(depths, n_trees_list, max_features_list):
                    mf_resolved = resolve_max_features(mf, ds.n_features)
                    if mf_resolved is None:
                        mf_resolved = ds.n_features
                    for lam in lambda_values:
                        params = TrainParams(
                            max_depth=int(depth),
                            n_trees=int(nt),
                            max_features=mf_resolved,
                            reg_lambda=lam,
                            bootstrap=bootstrap,
                            seed=seed + pair.repetition_index,
                        )
                        forest = train_forest(pair.train, params, jobs=jobs)
                        preds = predict_batch(forest, pair.test.features)
                        accuracy = balanced_accuracy(preds, pair.test.labels)
                        depth_metric = forest_expected_depth(forest)
                        for style, strat in resolved_styles:
                            if style == "interpreter" or cc is None:
                                ns = time_interpreter(forest, pair.test, timing_reps)
                                source = "interpreter"
                            else:
                                bundle = emit_driver(
                                    emit_kernel(forest, style, strat),
                                    str(test_csv),
                                    timing_reps,
                                )
                                timed = compile_and_time(
                                    bundle, test_csv, compiler=cc, expected_predictions=preds
                                )
                                ns = timed.mean_ns_per_sample
                                source = "compiled"
                            raw.append({
                                "dataset": name,
                                "reg_lambda": lam,
                                "max_depth": int(depth),
                                "n_trees": int(nt),
                                "max_features": mf_resolved,
                                "kernel_style": style,
                                "layout_strategy": strat,
                                "repetition": pair.repetition_index,
                                "balanced_accuracy": accuracy,
                                "expected_depth": depth_metric,
                                "mean_ns_per_sample": ns,
                                "timing_source": source,
                            })
    return _join_baselines(raw)


def _pair_key(row: dict) -> tuple:
    return (
        row["dataset"],
        row["max_depth"],
        row["n_trees"],
        row["max_features"],
        row["kernel_style"],
        row["layout_strategy"],
        row["repetition"],
    )


def _join_baselines(raw: list[dict]) -> list[ExperimentRow]:
    baselines = {_pair_key(r): r for r in raw if r["reg_lambda"] == 0.0}
    rows = []
    for r in raw:
        base = baselines.get(_pair_key(r))
        if base is None:
            raise ValueError(f"no reg_lambda=0 baseline for {_pair_key(r)}")
        if r["reg_lambda"] == 0.0:
            relative_time, drop = 1.0, 0.0
        else:
            relative_time = r["mean_ns_per_sample"] / base["mean_ns_per_sample"]
            drop = base["balanced_accuracy"] - r["balanced_accuracy"]
        rows.append(ExperimentRow(
            dataset=r["dataset"],
            reg_lambda=r["reg_lambda"],
            max_depth=r["max_depth"],
            n_trees=r["n_trees"],
            max_features=r["max_features"],
            kernel_style=r["kernel_style"],
            layout_strategy=r["layout_strategy"],
            repetition=r["repetition"],
            balanced_accuracy=r["balanced_accuracy"],
            expected_depth=r["expected_depth"],
            mean_ns_per_sample=r["mean_ns_per_sample"],
            relative_time=relative_time,
            accuracy_drop=drop,
            timing_source=r["timing_source"],
        ))
    return rows


# ---------------------------------------------------------------- report CSV


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(rows: list[ExperimentRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(getattr(row, col)) for col in REPORT_COLUMNS])


def read_report(path: str | Path) -> list[ExperimentRow]:
    """Inverse of write_report; numeric cells round-trip exactly."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != REPORT_COLUMNS:
            raise ValueError(f"unexpected report header {header}")
        rows = []
        for cells in reader:
            if not cells:
                continue
            kwargs = {
                col: _COLUMN_TYPES[col](cell) for col, cell in zip(REPORT_COLUMNS, cells)
            }
            rows.append(ExperimentRow(**kwargs))
    return rows
