"""Command-line entry point: train / synth / tune / bench / codegen / layout
/ report subcommands over the library modules.

Every run writes a manifest next to its outputs holding the tool version,
the resolved configuration, and sha256 fingerprints of the input files, and
nothing time-dependent: two runs with identical manifests produce identical
non-timing outputs.  Output files are written atomically (temp + rename).

Exit codes: 0 success, 2 validation/usage error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
from collections import defaultdict
from pathlib import Path

from . import __version__
from . import bench as bench_mod
from .codegen import emit_driver, emit_kernel, harness_file
from .dataset import load_csv, save_csv
from .layout import STRATEGIES, forest_layout_document
from .synthgen import DEPENDENCE_MODES, OUTCOME_MODELS, FEATURE_NAMES, ORIGIN_NAMES, SynthConfig, generate
from .trainer import TrainParams, load_forest, forest_to_dict, resolve_max_features, train_forest
from .tuner import DEFAULT_SCHEDULE, best_lambda_under_budget, pareto_front, tune_lambda, write_trace_csv

# Accepted aliases for the synthetic outcome models: short codes name the
# number of origin flags the formula reads.
MODEL_ALIASES = {
    "simple": "simple", "s1": "simple",
    "medium": "medium", "s3": "medium",
    "complex": "complex", "s5": "complex",
}
DEPENDENCE_ALIASES = {
    "independent": "independent",
    "weakly_dependent": "weakly_dependent", "weak": "weakly_dependent",
    "strongly_dependent": "strongly_dependent", "strong": "strongly_dependent",
}


def _model_token(value: str) -> str:
    key = value.strip().lower()
    if key not in MODEL_ALIASES:
        accepted = "S1, S3, S5, simple, medium, complex"
        raise argparse.ArgumentTypeError(f"invalid model {value!r}; accepted: {accepted}")
    return MODEL_ALIASES[key]


def _dependence_token(value: str) -> str:
    key = value.strip().lower()
    if key not in DEPENDENCE_ALIASES:
        raise argparse.ArgumentTypeError(
            f"invalid dependence {value!r}; accepted: {', '.join(DEPENDENCE_MODES)}"
        )
    return DEPENDENCE_ALIASES[key]


def _label_col(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def _float_list(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from None


def _int_list(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def _str_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip() != ""]


# ---------------------------------------------------------------- plumbing


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def _manifest_config(args: argparse.Namespace) -> dict:
    skip = {"func", "config", "subcommand"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_manifest(
    manifest_path: Path,
    subcommand: str,
    args: argparse.Namespace,
    inputs: list[str | Path],
    outputs: list[str],
    result: dict | None = None,
) -> None:
    payload = {
        "tool": "treereg",
        "version": __version__,
        "subcommand": subcommand,
        "config": _manifest_config(args),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": sorted(outputs),
    }
    if result is not None:
        payload["result"] = result
    _atomic_write_text(manifest_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _file_manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else str(v) for v in row])
    _atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------- subcommands


def cmd_train(args: argparse.Namespace) -> int:
    ds = load_csv(args.data, args.label_col)
    params = TrainParams(
        max_depth=args.depth,
        n_trees=args.trees,
        max_features=resolve_max_features(args.max_features, ds.n_features),
        reg_lambda=args.reg_lambda,
        bootstrap=args.bootstrap,
        seed=args.seed,
        min_samples_split=args.min_samples_split,
    )
    forest = train_forest(ds, params, jobs=args.jobs)
    out = Path(args.out)
    _atomic_write_text(out, json.dumps(forest_to_dict(forest), indent=2, sort_keys=True) + "\n")
    _write_manifest(_file_manifest_path(out), "train", args, [args.data], [out.name])
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        dependence=args.dependence,
        model=args.model,
        balance=args.balance,
        delta_mu=args.delta_mu,
        num=args.num,
        seed=args.seed,
    )
    ds = generate(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out, feature_names=list(FEATURE_NAMES), label_name="label")
    outputs = [out.name]
    if args.origins_out:
        rows = [[int(v) for v in row] for row in ds.origins]
        _write_csv(Path(args.origins_out), list(ORIGIN_NAMES), rows)
        outputs.append(Path(args.origins_out).name)
    _write_manifest(_file_manifest_path(out), "synth", args, [], outputs)
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    ds = load_csv(args.data, args.label_col)
    params = TrainParams(
        max_depth=args.depth,
        n_trees=args.trees,
        max_features=resolve_max_features(args.max_features, ds.n_features),
        bootstrap=args.bootstrap,
        seed=args.seed,
    )
    trace = tune_lambda(
        ds,
        params,
        threshold=args.threshold,
        schedule=args.schedule,
        lambda_cap=args.cap,
        n_repetitions=args.repetitions,
        test_fraction=args.test_fraction,
        accuracy_budget=args.budget,
        stop_early=not args.full_schedule,
        jobs=args.jobs,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out)
    result = {"chosen_lambda": trace.chosen_lambda, "stop_reason": trace.stop_reason}
    _write_manifest(_file_manifest_path(out), "tune", args, [args.data], [out.name], result)
    print(f"chosen_lambda={trace.chosen_lambda!r} stop_reason={trace.stop_reason}")
    return 0


def _parse_dataset_specs(specs: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep:
            name, path = Path(spec).stem, spec
        if name in out:
            raise ValueError(f"duplicate dataset name {name!r}")
        out[name] = path
    return out


def cmd_bench(args: argparse.Namespace) -> int:
    specs = _parse_dataset_specs(args.data)
    datasets = {name: load_csv(path, args.label_col) for name, path in specs.items()}
    rows = bench_mod.run_grid(
        datasets,
        lambdas=args.lambdas,
        depths=args.depths,
        n_trees_list=args.trees,
        max_features_list=args.max_features,
        seed=args.seed,
        n_repetitions=args.repetitions,
        test_fraction=args.test_fraction,
        styles=args.styles,
        timing_reps=args.timing_reps,
        bootstrap=args.bootstrap,
        jobs=args.jobs,
        compiler=None if args.no_compile else "auto",
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench_mod.write_report(rows, out)
    _write_manifest(_file_manifest_path(out), "bench", args, list(specs.values()), [out.name])
    return 0


def cmd_codegen(args: argparse.Namespace) -> int:
    forest = load_forest(args.forest)
    bundle = emit_kernel(
        forest,
        style=args.style,
        strategy=args.layout,
        forest_fn=args.fn,
        nesting_limit=args.nesting_limit,
    )
    if bundle.kernel_style != args.style:
        print(
            f"note: requested style {args.style} exceeded the nesting limit; emitted native",
            file=sys.stderr,
        )
    bundle = emit_driver(bundle, args.test_csv, reps=args.reps)
    out_dir = Path(args.out_dir)
    files = {"kernel.c": bundle.kernel_source, "driver.c": bundle.driver_source}
    for name in bundle.support_files:
        files[name] = harness_file(name)
    for name, text in files.items():
        _atomic_write_text(out_dir / name, text)
    result = {"forest_fingerprint": bundle.forest_fingerprint, "kernel_style": bundle.kernel_style}
    _write_manifest(out_dir / "manifest.json", "codegen", args, [args.forest], sorted(files), result)
    return 0


def cmd_layout(args: argparse.Namespace) -> int:
    forest = load_forest(args.forest)
    doc = forest_layout_document(forest, args.strategy)
    out = Path(args.out)
    _atomic_write_text(out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _write_manifest(_file_manifest_path(out), "layout", args, [args.forest], [out.name])
    return 0


_CONFIG_KEY = (
    "dataset", "max_depth", "n_trees", "max_features", "kernel_style", "layout_strategy"
)


def _averaged_rows(rows) -> list[dict]:
    """Mean metrics per configuration over split repetitions."""
    groups: dict[tuple, list] = defaultdict(list)
    for r in rows:
        key = (r.dataset, r.reg_lambda, r.max_depth, r.n_trees, r.max_features,
               r.kernel_style, r.layout_strategy)
        groups[key].append(r)
    out = []
    for key, members in sorted(groups.items(), key=lambda kv: kv[0]):
        n = len(members)
        out.append({
            "dataset": key[0],
            "reg_lambda": key[1],
            "max_depth": key[2],
            "n_trees": key[3],
            "max_features": key[4],
            "kernel_style": key[5],
            "layout_strategy": key[6],
            "balanced_accuracy": sum(m.balanced_accuracy for m in members) / n,
            "expected_depth": sum(m.expected_depth for m in members) / n,
            "mean_ns_per_sample": sum(m.mean_ns_per_sample for m in members) / n,
            "relative_time": sum(m.relative_time for m in members) / n,
            "accuracy_drop": sum(m.accuracy_drop for m in members) / n,
        })
    return out


def cmd_report(args: argparse.Namespace) -> int:
    rows = bench_mod.read_report(args.grid)
    averaged = _averaged_rows(rows)
    out_dir = Path(args.out_dir)

    # Pareto front per dataset over repetition-averaged points.
    pareto_rows = []
    datasets = sorted({r["dataset"] for r in averaged})
    for name in datasets:
        points = [r for r in averaged if r["dataset"] == name]
        front = pareto_front(points, key=lambda r: (r["accuracy_drop"], r["relative_time"]))
        for r in front:
            pareto_rows.append([
                r["dataset"], r["reg_lambda"], r["max_depth"], r["n_trees"], r["max_features"],
                r["kernel_style"], r["layout_strategy"], r["accuracy_drop"], r["relative_time"],
                r["balanced_accuracy"], r["expected_depth"], r["mean_ns_per_sample"],
            ])
    _write_csv(
        out_dir / "pareto.csv",
        ["dataset", "reg_lambda", "max_depth", "n_trees", "max_features", "kernel_style",
         "layout_strategy", "accuracy_drop", "relative_time", "balanced_accuracy",
         "expected_depth", "mean_ns_per_sample"],
        pareto_rows,
    )

    # Per-dataset relative frequency of the maximum penalty weight whose
    # accuracy drop stays within the budget, counted over per-repetition runs.
    freq_rows = []
    for name in datasets:
        groups: dict[tuple, list] = defaultdict(list)
        for r in rows:
            if r.dataset == name:
                groups[(r.max_depth, r.n_trees, r.max_features, r.kernel_style,
                        r.layout_strategy, r.repetition)].append(r)
        max_lambdas = []
        for members in groups.values():
            admissible = [m.reg_lambda for m in members if m.accuracy_drop <= args.budget]
            if admissible:
                max_lambdas.append(max(admissible))
        counts: dict[float, int] = defaultdict(int)
        for lam in max_lambdas:
            counts[lam] += 1
        for lam in sorted(counts):
            freq_rows.append([name, lam, counts[lam], counts[lam] / len(max_lambdas)])
    _write_csv(
        out_dir / "max_lambda_freq.csv",
        ["dataset", "max_lambda", "count", "relative_frequency"],
        freq_rows,
    )

    # Best weight under the accuracy budget per configuration (averaged rows).
    best_rows = []
    for name in datasets:
        configs: dict[tuple, list] = defaultdict(list)
        for r in averaged:
            if r["dataset"] == name:
                configs[(r["max_depth"], r["n_trees"], r["max_features"],
                         r["kernel_style"], r["layout_strategy"])].append(r)
        for key in sorted(configs):
            members = configs[key]
            best = best_lambda_under_budget(
                [(m["reg_lambda"], m["accuracy_drop"], m["mean_ns_per_sample"]) for m in members],
                args.budget,
            )
            best_rows.append([name, *key, best])
    _write_csv(
        out_dir / "best_lambda.csv",
        ["dataset", "max_depth", "n_trees", "max_features", "kernel_style",
         "layout_strategy", "best_lambda"],
        best_rows,
    )

    _write_manifest(
        out_dir / "manifest.json", "report", args, [args.grid],
        ["pareto.csv", "max_lambda_freq.csv", "best_lambda.csv"],
    )
    return 0


# ---------------------------------------------------------------- parser


def _add_common_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", required=True, help="input CSV (header row, label column last)")
    sub.add_argument("--label-col", type=_label_col, default=None,
                     help="label column name or index (default: last column)")
    sub.add_argument("--depth", type=int, default=20, help="maximum tree depth")
    sub.add_argument("--trees", type=int, default=1, help="number of trees")
    sub.add_argument("--max-features", default="all",
                     help="per-node feature subset: integer or half-sqrt/sqrt/twice-sqrt/all")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--bootstrap", action=argparse.BooleanOptionalAction, default=True,
                     help="train each tree on a bootstrap resample")
    sub.add_argument("--jobs", type=int, default=1, help="parallel training workers")


def build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="treereg",
        description="Decision-forest training with an uneven-split penalty, depth analysis, "
                    "penalty tuning, cache-aware layout, C kernel generation, and benchmarking.",
    )
    parser.add_argument("--version", action="version", version=f"treereg {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    created = []

    def new_sub(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subs.add_parser(name, help=help_text)
        sub.add_argument("--config", default=None,
                         help="JSON file of flag defaults (flag names with dashes or underscores)")
        created.append(sub)
        return sub

    sub = new_sub("train", "train a forest and write it as JSON")
    _add_common_train_flags(sub)
    sub.add_argument("--lambda", dest="reg_lambda", type=float, default=0.0,
                     help="uneven-split penalty weight (0 = plain CART)")
    sub.add_argument("--min-samples-split", type=int, default=2)
    sub.add_argument("--out", required=True, help="output forest JSON path")
    sub.set_defaults(func=cmd_train)

    sub = new_sub("synth", "generate a synthetic classification CSV")
    sub.add_argument("--dependence", type=_dependence_token, default="independent",
                     help="independent | weakly_dependent | strongly_dependent")
    sub.add_argument("--model", type=_model_token, default="simple",
                     help="outcome formula: S1/simple, S3/medium, S5/complex")
    sub.add_argument("--balance", type=float, default=0.5,
                     help="mixture weight of feature x1 (class prior under the simple model)")
    sub.add_argument("--delta-mu", type=float, default=0.0,
                     help="mean shift of every second mixture component")
    sub.add_argument("--num", type=int, default=1000, help="number of rows")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="output CSV path")
    sub.add_argument("--origins-out", default=None,
                     help="optional sidecar CSV of per-row mixture origin flags")
    sub.set_defaults(func=cmd_synth)

    sub = new_sub("tune", "walk the penalty schedule until expected depth converges")
    _add_common_train_flags(sub)
    sub.add_argument("--threshold", type=float, default=0.05,
                     help="relative expected-depth change that counts as converged")
    sub.add_argument("--cap", type=float, default=40.0, help="largest penalty weight to try")
    sub.add_argument("--schedule", type=_float_list, default=list(DEFAULT_SCHEDULE),
                     help="comma-separated increasing weights starting at 0")
    sub.add_argument("--repetitions", type=int, default=8, help="train/test split repetitions")
    sub.add_argument("--test-fraction", type=float, default=0.25)
    sub.add_argument("--budget", type=float, default=None,
                     help="optional balanced-accuracy budget; exceeding it stops the walk")
    sub.add_argument("--full-schedule", action="store_true",
                     help="evaluate the whole schedule even after the stop triggers")
    sub.add_argument("--out", required=True, help="output trace CSV path")
    sub.set_defaults(func=cmd_tune)

    sub = new_sub("bench", "run the experiment grid and write a report CSV")
    sub.add_argument("--data", action="append", required=True, metavar="NAME=PATH",
                     help="dataset CSV, repeatable; bare paths use the file stem as name")
    sub.add_argument("--label-col", type=_label_col, default=None)
    sub.add_argument("--lambdas", type=_float_list, default=[0.0],
                     help="penalty weights; must include 0")
    sub.add_argument("--depths", type=_int_list, default=[1, 5, 15, 20])
    sub.add_argument("--trees", type=_int_list, default=[16])
    sub.add_argument("--max-features", type=_str_list,
                     default=["half-sqrt", "sqrt", "twice-sqrt", "all"])
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--repetitions", type=int, default=8)
    sub.add_argument("--test-fraction", type=float, default=0.25)
    sub.add_argument("--timing-reps", type=int, default=50)
    sub.add_argument("--styles", type=_str_list, default=None,
                     help="interpreter, ifelse, native:bfs_default, native:probability_greedy")
    sub.add_argument("--no-compile", action="store_true",
                     help="skip the C toolchain even if present (interpreter timing only)")
    sub.add_argument("--bootstrap", action=argparse.BooleanOptionalAction, default=True)
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--out", required=True, help="output report CSV path")
    sub.set_defaults(func=cmd_bench)

    sub = new_sub("codegen", "emit C kernel + benchmark driver sources for a forest")
    sub.add_argument("--forest", required=True, help="forest JSON path")
    sub.add_argument("--style", choices=["ifelse", "native"], default="ifelse")
    sub.add_argument("--layout", choices=list(STRATEGIES), default="bfs_default",
                     help="node order for the native style")
    sub.add_argument("--reps", type=int, default=50, help="timed repetitions in the driver")
    sub.add_argument("--test-csv", default=None, help="test CSV path recorded for orchestration")
    sub.add_argument("--fn", default="forest_predict", help="kernel entry-point name")
    sub.add_argument("--nesting-limit", type=int, default=64)
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=cmd_codegen)

    sub = new_sub("layout", "write forest JSON with per-tree layout orders")
    sub.add_argument("--forest", required=True)
    sub.add_argument("--strategy", choices=list(STRATEGIES), required=True)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_layout)

    sub = new_sub("report", "derive pareto/best-lambda/frequency tables from a report CSV")
    sub.add_argument("--grid", required=True, help="report CSV from the bench subcommand")
    sub.add_argument("--budget", type=float, default=0.05,
                     help="balanced-accuracy drop budget")
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=cmd_report)

    return parser, created


def _config_defaults(argv: list[str]) -> dict | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            break
        if token.startswith("--config="):
            path = token.split("=", 1)[1]
            break
    else:
        return None
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    mapped = {}
    for key, value in raw.items():
        attr = key.replace("-", "_")
        if attr == "lambda":
            attr = "reg_lambda"
        mapped[attr] = value
    return mapped


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        defaults = _config_defaults(argv)
    except (OSError, ValueError) as exc:
        print(f"treereg: error: {exc}", file=sys.stderr)
        return 2
    if defaults:
        for sub in subparsers:
            sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"treereg {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary between exit codes 1 and 2
        print(f"treereg {args.subcommand}: internal error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
