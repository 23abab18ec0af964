"""Emission of standalone C99 inference kernels and benchmark drivers.

Two kernel styles with identical semantics:

* ``ifelse``: each tree becomes a function of nested conditionals.
* ``native``: each tree becomes a static node array (ordered by a layout
  strategy) walked by a small loop.

Thresholds are printed as shortest round-trip decimal literals, so compiled
comparisons reproduce the interpreter's float64 comparisons bit-exactly.
Emission is pure text generation: the same serialized forest always yields
byte-identical sources.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .layout import STRATEGIES, flatten
from .trainer import Forest, TreeNode, forest_to_dict

__all__ = [
    "EmittedBundle",
    "KERNEL_STYLES",
    "NestingLimitError",
    "UnboundAnchorError",
    "emit_driver",
    "emit_ifelse",
    "emit_kernel",
    "emit_native",
    "forest_fingerprint",
    "harness_file",
    "instantiate",
    "write_bundle",
]

KERNEL_STYLES = ("ifelse", "native")

DEFAULT_NESTING_LIMIT = 64
DEFAULT_REPS = 50

_ANCHOR = re.compile(r"@([A-Z][A-Z0-9_]*)@")

_HARNESS_FILES = ("csv_loader.c", "csv_loader.h", "harness_timer.h")
_DRIVER_TEMPLATE = "driver_main.c.in"


class NestingLimitError(ValueError):
    """A tree is too deep to emit as nested conditionals."""


class UnboundAnchorError(ValueError):
    """Template instantiation left an anchor unbound, or a binding matched no anchor."""


def harness_file(name: str) -> str:
    """Text of a bundled harness source file."""
    return (resources.files("treereg") / "_harness" / name).read_text(encoding="utf-8")


def instantiate(template: str, bindings: dict[str, str]) -> str:
    """Replace every @NAME@ anchor with its binding.

    Errors name the offending anchor: anchors without a binding and bindings
    that match no anchor are both rejected.
    """
    anchors = set(_ANCHOR.findall(template))
    missing = anchors - set(bindings)
    if missing:
        raise UnboundAnchorError(f"missing bindings for anchors: {', '.join(sorted(missing))}")
    unknown = set(bindings) - anchors
    if unknown:
        raise UnboundAnchorError(f"bindings match no template anchor: {', '.join(sorted(unknown))}")
    return _ANCHOR.sub(lambda m: str(bindings[m.group(1)]), template)


def forest_fingerprint(forest: Forest) -> str:
    doc = json.dumps(forest_to_dict(forest), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EmittedBundle:
    """Generated sources plus the metadata needed to compile and run them."""

    kernel_style: str
    layout_strategy: str  # "none" for ifelse kernels
    kernel_source: str
    forest_fingerprint: str
    forest_fn: str
    n_features: int
    n_classes: int
    reps: int = DEFAULT_REPS
    driver_source: str | None = None
    support_files: tuple[str, ...] = ()
    test_csv_path: str | None = None


def _c_float(value: float) -> str:
    # repr() of a Python float is the shortest decimal that parses back to
    # the same 64-bit value; C compilers round decimal literals the same way.
    return repr(float(value))


def _tree_depth(node: TreeNode) -> int:
    if node.kind == "leaf":
        return 0
    return 1 + max(_tree_depth(node.left), _tree_depth(node.right))


def _vote_function(fn_name: str, n_trees: int, n_classes: int) -> list[str]:
    lines = [
        f"int32_t {fn_name}(const double *x)",
        "{",
        f"    int32_t votes[{n_classes}] = {{0}};",
        "    int32_t best = 0;",
        "    int32_t c;",
    ]
    for t in range(n_trees):
        lines.append(f"    votes[tree_{t}(x)] += 1;")
    lines += [
        f"    for (c = 1; c < {n_classes}; c++) {{",
        "        if (votes[c] > votes[best]) {",
        "            best = c;",
        "        }",
        "    }",
        "    return best;",
        "}",
    ]
    return lines


def _emit_ifelse_node(node: TreeNode, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    if node.kind == "leaf":
        out.append(f"{pad}return {int(node.predicted_class)};")
        return
    out.append(f"{pad}if (x[{int(node.feature_index)}] <= {_c_float(node.threshold)}) {{")
    _emit_ifelse_node(node.left, indent + 1, out)
    out.append(f"{pad}}} else {{")
    _emit_ifelse_node(node.right, indent + 1, out)
    out.append(f"{pad}}}")


def emit_ifelse(
    forest: Forest,
    forest_fn: str = "forest_predict",
    nesting_limit: int = DEFAULT_NESTING_LIMIT,
) -> EmittedBundle:
    """Kernel of nested conditionals, one function per tree plus the vote.

    Raises NestingLimitError when any tree is deeper than nesting_limit; use
    emit_kernel for the automatic fallback to the native style.
    """
    for t, tree in enumerate(forest.trees):
        depth = _tree_depth(tree.root)
        if depth > nesting_limit:
            raise NestingLimitError(
                f"tree {t} depth {depth} exceeds the nesting limit {nesting_limit}"
            )
    lines = [
        "/* Generated decision-forest kernel: nested-conditional style.",
        f" * trees={len(forest.trees)} features={forest.n_features} classes={forest.n_classes}",
        f" * forest_sha256={forest_fingerprint(forest)}",
        " */",
        "#include <stdint.h>",
        "",
    ]
    for t, tree in enumerate(forest.trees):
        lines.append(f"static int32_t tree_{t}(const double *x)")
        lines.append("{")
        if tree.root.kind == "leaf":
            lines.append("    (void)x;")
        _emit_ifelse_node(tree.root, 1, lines)
        lines.append("}")
        lines.append("")
    lines += _vote_function(forest_fn, len(forest.trees), forest.n_classes)
    return EmittedBundle(
        kernel_style="ifelse",
        layout_strategy="none",
        kernel_source="\n".join(lines) + "\n",
        forest_fingerprint=forest_fingerprint(forest),
        forest_fn=forest_fn,
        n_features=forest.n_features,
        n_classes=forest.n_classes,
    )


def emit_native(
    forest: Forest,
    strategy: str = "bfs_default",
    forest_fn: str = "forest_predict",
) -> EmittedBundle:
    """Kernel of static node arrays in the layout order plus a traversal loop."""
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    lines = [
        "/* Generated decision-forest kernel: flat-array style.",
        f" * trees={len(forest.trees)} features={forest.n_features} classes={forest.n_classes}",
        f" * layout={strategy} forest_sha256={forest_fingerprint(forest)}",
        " */",
        "#include <stdint.h>",
        "",
        "typedef struct {",
        "    int32_t feature; /* -1 marks a leaf */",
        "    int32_t left;",
        "    int32_t right;",
        "    int32_t klass;   /* class index, leaves only */",
        "    double threshold;",
        "} tr_node;",
        "",
    ]
    for t, tree in enumerate(forest.trees):
        array = flatten(tree, strategy)
        lines.append(f"static const tr_node tree_{t}_nodes[{len(array.nodes)}] = {{")
        for rec in array.nodes:
            if rec.leaf_flag:
                lines.append(f"    {{-1, -1, -1, {rec.class_index}, 0.0}},")
            else:
                lines.append(
                    f"    {{{rec.feature_index}, {rec.left_index}, {rec.right_index}, "
                    f"-1, {_c_float(rec.threshold)}}},"
                )
        lines.append("};")
        lines.append("")
        lines += [
            f"static int32_t tree_{t}(const double *x)",
            "{",
            "    int32_t i = 0;",
            f"    while (tree_{t}_nodes[i].feature >= 0) {{",
            f"        const tr_node *n = &tree_{t}_nodes[i];",
            "        i = (x[n->feature] <= n->threshold) ? n->left : n->right;",
            "    }",
            f"    return tree_{t}_nodes[i].klass;",
            "}",
            "",
        ]
    lines += _vote_function(forest_fn, len(forest.trees), forest.n_classes)
    return EmittedBundle(
        kernel_style="native",
        layout_strategy=strategy,
        kernel_source="\n".join(lines) + "\n",
        forest_fingerprint=forest_fingerprint(forest),
        forest_fn=forest_fn,
        n_features=forest.n_features,
        n_classes=forest.n_classes,
    )


def emit_kernel(
    forest: Forest,
    style: str,
    strategy: str = "bfs_default",
    forest_fn: str = "forest_predict",
    nesting_limit: int = DEFAULT_NESTING_LIMIT,
) -> EmittedBundle:
    """Style dispatch; ifelse requests over the nesting limit fall back to native."""
    if style == "ifelse":
        try:
            return emit_ifelse(forest, forest_fn, nesting_limit)
        except NestingLimitError:
            return emit_native(forest, strategy, forest_fn)
    if style == "native":
        return emit_native(forest, strategy, forest_fn)
    raise ValueError(f"style must be one of {KERNEL_STYLES}, got {style!r}")


def emit_driver(
    bundle: EmittedBundle,
    test_csv_path: str | None = None,
    reps: int = DEFAULT_REPS,
) -> EmittedBundle:
    """Complete a kernel bundle with the instantiated driver and harness sources.

    The driver binary takes the test CSV path as its first argument;
    test_csv_path is carried as bundle metadata for benchmark orchestration.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    driver = instantiate(
        harness_file(_DRIVER_TEMPLATE),
        {
            "FOREST_FN": bundle.forest_fn,
            "N_FEATURES": str(bundle.n_features),
            "N_CLASSES": str(bundle.n_classes),
            "REPS": str(reps),
            "KERNEL_STYLE": bundle.kernel_style,
        },
    )
    return replace(
        bundle,
        reps=reps,
        driver_source=driver,
        support_files=_HARNESS_FILES,
        test_csv_path=test_csv_path,
    )


def write_bundle(bundle: EmittedBundle, out_dir: str | Path) -> list[Path]:
    """Write kernel.c, driver.c, and harness sources into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if bundle.driver_source is None:
        raise ValueError("bundle has no driver; call emit_driver first")
    written = []
    for name, text in [("kernel.c", bundle.kernel_source), ("driver.c", bundle.driver_source)]:
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    for name in bundle.support_files:
        path = out / name
        path.write_text(harness_file(name), encoding="utf-8")
        written.append(path)
    return written
