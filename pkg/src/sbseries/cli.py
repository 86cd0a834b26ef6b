"""Command-line front end.

Subcommands::

    trees     --m M --max-rho R
    expand    --tree T --calculus ito|strat
    table     --max-nodes N --format txt|json|latex
    check     --method NAME --order P [--params c1,..,c6] [--weak] [--format txt|json]
    converge  --problem sinh|nonlin2d --method NAME [--params ...] --levels 4:9
              --paths M --seed S [--csv FILE] [--summary FILE] [--config FILE]

Exit codes: 0 success / order conditions hold, 2 order conditions violated,
1 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .bseries import exact_weight
from .composition import decompositions, proper_decompositions
from .integrals import ITO, STRAT
from .order_conditions import METHODS, check_strong, check_weak
from .trees import HalfInt, Tree, TreeSyntaxError, canonical, enumerate_trees, num_nodes, parse_tree

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ["level", "h", "mean_error", "stderr_of_mean"]

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

LETTERS = "ijklmnopqrstuvwxyz"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- table rows


def _relabel(shape: Tree, start: int = 1) -> tuple[Tree, int]:
    # colors 1..n in preorder over the (canonical) shape
    color = start
    nxt = start + 1
    kids = []
    for c in shape.children:
        k, nxt = _relabel(c, nxt)
        kids.append(k)
    return Tree(color, kids), nxt


def _letters(t: Tree) -> str:
    if t.is_empty:
        return "∅"
    name = LETTERS[t.color - 1]
    if not t.children:
        return "•" + name
    return name + "[" + ",".join(_letters(c).lstrip("•") if not c.children else _letters(c) for c in t.children) + "]"


def table_rows(max_nodes: int) -> list[dict]:
    """Correction terms ``R(t)`` for every tree shape with ``<= max_nodes`` nodes.

    Shapes are labelled ``i, j, k, ...`` in preorder (colors ``1, 2, ...``),
    so every node is distinguishable.  Rows follow size, then canonical order.
    """
    if max_nodes < 1:
        raise UsageError("--max-nodes must be at least 1")
    shapes = enumerate_trees(0, max_nodes, max_nodes=max_nodes)
    shapes = sorted((s for s in shapes if num_nodes(s) <= max_nodes), key=lambda s: (num_nodes(s), s.key))
    rows = []
    for shape in shapes:
        t = canonical(_relabel(shape)[0])
        terms = [
            {"gamma": d.gamma, "theta": d.theta, "omega": list(d.omega)}
            for d in proper_decompositions(t)
        ]
        rows.append(
            {
                "tree": t,
                "label": _letters(t),
                "terms": terms,
                "phi": exact_weight(t, ITO),
                "decompositions": decompositions(t),
            }
        )
    return rows


def _term_txt(term: dict) -> str:
    g = "" if term["gamma"] == 1 else f"{term['gamma']}*"
    return g + f"Φ_im({_letters(term['theta'])})" + "".join(f"Φ({_letters(o)})" for o in term["omega"])


def _latex_tree(t: Tree) -> str:
    s = _letters(t)
    return s.replace("•", r"\bullet_")


def _term_latex(term: dict) -> str:
    g = "" if term["gamma"] == 1 else f"{term['gamma']}"
    return (
        g
        + rf"\Phi_{{im}}({_latex_tree(term['theta'])})"
        + "".join(rf"\Phi({_latex_tree(o)})" for o in term["omega"])
    )


def render_table(rows: list[dict], fmt: str) -> str:
    if fmt == "txt":
        lines = []
        for r in rows:
            body = " + ".join(_term_txt(x) for x in r["terms"]) or "0"
            lines.append(f"{r['label']}\t{body}\t{r['phi']}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = [
            {
                "tree": str(r["tree"]),
                "label": r["label"],
                "R": [
                    {"gamma": x["gamma"], "theta": str(x["theta"]), "omega": [str(o) for o in x["omega"]]}
                    for x in r["terms"]
                ],
                "phi": str(r["phi"]),
                "decompositions": [
                    {"theta": str(d.theta), "omega": [str(o) for o in d.omega], "gamma": d.gamma}
                    for d in r["decompositions"]
                ],
            }
            for r in rows
        ]
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if fmt == "latex":
        out = [r"\begin{array}{ccc}", r"\tau & \mathcal{R}(\tau) & \varphi(\tau) \\ \hline"]
        for r in rows:
            body = " + ".join(_term_latex(x) for x in r["terms"]) or "0"
            out.append(rf"{_latex_tree(r['tree'])} & {body} & {r['phi']} \\")
        out.append(r"\end{array}")
        return "\n".join(out) + "\n"
    raise UsageError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------- helpers


def parse_params(text: str | None) -> tuple[Fraction, ...] | None:
    if text is None:
        return None
    try:
        values = tuple(Fraction(x.strip()) for x in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --params {text!r}: {exc}") from None
    if len(values) != 6:
        raise UsageError(f"--params needs 6 values c1..c6, got {len(values)}")
    return values


def parse_half(text: str, flag: str) -> HalfInt:
    try:
        return HalfInt.of(text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad {flag} {text!r}: {exc}") from None


def parse_levels(text: str) -> list[int]:
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":"))
            levels = list(range(lo, hi + 1))
        else:
            levels = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --levels {text!r}; use LO:HI or a comma list") from None
    if not levels or min(levels) < 0:
        raise UsageError(f"bad --levels {text!r}")
    return levels


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------- commands


def cmd_trees(args) -> int:
    if args.m < 0:
        raise UsageError("--m must be non-negative")
    for t in enumerate_trees(args.m, parse_half(args.max_rho, "--max-rho")):
        print(t)
    return EXIT_OK


def cmd_expand(args) -> int:
    try:
        t = parse_tree(args.tree)
    except TreeSyntaxError as exc:
        raise UsageError(str(exc)) from None
    calculus = {"ito": ITO, "strat": STRAT}[args.calculus]
    print(exact_weight(t, calculus))
    return EXIT_OK


def cmd_table(args) -> int:
    sys.stdout.write(render_table(table_rows(args.max_nodes), args.format))
    return EXIT_OK


def cmd_check(args) -> int:
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(sorted(METHODS))}")
    params = parse_params(args.params)
    if params is not None and args.method != "family":
        raise UsageError(f"method {args.method!r} takes no parameters")
    spec = METHODS[args.method](params)
    order = parse_half(args.order, "--order")
    if args.weak:
        if order.twice % 2:
            raise UsageError("weak order must be an integer")
        report = check_weak(spec, order.twice // 2)
    else:
        report = check_strong(spec, order)
    if args.format == "json":
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print(report)
    return EXIT_OK if report.passed else EXIT_FAIL


CONVERGE_DEFAULTS = {
    "problem": "sinh",
    "method": "family",
    "params": None,
    "levels": "4:9",
    "paths": 500,
    "seed": 42,
    "workers": 1,
    "chunk": 100,
    "solver": "newton",
    "tol": 1e-12,
    "max_iter": 50,
    "damping": 0.5,
    "csv": None,
    "summary": None,
}


def _converge_config(args) -> dict:
    cfg = dict(CONVERGE_DEFAULTS)
    if args.config:
        try:
            file_cfg = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    try:
        for key in ("paths", "seed", "workers", "chunk", "max_iter"):
            cfg[key] = int(cfg[key])
        for key in ("tol", "damping"):
            cfg[key] = float(cfg[key])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg["paths"] <= 0:
        raise UsageError("--paths must be positive")
    if cfg["workers"] <= 0 or cfg["chunk"] <= 0:
        raise UsageError("--workers and --chunk must be positive")
    return cfg


def cmd_converge(args) -> int:
    from .sde_lab.problems import PROBLEMS, get_problem
    from .sde_lab.steppers import StepperConfig, make_method
    from .sde_lab.study import StudyAborted, strong_error_study

    cfg = _converge_config(args)
    if cfg["problem"] not in PROBLEMS:
        raise UsageError(f"unknown problem {cfg['problem']!r}; choose from {', '.join(sorted(PROBLEMS))}")
    levels = parse_levels(str(cfg["levels"]))
    params = parse_params(cfg["params"])
    try:
        step_cfg = StepperConfig(cfg["solver"], cfg["tol"], cfg["max_iter"], cfg["damping"])
        method = make_method(cfg["method"], params, step_cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    problem = get_problem(cfg["problem"])

    start = time.perf_counter()
    try:
        result = strong_error_study(
            method, problem, levels=levels, paths=cfg["paths"], seed=cfg["seed"],
            workers=cfg["workers"], chunk=cfg["chunk"],
        )
    except StudyAborted as exc:
        print(f"study aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    wall = time.perf_counter() - start

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in result.levels:
        writer.writerow([r.level, repr(r.h), repr(r.mean_error), repr(r.stderr)])
    if cfg["csv"]:
        with open(cfg["csv"], "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())

    summary = {
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "csv_columns": CSV_COLUMNS,
        "slope": result.as_dict()["slope"],
        "intercept": result.as_dict()["intercept"],
        "seed": cfg["seed"],
        "reference": result.reference,
        "config": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in cfg.items()},
        "method_name": result.method,
        "failures": {str(r.level): r.failed for r in result.levels},
        "wall_time_s": wall,
        "version": __version__,
    }
    if params is not None:
        summary["config"]["params"] = [str(c) for c in params]
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if cfg["summary"]:
        with open(cfg["summary"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(f"slope = {result.slope:.4f}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbseries", description="Stochastic B-series toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("trees", help="enumerate colored trees")
    p.add_argument("--m", type=int, required=True, help="number of noise channels")
    p.add_argument("--max-rho", required=True, help="order bound, e.g. 3/2")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("expand", help="exact weight of a tree")
    p.add_argument("--tree", required=True, help='tree literal, e.g. "0[1,1[2,2]]"')
    p.add_argument("--calculus", choices=["ito", "strat"], default="ito")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("table", help="implicit correction terms R per tree")
    p.add_argument("--max-nodes", type=int, default=4)
    p.add_argument("--format", choices=["txt", "json", "latex"], default="txt")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("check", help="check order conditions of a method")
    p.add_argument("--method", required=True)
    p.add_argument("--order", required=True, help="order p, e.g. 1.5 or 3/2")
    p.add_argument("--params", help="c1,..,c6 for the family")
    p.add_argument("--weak", action="store_true", help="weak instead of strong conditions")
    p.add_argument("--format", choices=["txt", "json"], default="txt")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("converge", help="strong-error convergence study")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--problem")
    p.add_argument("--method", choices=["euler", "milstein", "family", "taylor15"])
    p.add_argument("--params")
    p.add_argument("--levels", help="LO:HI (h = 2^-L) or comma list")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--chunk", type=int)
    p.add_argument("--solver", choices=["newton", "fixed-point"])
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--damping", type=float)
    p.add_argument("--csv", help="CSV output path (default stdout)")
    p.add_argument("--summary", help="JSON summary path")
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
