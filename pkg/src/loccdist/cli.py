"""Command line interface.

Subcommands: check, catalog, simulate, decompose, oracle.  Exit codes carry
the verdict (0 distinguishable or success, 1 indistinguishable or imperfect,
2 unknown) and failures are split into usage (64), data (65), and internal
numerical (70) classes.  All JSON output is canonical and echoes the
tolerance in use.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .distinguish import (
    TraceLeaf,
    TraceNode,
    TraceSplit,
    TraceStuck,
    Verdict,
    decide,
    verdict_to_json,
)
from .ensemble import (
    CATALOG_NAMES,
    catalog,
    emit_ensemble,
    parse_ensemble,
    random_product_basis,
)
from .errors import (
    LoccError,
    NotFoundError,
    NumericalInstabilityError,
    TooLargeError,
)
from .jsonio import canonical_dumps, parse_json
from .linalg import DEFAULT_TOL, LocalVector, parse_matrix
from .oracle import exhaustive_decide
from .simulate import (
    BUILTIN_PROTOCOL_NAMES,
    LocalOperator,
    builtin_protocol,
    canonicalize_operator,
    parse_sim_protocol,
    report_to_json,
    run_protocol,
)

__all__ = [
    "EXIT_DATA",
    "EXIT_INDISTINGUISHABLE",
    "EXIT_INTERNAL",
    "EXIT_OK",
    "EXIT_UNKNOWN",
    "EXIT_USAGE",
    "entry",
    "main",
]

EXIT_OK = 0
EXIT_INDISTINGUISHABLE = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise LoccError(f"cannot read {path}: {exc}") from None


def _resolve_tol(args: argparse.Namespace) -> float:
    if args.tol is not None:
        if args.tol <= 0:
            raise _UsageError(f"--tol must be positive, got {args.tol}")
        return args.tol
    env = os.environ.get("LOCC_TOL")
    if env:
        try:
            value = float(env)
        except ValueError:
            raise _UsageError(f"LOCC_TOL is not a number: {env!r}") from None
        if value <= 0:
            raise _UsageError(f"LOCC_TOL must be positive, got {env!r}")
        return value
    return DEFAULT_TOL


def _render_trace(node: TraceNode, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(node, TraceLeaf):
        return [f"{pad}identified {node.label}"]
    if isinstance(node, TraceStuck):
        labels = " ".join(node.certificate.subset)
        return [
            f"{pad}stuck: {len(node.certificate.subset)} states "
            f"{{{labels}}} with every party's graph connected"
        ]
    assert isinstance(node, TraceSplit)
    lines = [
        f"{pad}measure party {node.step.party}: "
        f"{len(node.step.outcomes)} outcomes over {len(node.subset)} states"
    ]
    for i, (outcome, child) in enumerate(zip(node.step.outcomes, node.children)):
        labels = " ".join(outcome.block)
        lines.append(f"{pad}  outcome {i} keeps {{{labels}}}:")
        lines.extend(_render_trace(child, indent + 2))
    return lines


def _verdict_exit(v: Verdict) -> int:
    if v.kind == "distinguishable":
        return EXIT_OK
    if v.kind == "indistinguishable":
        return EXIT_INDISTINGUISHABLE
    return EXIT_UNKNOWN


def _cmd_check(args: argparse.Namespace) -> int:
    tol = _resolve_tol(args)
    e = parse_ensemble(_read_file(args.ensemble), tol)
    mode = args.mode
    if mode == "auto":
        mode = "complete" if e.complete else "incomplete"
    v = decide(e, mode, tol)
    if args.json:
        doc: dict = {"tol": tol, "mode": mode}
        doc.update(verdict_to_json(v))
        print(canonical_dumps(doc))
    else:
        human = {"distinguishable": "distinguishable",
                 "indistinguishable": "indistinguishable",
                 "unknown": "unknown (projective-stuck)"}[v.kind]
        print(human)
        if args.trace and v.trace is not None:
            print("\n".join(_render_trace(v.trace)))
    return _verdict_exit(v)


def _cmd_catalog(args: argparse.Namespace) -> int:
    if args.action == "list":
        for name in CATALOG_NAMES:
            print(name)
        return EXIT_OK
    if not args.name:
        raise _UsageError("catalog emit requires a NAME")
    tol = _resolve_tol(args)
    try:
        e = catalog(args.name)
    except NotFoundError as exc:
        raise _UsageError(str(exc)) from None
    text = emit_ensemble(e, tol)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    tol = _resolve_tol(args)
    if (args.protocol is None) == (args.builtin is None):
        raise _UsageError("provide exactly one of PROTOCOL or --builtin")
    e = parse_ensemble(_read_file(args.ensemble), tol)
    if args.builtin is not None:
        try:
            root = builtin_protocol(args.builtin, e, tol)
        except NotFoundError as exc:
            raise _UsageError(str(exc)) from None
    else:
        root = parse_sim_protocol(_read_file(args.protocol))
    report = run_protocol(e, root, tol)
    doc: dict = {"tol": tol}
    doc.update(report_to_json(report))
    print(canonical_dumps(doc))
    return EXIT_OK if report.perfect else EXIT_INDISTINGUISHABLE


def _vector_json(v: LocalVector) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in v.entries]


def _cmd_decompose(args: argparse.Namespace) -> int:
    tol = _resolve_tol(args)
    matrix = parse_matrix(parse_json(_read_file(args.matrix)))
    result = canonicalize_operator(LocalOperator(0, matrix), tol)
    svd = result.svd
    doc = {
        "tol": tol,
        "rows": matrix.shape[0],
        "cols": matrix.shape[1],
        "sigmas": [float(s) for s in svd.sigmas],
        "rank": svd.rank,
        "physical": result.physical,
        "left": [_vector_json(v) for v in svd.left],
        "right": [_vector_json(v) for v in svd.right],
    }
    print(canonical_dumps(doc))
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    tol = _resolve_tol(args)
    ensembles = []
    if args.ensemble is not None:
        if args.seed_sweep is not None:
            raise _UsageError("give either an ensemble path or --seed-sweep, not both")
        ensembles.append(parse_ensemble(_read_file(args.ensemble), tol))
    else:
        if args.seed_sweep is None:
            raise _UsageError("oracle needs an ensemble path or --seed-sweep")
        if not args.dims:
            raise _UsageError("--seed-sweep requires --dims, e.g. --dims=2,3")
        try:
            dims = tuple(int(part) for part in args.dims.split(","))
        except ValueError:
            raise _UsageError(f"cannot parse --dims={args.dims!r}") from None
        for seed in range(args.seed_sweep):
            ensembles.append(random_product_basis(dims, seed, args.depth))
    cases = []
    for e in ensembles:
        greedy = decide(e, "complete", tol)
        oracle = exhaustive_decide(e, tol)
        cases.append(
            {
                "name": e.name,
                "decide": greedy.kind,
                "oracle": oracle.kind,
                "agree": greedy.kind == oracle.kind,
            }
        )
    agree = all(c["agree"] for c in cases)
    print(canonical_dumps({"tol": tol, "agree": agree, "cases": cases}))
    return EXIT_OK if agree else EXIT_INDISTINGUISHABLE


def _build_parser() -> _Parser:
    parser = _Parser(prog="loccdist", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="decide distinguishability of an ensemble file")
    check.add_argument("ensemble", help="path to an ensemble JSON file")
    check.add_argument("--mode", choices=("auto", "complete", "incomplete"), default="auto")
    check.add_argument("--tol", type=float, default=None)
    check.add_argument("--json", action="store_true", help="emit the verdict as JSON")
    check.add_argument("--trace", action="store_true", help="print the exploration tree")
    check.set_defaults(func=_cmd_check)

    cat = sub.add_parser("catalog", help="list or emit built-in ensembles")
    cat.add_argument("action", choices=("list", "emit"))
    cat.add_argument("name", nargs="?", default=None)
    cat.add_argument("--out", default=None)
    cat.add_argument("--tol", type=float, default=None)
    cat.set_defaults(func=_cmd_catalog)

    sim = sub.add_parser("simulate", help="run a measurement protocol file on an ensemble")
    sim.add_argument("ensemble")
    sim.add_argument("protocol", nargs="?", default=None)
    sim.add_argument(
        "--builtin",
        default=None,
        help=f"named built-in protocol ({', '.join(BUILTIN_PROTOCOL_NAMES)})",
    )
    sim.add_argument("--tol", type=float, default=None)
    sim.set_defaults(func=_cmd_simulate)

    dec = sub.add_parser("decompose", help="canonical SVD of an operator matrix file")
    dec.add_argument("matrix")
    dec.add_argument("--tol", type=float, default=None)
    dec.set_defaults(func=_cmd_decompose)

    orc = sub.add_parser("oracle", help="cross-check the decision against exhaustive search")
    orc.add_argument("ensemble", nargs="?", default=None)
    orc.add_argument("--seed-sweep", type=int, default=None, metavar="N")
    orc.add_argument("--dims", default=None, help="comma separated local dimensions")
    orc.add_argument("--depth", type=int, default=3)
    orc.add_argument("--tol", type=float, default=None)
    orc.set_defaults(func=_cmd_oracle)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalInstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except LoccError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
