"""Command-line surface.

Subcommands: gen, structural, check-asl, construct, coherence, functionals,
extend-eval, fuzz.  Every command is deterministic given its inputs, seed,
and mode, and writes machine-readable JSON (or CSV for batch evaluation).

Exit codes: 0 success / property satisfied; 1 property violated (sure loss,
incoherence, structural failure); 2 bad input (parse or precondition);
3 internal invariant failure (a bug, never bad input).

The KBOXKIT_MODE environment variable ('exact' or 'float'), when set,
overrides the --mode flag.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from kboxkit.analysis import check_asl, coherence_lower, coherence_upper
from kboxkit.construct import (
    check_k_increasing,
    sweep_from_above,
    sweep_from_below,
)
from kboxkit.errors import (
    InternalInvariantError,
    KboxkitError,
    PreconditionError,
)
from kboxkit.extend import ExtendedFunction, evaluate
from kboxkit.functionals import functional_report
from kboxkit.kbox import BoxUnion
from kboxkit.mesh import (
    GridFunction,
    format_rational,
    make_uniform_mesh,
    parse_family_spec,
    parse_rational,
    random_standardized_pair,
    sample_family,
    structural_check,
)

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_BAD_INPUT = 2
EXIT_INTERNAL = 3


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump(obj: dict, out: str | None) -> None:
    _emit(json.dumps(obj, indent=2), out)


def _load_grid(path: str) -> GridFunction:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise PreconditionError(f"cannot read {path}: {exc}")
    return GridFunction.from_json(text)


def _effective_mode(args) -> str:
    mode = os.environ.get("KBOXKIT_MODE") or args.mode
    if mode not in ("exact", "float"):
        raise PreconditionError(f"unknown mode {mode!r}")
    return mode


def _parse_order(spec: str | None, mesh):
    if spec is None or spec == "lex":
        return None
    if spec.startswith("file:"):
        with open(spec[5:]) as fh:
            data = json.load(fh)
        return [tuple(node) for node in data]
    raise PreconditionError(f"unknown order {spec!r}; use 'lex' or 'file:<path>'")


def cmd_gen(args) -> int:
    name, theta = parse_family_spec(args.family)
    mesh = make_uniform_mesh(args.n, args.g)
    grid = sample_family(name, mesh, theta)
    _emit(grid.to_json(), args.out)
    return EXIT_OK


def cmd_structural(args) -> int:
    grid = _load_grid(args.grid)
    report = structural_check(grid)
    _dump(
        {
            "grounded": report.grounded,
            "one_increasing": report.one_increasing,
            "uniform_marginals": report.uniform_marginals,
            "value_at_one": format_rational(report.value_at_one),
            "is_semicopula": report.is_semicopula,
            "is_standardized": report.is_standardized,
            "witnesses": [list(w) for w in report.witnesses],
        },
        args.out,
    )
    return EXIT_OK if report.grounded and report.one_increasing else EXIT_VIOLATED


def cmd_check_asl(args) -> int:
    a = _load_grid(args.lower)
    b = _load_grid(args.upper)
    verdict = check_asl(a, b, args.k, mode=_effective_mode(args))
    _emit(verdict.to_json(), args.out)
    return EXIT_OK if verdict.satisfied else EXIT_VIOLATED


def cmd_construct(args) -> int:
    a = _load_grid(args.lower)
    b = _load_grid(args.upper)
    mode = _effective_mode(args)
    order = _parse_order(args.order, a.mesh)
    sweep = sweep_from_below if args.direction == "below" else sweep_from_above
    try:
        trace = sweep(a, b, args.k, order=order, mode=mode)
    except PreconditionError as exc:
        if isinstance(exc.witness, BoxUnion):
            _dump(
                {"error": str(exc), "violating_union": exc.witness.to_json_dict()},
                args.out,
            )
            return EXIT_VIOLATED
        raise
    report = check_k_increasing(trace.result, args.k)
    if not report.passed:
        raise InternalInvariantError(
            f"sweep result is not {args.k}-increasing at {report.violating_box}"
        )
    _emit(trace.to_json(), args.out)
    return EXIT_OK


def cmd_coherence(args) -> int:
    a = _load_grid(args.lower)
    b = _load_grid(args.upper)
    checker = coherence_upper if args.side == "upper" else coherence_lower
    report = checker(a, b, args.k, mode=_effective_mode(args))
    _emit(report.to_json(), args.out)
    return EXIT_OK if report.coherent else EXIT_VIOLATED


def cmd_functionals(args) -> int:
    a = _load_grid(args.lower)
    b = _load_grid(args.upper)
    report = functional_report(
        a, b, args.k, mode=_effective_mode(args), include_witnesses=args.witnesses
    )
    _dump(report, args.out)
    return EXIT_OK


def cmd_extend_eval(args) -> int:
    grid = _load_grid(args.grid)
    ext = ExtendedFunction(grid, args.extension)
    if args.point is not None:
        coords = [parse_rational(c) for c in args.point.split(",")]
        value = evaluate(ext, coords)
        _dump(
            {
                "point": [format_rational(c) for c in coords],
                "mode": args.extension,
                "value": format_rational(value),
            },
            args.out,
        )
        return EXIT_OK
    if args.points is None:
        raise PreconditionError("provide --point or --points <csv>")
    lines = []
    with open(args.points) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            coords = [parse_rational(c) for c in line.split(",")]
            value = evaluate(ext, coords)
            cells = [format_rational(c) for c in coords] + [format_rational(value)]
            lines.append(",".join(str(c) for c in cells))
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_fuzz(args) -> int:
    mode = _effective_mode(args)
    mesh = make_uniform_mesh(args.n, args.g)
    rng = random.Random(args.seed)
    satisfied = 0
    violated = 0
    records = []
    for i in range(args.count):
        a, b = random_standardized_pair(mesh, rng, style=args.style)
        verdict = check_asl(a, b, args.k, mode=mode)
        if verdict.satisfied:
            satisfied += 1
            trace = sweep_from_below(a, b, args.k, mode=mode, certify=False)
            if not check_k_increasing(trace.result, args.k).passed:
                raise InternalInvariantError("sweep result is not k-increasing")
        else:
            violated += 1
        records.append({"instance": i, "satisfied": verdict.satisfied})
    _dump(
        {
            "n": args.n,
            "g": args.g,
            "k": args.k,
            "seed": args.seed,
            "style": args.style,
            "count": args.count,
            "satisfied": satisfied,
            "violated": violated,
            "records": records,
        },
        args.out,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kboxkit",
        description="Sandwich feasibility, construction, and coherence for "
        "k-increasing grid functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, k=True):
        if k:
            p.add_argument("--k", type=int, required=True, help="box order k")
        p.add_argument("--mode", choices=("exact", "float"), default="exact")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("gen", help="sample a built-in family onto a uniform grid")
    p.add_argument("family", help="product|min|lukasiewicz|drastic|frank(theta)")
    p.add_argument("n", type=int)
    p.add_argument("g", type=int)
    common(p, k=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("structural", help="grounded/1-increasing/marginals checks")
    p.add_argument("grid")
    common(p, k=False)
    p.set_defaults(func=cmd_structural)

    p = sub.add_parser("check-asl", help="decide avoidance of sure loss")
    p.add_argument("lower")
    p.add_argument("upper")
    common(p)
    p.set_defaults(func=cmd_check_asl)

    p = sub.add_parser("construct", help="sweep a k-increasing function")
    p.add_argument("lower")
    p.add_argument("upper")
    p.add_argument("--direction", choices=("below", "above"), default="below")
    p.add_argument("--order", default="lex", help="lex or file:<path>")
    common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("coherence", help="coherence of one bound")
    p.add_argument("lower")
    p.add_argument("upper")
    p.add_argument("--side", choices=("upper", "lower"), required=True)
    common(p)
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("functionals", help="per-node infimum functionals")
    p.add_argument("lower")
    p.add_argument("upper")
    p.add_argument("--witnesses", action="store_true")
    common(p)
    p.set_defaults(func=cmd_functionals)

    p = sub.add_parser("extend-eval", help="evaluate a cube extension")
    p.add_argument("grid")
    p.add_argument("--extension", choices=("sup", "inf", "lipschitz"), default="sup")
    p.add_argument("--point", default=None, help="comma-separated rationals")
    p.add_argument("--points", default=None, help="CSV of query points")
    common(p, k=False)
    p.set_defaults(func=cmd_extend_eval)

    p = sub.add_parser("fuzz", help="randomized cross-procedure suite")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--g", type=int, default=3)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--style", choices=("free", "around-product"), default="free")
    common(p)
    p.set_defaults(func=cmd_fuzz)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InternalInvariantError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except KboxkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
