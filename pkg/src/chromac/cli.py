"""``chromac check|build|run|bench``.

Exit status: 0 on success, 1 for user errors such as bad source or inputs
that fail at run time, 2 for internal defects.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import bench as benchmod
from .errors import ChromacError, InternalError, InvalidInputError, SourceError
from .ir import graph_summary, load_irj, save_irj
from .optimizer import DEFAULT_ITERATIONS, DEFAULT_MAX_ENODES, Limits, graph_cost
from .pipeline import build, compile_source, run
from .runtime import load_png, load_tensor, save_png, save_tensor

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


def _diagnostic(path: str, e: Exception) -> str:
    if isinstance(e, SourceError) and e.line is not None:
        return f"{path}:{e.line}:{e.col}: {e.kind}: {e.message}"
    kind = getattr(e, "kind", "error")
    msg = e.message if isinstance(e, SourceError) else str(e)
    return f"{path}: {kind}: {msg}"


def _read_source(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise InvalidInputError(f"source is not UTF-8: {e}") from e


def _limits(args) -> Limits:
    return Limits(iterations=args.iters, max_enodes=args.max_nodes)


def cmd_check(args) -> int:
    tp = compile_source(_read_source(args.program))
    for name, t in tp.output_types.items():
        print(f"output {name} : {t}")
    return EXIT_OK


def cmd_build(args) -> int:
    b = build(_read_source(args.program), optimize_graph=not args.no_opt, limits=_limits(args))
    out = Path(args.output) if args.output else Path(args.program).with_suffix(".irj")
    save_irj(out, b.graph)
    before, after = graph_summary(b.lowered), graph_summary(b.graph)
    print(f"lowered:   {before['nodes']} nodes, {before['ops']} ops, cost {graph_cost(b.lowered)}")
    print(f"final:     {after['nodes']} nodes, {after['ops']} ops, cost {graph_cost(b.graph)}")
    if b.result is not None:
        statuses = ", ".join(f"{r.status} after {r.iterations} iterations" for r in b.result.rounds)
        print(f"saturation: {statuses}")
    print(f"time:      compile {b.compile_seconds:.3f}s, optimize {b.optimize_seconds:.3f}s")
    print(f"wrote {out}")
    return EXIT_OK


def _bindings(pairs: list[str], flag: str) -> dict[str, Path]:
    out = {}
    for pair in pairs:
        name, sep, path = pair.partition("=")
        if not sep or not name or not path:
            raise InvalidInputError(f"{flag} expects NAME=PATH, got {pair!r}")
        out[name] = Path(path)
    return out


def _load(path: Path):
    if path.suffix.lower() == ".png":
        return load_png(path)
    if path.suffix.lower() == ".cten":
        return load_tensor(path)
    raise InvalidInputError(f"{path}: unsupported file type (expected .png or .cten)")


def _save(path: Path, t) -> None:
    if path.suffix.lower() == ".png":
        save_png(path, t)
    elif path.suffix.lower() == ".cten":
        save_tensor(path, t)
    else:
        raise InvalidInputError(f"{path}: unsupported file type (expected .png or .cten)")


def cmd_run(args) -> int:
    g = load_irj(args.graph)
    ins = _bindings(args.input, "--input")
    outs = _bindings(args.output, "--output")
    declared = {p.name: p for p in g.inputs}
    for p in g.inputs:
        if p.name not in ins:
            raise InvalidInputError(f"input {p.name!r} ({p.type}) is not bound; pass --input {p.name}=PATH")
    for name in ins:
        if name not in declared:
            raise InvalidInputError(f"no input named {name!r}")
    names = {p.name for p in g.outputs}
    for name in outs:
        if name not in names:
            raise InvalidInputError(f"no output named {name!r}")
    values = run(g, {name: _load(path) for name, path in ins.items()})
    for name, t in values.items():
        if name in outs:
            _save(outs[name], t)
            print(f"wrote {name} -> {outs[name]}")
        else:
            print(f"output {name}: shape {list(t.shape)} (not written)")
    return EXIT_OK


def cmd_bench(args) -> int:
    names = args.programs or list(benchmod.BENCHMARKS)
    unknown = [n for n in names if n not in benchmod.BENCHMARKS]
    if unknown:
        raise InvalidInputError(f"unknown benchmark(s): {', '.join(unknown)}")
    reports = benchmod.run_benchmarks(
        names, size=args.size, small_size=args.small_size, seed=args.seed, limits=_limits(args)
    )
    print(benchmod.format_table(reports))
    jsonl = benchmod.format_jsonl(reports)
    if args.jsonl in (None, "-"):
        print()
        print(jsonl)
    else:
        Path(args.jsonl).write_text(jsonl + "\n", encoding="utf-8")
    return EXIT_OK if all(r.status == "ok" for r in reports) else EXIT_USER


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chromac", description="Compile and run colour programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def opt_flags(p):
        p.add_argument("--iters", type=int, default=DEFAULT_ITERATIONS, help="saturation iteration limit")
        p.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_ENODES, help="e-node limit")

    p = sub.add_parser("check", help="parse and type check a program")
    p.add_argument("program")
    p.set_defaults(func=cmd_check, target="program")

    p = sub.add_parser("build", help="compile a program to an .irj graph")
    p.add_argument("program")
    p.add_argument("-o", "--output", help="output path (default: PROGRAM.irj)")
    p.add_argument("--no-opt", action="store_true", help="skip equality saturation")
    opt_flags(p)
    p.set_defaults(func=cmd_build, target="program")

    p = sub.add_parser("run", help="evaluate an .irj graph")
    p.add_argument("graph")
    p.add_argument("--input", action="append", default=[], metavar="NAME=PATH")
    p.add_argument("--output", action="append", default=[], metavar="NAME=PATH")
    p.set_defaults(func=cmd_run, target="graph")

    p = sub.add_parser("bench", help="build and time the shipped benchmark programs")
    p.add_argument("programs", nargs="*", help=f"subset of: {' '.join(benchmod.BENCHMARKS)}")
    p.add_argument("--size", type=int, default=benchmod.DEFAULT_SIZE)
    p.add_argument("--small-size", type=int, default=benchmod.DEFAULT_SMALL_SIZE)
    p.add_argument("--seed", type=int, default=None, help="input seed (default: $CHROMAC_SEED or 0)")
    p.add_argument("--jsonl", help="write the JSON-lines report here ('-' for stdout)")
    opt_flags(p)
    p.set_defaults(func=cmd_bench, target=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    where = getattr(args, args.target) if args.target else "chromac"
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except InternalError as e:
        print(_diagnostic(where, e), file=sys.stderr)
        return EXIT_INTERNAL
    except (ChromacError, OSError) as e:
        print(_diagnostic(where, e), file=sys.stderr)
        return EXIT_USER
    except Exception as e:  # anything unexpected is our bug
        print(f"{where}: internal-error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
