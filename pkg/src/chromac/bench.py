"""The six shipped benchmark programs and a timing/op-count harness."""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from . import color
from .checker import TypedProgram
from .ir import IRGraph
from .optimizer import Limits, graph_cost
from .pipeline import build, compile_source, max_relative_error, run
from .syntax import InputDecl, Program, parse
from .types import PhysicalType, ShapedType

P = PhysicalType

BENCHMARKS = ("spaceconv", "colorblindness", "adaptation", "interpolation", "mixing", "lab2hsv")
# spectral and perceptual benchmarks run at a smaller default resolution
SMALL = frozenset({"mixing", "lab2hsv"})
DEFAULT_SIZE = 256
DEFAULT_SMALL_SIZE = 64


def seed_from_env(default: int = 0) -> int:
    return int(os.environ.get("CHROMAC_SEED", default))


def program_source(name: str) -> str:
    return resources.files("chromac.programs").joinpath(f"{name}.csl").read_text(encoding="utf-8")


def resized(program: Program, size: int) -> Program:
    """Replace the leading image dims of every pixel-grid input by size x size."""
    decls = []
    for d in program.inputs:
        t = d.type
        if t.phys not in (P.Matrix, P.Light) and len(t.dims) == 2:
            t = ShapedType(t.phys, (size, size))
        decls.append(InputDecl(d.name, t, d.line, d.col))
    return dataclasses.replace(program, inputs=tuple(decls))


def load_benchmark(name: str, size: int | None = None) -> TypedProgram:
    program = parse(program_source(name))
    if size is not None:
        program = resized(program, size)
    return compile_source(program)


# -- inputs ------------------------------------------------------------------

# mild colour-vision filter: mostly identity with some cross-talk; keeps
# every output inside the sRGB gamut so the encode stage stays real-valued
DEFICIENCY = 0.9 * np.eye(3) + 0.1 / 3 * np.ones((3, 3))


def _srgb(rng, shape, lo=0.0, hi=255.0):
    return rng.uniform(lo, hi, tuple(shape))


def _pigment(rng, shape):
    lead = tuple(shape[:-1])
    return np.concatenate(
        [rng.uniform(0.05, 1.0, lead + (color.N_BANDS,)), rng.uniform(0.0, 1.0, lead + (color.N_BANDS,))],
        axis=-1,
    )


def _tilted_daylight(slope: float) -> np.ndarray:
    spd = color.daylight_spd()
    return (spd * np.linspace(1.0 - slope, 1.0 + slope, spd.size))[None, :]


def benchmark_inputs(name: str, tp: TypedProgram, rng: np.random.Generator) -> dict[str, np.ndarray]:
    shapes = {n: t.erase() for n, t in tp.input_types.items()}
    if name == "colorblindness":
        return {"img": _srgb(rng, shapes["img"]), "deficiency": DEFICIENCY.copy()}
    if name == "adaptation":
        # a modest illuminant change; mid-range pixels stay in gamut afterwards
        return {
            "img": _srgb(rng, shapes["img"], 32.0, 224.0),
            "source": _tilted_daylight(0.0),
            "target": _tilted_daylight(0.15),
        }
    if name == "mixing":
        return {n: _pigment(rng, s) for n, s in shapes.items()}
    if name == "lab2hsv":
        xyz = color.srgb_to_xyz(_srgb(rng, shapes["lab"]))
        return {"lab": color.xyz_to_lab(xyz)}
    return {n: _srgb(rng, s) for n, s in shapes.items()}


# -- harness -----------------------------------------------------------------


@dataclass
class BenchReport:
    name: str
    size: int
    nodes_unopt: int | None = None
    nodes_opt: int | None = None
    cost_unopt: int | None = None
    cost_opt: int | None = None
    compile_s: float | None = None
    optimize_s: float | None = None
    run_unopt_s: float | None = None
    run_opt_s: float | None = None
    deviation: float | None = None
    status: str = "ok"
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self))


def _timed(f: Callable, *args):
    t = time.perf_counter()
    out = f(*args)
    return out, time.perf_counter() - t


def _nodes(g: IRGraph) -> int:
    return len(g.reachable())


def bench_one(name: str, size: int, rng: np.random.Generator, limits: Limits = Limits()) -> BenchReport:
    report = BenchReport(name, size)
    try:
        tp = load_benchmark(name, size)
        unopt = build(tp, optimize_graph=False)
        opt = build(tp, optimize_graph=True, limits=limits)
        report.nodes_unopt, report.nodes_opt = _nodes(unopt.lowered), _nodes(opt.graph)
        report.cost_unopt, report.cost_opt = graph_cost(unopt.lowered), graph_cost(opt.graph)
        report.compile_s, report.optimize_s = opt.compile_seconds, opt.optimize_seconds
        inputs = benchmark_inputs(name, tp, rng)
        want, report.run_unopt_s = _timed(run, unopt.lowered, inputs)
        got, report.run_opt_s = _timed(run, opt.graph, inputs)
        report.deviation = max_relative_error(got, want)
    except Exception as e:  # one broken row must not sink the table
        report.status = "error"
        report.error = f"{type(e).__name__}: {e}"
    return report


def run_benchmarks(
    names=BENCHMARKS,
    size: int = DEFAULT_SIZE,
    small_size: int = DEFAULT_SMALL_SIZE,
    seed: int | None = None,
    limits: Limits = Limits(),
) -> list[BenchReport]:
    rng = np.random.default_rng(seed_from_env() if seed is None else seed)
    return [bench_one(n, small_size if n in SMALL else size, rng, limits) for n in names]


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


COLUMNS = (
    ("program", "name"),
    ("size", "size"),
    ("nodes", "nodes_unopt"),
    ("nodes(opt)", "nodes_opt"),
    ("cost", "cost_unopt"),
    ("cost(opt)", "cost_opt"),
    ("compile_s", "compile_s"),
    ("optimize_s", "optimize_s"),
    ("run_s", "run_unopt_s"),
    ("run_s(opt)", "run_opt_s"),
    ("deviation", "deviation"),
    ("status", "status"),
)


def format_table(reports: list[BenchReport]) -> str:
    rows = [[h for h, _ in COLUMNS]]
    rows += [[_fmt(getattr(r, f)) for _, f in COLUMNS] for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(COLUMNS))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines += [f"{r.name}: {r.error}" for r in reports if r.error]
    return "\n".join(lines)


def format_jsonl(reports: list[BenchReport]) -> str:
    return "\n".join(r.to_json() for r in reports)
