"""Source text to optimized IR, and checked execution of the result."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .checker import TypedProgram, type_check
from .errors import InternalError, ShapeError
from .ir import IRGraph, ir_shape_check
from .lowering import lower
from .optimizer import Limits, OptimizeResult, constant_fold, graph_cost, optimize
from .runtime import evaluate
from .syntax import Program, parse
from .types import parse_shaped


def compile_source(source: str | Program) -> TypedProgram:
    """Parse (unless given an AST) and type check."""
    program = parse(source) if isinstance(source, str) else source
    return type_check(program)


def _shape_checked(g: IRGraph, stage: str) -> IRGraph:
    try:
        ir_shape_check(g)
    except ShapeError as e:
        raise InternalError(f"{stage} produced an ill-shaped graph: {e}") from e
    return g


@dataclass
class Build:
    typed: TypedProgram
    lowered: IRGraph
    graph: IRGraph  # final graph: optimized (or only folded) and shape checked
    result: OptimizeResult | None
    compile_seconds: float
    optimize_seconds: float

    @property
    def cost_before(self) -> int:
        return graph_cost(self.lowered)

    @property
    def cost_after(self) -> int:
        return graph_cost(self.graph)


def build(source: str | Program | TypedProgram, optimize_graph: bool = True, limits: Limits = Limits()) -> Build:
    t0 = time.perf_counter()
    typed = source if isinstance(source, TypedProgram) else compile_source(source)
    lowered = _shape_checked(lower(typed), "lowering")
    t1 = time.perf_counter()
    if optimize_graph:
        result = optimize(lowered, limits=limits)
        graph = result.graph
    else:
        result, graph = None, constant_fold(lowered)
    graph = _shape_checked(graph, "optimization")
    t2 = time.perf_counter()
    return Build(typed, lowered, graph, result, t1 - t0, t2 - t1)


def run(g: IRGraph, inputs: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Evaluate ``g``; every output must have the erased shape of its declared type."""
    out = evaluate(g, inputs)
    for port in g.outputs:
        if not port.type:
            continue
        expected = parse_shaped(port.type).erase()
        if out[port.name].shape != expected:
            raise InternalError(
                f"output {port.name!r} has shape {list(out[port.name].shape)}, "
                f"but its type {port.type} erases to {list(expected)}"
            )
    return out


def max_relative_error(got: Mapping[str, np.ndarray], want: Mapping[str, np.ndarray]) -> float:
    """Largest normwise relative deviation over the outputs: max|a-b| / max|b|."""
    worst = 0.0
    for name, b in want.items():
        a = np.asarray(got[name])
        scale = max(float(np.max(np.abs(b))), 1e-300)
        worst = max(worst, float(np.max(np.abs(a - b))) / scale)
    return worst
