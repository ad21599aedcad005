"""Equality saturation, cost-based extraction and constant folding."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .egraph import EGraph, ENode, from_graph
from .errors import ChromacError
from .ir import GraphBuilder, IRGraph, IRNode, Port
from .rules import RULES, Rule
from .runtime import apply_op

DEFAULT_ITERATIONS = 30
DEFAULT_MAX_ENODES = 50_000


@dataclass(frozen=True)
class Limits:
    iterations: int = DEFAULT_ITERATIONS
    max_enodes: int = DEFAULT_MAX_ENODES
    # a rule matching more than this many times in one iteration is benched
    match_limit: int = 1_000
    ban_length: int = 5


@dataclass
class SaturationReport:
    status: str = "saturated"  # or "iteration-limit", "node-limit"
    iterations: int = 0
    enodes: int = 0
    eclasses: int = 0
    applied: dict[str, int] = field(default_factory=dict)

    @property
    def hit_limit(self) -> bool:
        return self.status != "saturated"


@dataclass
class Saturated:
    egraph: EGraph
    source: IRGraph
    classes: dict[int, int]  # source node id -> class id
    report: SaturationReport


def saturate(g: IRGraph, rules: tuple[Rule, ...] = RULES, limits: Limits = Limits()) -> Saturated:
    """Grow an e-graph from ``g`` by applying ``rules`` until fixpoint or a limit."""
    eg, classes = from_graph(g)
    report = SaturationReport(applied={r.name: 0 for r in rules})
    banned_until = {r.name: 0 for r in rules}
    times_banned = {r.name: 0 for r in rules}
    it = 0
    while True:
        if it >= limits.iterations:
            report.status = "iteration-limit"
            break
        it += 1
        index: dict[str, list[int]] = {}
        for cls in eg.canonical_classes():
            for op in dict.fromkeys(n.op for n in cls.nodes):
                index.setdefault(op, []).append(cls.id)
        matches = []
        skipped = False
        for r in rules:
            if banned_until[r.name] > it:
                skipped = True
                continue
            threshold = limits.match_limit << times_banned[r.name]
            found = r.search(eg, index, threshold)
            if found is None:
                banned_until[r.name] = it + (limits.ban_length << times_banned[r.name])
                times_banned[r.name] += 1
                skipped = True
                continue
            matches.extend((r, cid, s) for cid, s in found)
        before = eg.version
        over = False
        for r, cid, s in matches:
            new = r.apply(eg, cid, s)
            if new is not None and eg.find(new) != eg.find(cid):
                eg.union(cid, new)
                report.applied[r.name] += 1
            if len(eg) > limits.max_enodes:
                over = True
                break
        eg.rebuild()
        if over:
            report.status = "node-limit"
            break
        if eg.version == before and not skipped:
            break
        if eg.version == before and skipped:
            # only benched rules could still fire; let the earliest ban lapse
            nxt = min((t for t in banned_until.values() if t > it), default=it)
            it = min(max(it, nxt - 1), limits.iterations)
    report.iterations = it
    report.enodes = len(eg)
    report.eclasses = eg.num_classes
    return Saturated(eg, g, classes, report)


# -- cost --------------------------------------------------------------------


def op_cost(op: str, shape, operand_shapes, const_flag: bool) -> int:
    """Scalar operations performed by one node; constant work is free."""
    if const_flag or op in ("const", "input"):
        return 0
    if op == "matmul":
        return math.prod(operand_shapes[0]) * shape[-1]
    return math.prod(shape)


def node_cost(n: IRNode, g: IRGraph) -> int:
    return op_cost(n.op, n.shape, [g.nodes[o].shape for o in n.operands], n.const_flag)


def graph_cost(g: IRGraph) -> int:
    """Total scalar-op cost of the nodes feeding the outputs (shared nodes once)."""
    return sum(node_cost(g.nodes[i], g) for i in g.reachable())


def enode_cost(eg: EGraph, n: ENode) -> int:
    if n.op in ("const", "input"):
        return 0
    data = eg.data(n.children[0]) if n.children else None
    shape = eg.shape_of(n.op, n.children)
    flag = all(eg.data(c).const_flag for c in n.children)
    return op_cost(n.op, shape, [data.shape] if data else [], flag)


# -- extraction --------------------------------------------------------------


def _best_nodes(eg: EGraph) -> dict[int, tuple[int, int, ENode]]:
    """Per class, the (cost, size, node) minimising tree cost, ties by size."""
    best: dict[int, tuple[int, int, ENode]] = {}
    classes = eg.canonical_classes()
    changed = True
    while changed:
        changed = False
        for cls in classes:
            for n in eg.nodes_of(cls.id):
                kids = [best.get(eg.find(c)) for c in n.children]
                if any(k is None for k in kids):
                    continue
                if cls.data.const_flag:
                    cost = 0
                else:
                    cost = enode_cost(eg, n) + sum(k[0] for k in kids)
                size = 1 + sum(k[1] for k in kids)
                cur = best.get(cls.id)
                if cur is None or (cost, size) < (cur[0], cur[1]):
                    best[cls.id] = (cost, size, n)
                    changed = True
    return best


def extract(sat: Saturated) -> IRGraph:
    """Cheapest equivalent graph; never costlier than the saturation input."""
    eg, src = sat.egraph, sat.source
    best = _best_nodes(eg)
    b = GraphBuilder()
    built: dict[int, int] = {}

    def emit(cid: int) -> int:
        cid = eg.find(cid)
        if cid in built:
            return built[cid]
        n = best[cid][2]
        if n.op == "const":
            i = b.const(eg.consts[n.payload])
        elif n.op == "input":
            shape, nonneg = eg.inputs[n.payload]
            i = b.input(n.payload, shape, nonneg)
        else:
            i = b.op(n.op, *[emit(c) for c in n.children])
        built[cid] = i
        return i

    inputs = [Port(p.name, emit(sat.classes[p.node]), p.type) for p in src.inputs]
    outputs = [Port(p.name, emit(sat.classes[p.node]), p.type) for p in src.outputs]
    out = b.finish(inputs, outputs).pruned()
    if graph_cost(out) >= graph_cost(src):
        return src
    return out


# -- constant folding --------------------------------------------------------


def constant_fold(g: IRGraph) -> IRGraph:
    """Replace every maximal constant subgraph by one const leaf."""
    values: dict[int, np.ndarray] = {}
    failed: set[int] = set()
    reach = set(g.reachable())
    for n in g.nodes:
        if n.id not in reach or not n.const_flag:
            continue
        if n.op == "const":
            values[n.id] = n.value
            continue
        if any(o in failed for o in n.operands):
            failed.add(n.id)
            continue
        try:
            v = apply_op(n.op, [values[o] for o in n.operands], n.id)
        except ChromacError as e:
            warnings.warn(f"constant folding skipped node {n.id}: {e}", stacklevel=2)
            failed.add(n.id)
            continue
        if not np.all(np.isfinite(v)):
            warnings.warn(f"constant folding skipped node {n.id}: non-finite result", stacklevel=2)
            failed.add(n.id)
            continue
        values[n.id] = v
    b = GraphBuilder()
    remap: dict[int, int] = {}
    for n in g.nodes:
        if n.id in values:
            remap[n.id] = b.const(values[n.id])
        else:
            remap[n.id] = b.copy_node(n, [remap[o] for o in n.operands])
    out = b.finish(
        [Port(p.name, remap[p.node], p.type) for p in g.inputs],
        [Port(p.name, remap[p.node], p.type) for p in g.outputs],
    )
    return out.pruned()


# -- driver --------------------------------------------------------------------


@dataclass
class OptimizeResult:
    graph: IRGraph
    cost_before: int
    cost_after: int
    rounds: list[SaturationReport]


def optimize(
    g: IRGraph,
    rules: tuple[Rule, ...] = RULES,
    limits: Limits = Limits(),
    max_rounds: int = 4,
) -> OptimizeResult:
    """Saturate, extract and fold, repeating while the cost keeps dropping."""
    current = constant_fold(g)
    start = cost = graph_cost(current)
    reports = []
    for _ in range(max_rounds):
        sat = saturate(current, rules, limits)
        reports.append(sat.report)
        cand = constant_fold(extract(sat))
        c = graph_cost(cand)
        if c >= cost:
            break
        current, cost = cand, c
    return OptimizeResult(current, start, cost, reports)
