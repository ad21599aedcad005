"""Minimal tensor IR: a DAG of elementwise ops, matmul, constants and inputs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalError, ShapeError, TensorFormatError

Shape = tuple[int, ...]

ELEMENTWISE = ("add", "sub", "mul", "div", "pow")
# only needed by the HSV recipes; the optimizer never rewrites them
EXTENSION = ("max", "min", "floor_mod", "select")
LEAVES = ("const", "input")
ARITY = {op: 2 for op in ELEMENTWISE + ("max", "min", "floor_mod", "matmul")}
ARITY.update(select=3, const=0, input=0)
OPS = tuple(ARITY)

IRJ_FORMAT = "chromac-ir"
IRJ_VERSION = 1


def _strip(d: Shape) -> Shape:
    i = 0
    while i < len(d) - 1 and d[i] == 1:
        i += 1
    return tuple(d[i:])


def broadcastable(d1: Shape, d2: Shape) -> bool:
    """Can a tensor of shape ``d1`` be broadcast onto shape ``d2``?

    Equal shapes, a single-element ``[1]`` tensor, or a right-aligned suffix.
    Leading unit axes of ``d1`` are ignored, so ``[1, 3]`` counts as ``[3]``.
    """
    d1, d2 = tuple(d1), tuple(d2)
    if d1 == d2:
        return True
    s = _strip(d1)
    if s == (1,):
        return True
    return len(s) <= len(d2) and tuple(d2[len(d2) - len(s):]) == s


def broadcast_shape(*shapes: Shape) -> Shape | None:
    """Result shape of an elementwise op, or None if the operands do not fit."""
    try:
        out = tuple(np.broadcast_shapes(*shapes))
    except ValueError:
        return None
    if not all(broadcastable(tuple(s), out) for s in shapes):
        return None
    return out


def matmul_shape(a: Shape, b: Shape) -> Shape | None:
    if len(a) < 2 or len(b) != 2 or a[-1] != b[0]:
        return None
    return tuple(a[:-1]) + (b[1],)


def infer_shape(op: str, shapes: list[Shape]) -> Shape | None:
    if op == "matmul":
        return matmul_shape(*shapes)
    return broadcast_shape(*shapes)


@dataclass(frozen=True, eq=False)
class IRNode:
    id: int
    op: str
    operands: tuple[int, ...]
    shape: Shape
    value: np.ndarray | None = None  # const payload
    name: str | None = None  # input name
    nonneg: bool = False  # inputs: declared nonnegative domain
    const_flag: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.op in LEAVES


@dataclass
class Port:
    name: str
    node: int
    type: str | None = None  # source-level ShapedType, informational


@dataclass
class IRGraph:
    nodes: list[IRNode] = field(default_factory=list)
    inputs: list[Port] = field(default_factory=list)
    outputs: list[Port] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, i: int) -> IRNode:
        return self.nodes[i]

    def input_node(self, name: str) -> IRNode:
        for p in self.inputs:
            if p.name == name:
                return self.nodes[p.node]
        raise KeyError(name)

    def reachable(self) -> list[int]:
        """Ids of nodes feeding some output, in topological order."""
        seen = set()
        stack = [p.node for p in self.outputs]
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            stack.extend(self.nodes[i].operands)
        return sorted(seen)

    def op_nodes(self) -> list[IRNode]:
        return [self.nodes[i] for i in self.reachable() if not self.nodes[i].is_leaf]

    def op_count(self) -> int:
        """Number of operation (non-leaf) nodes that contribute to an output."""
        return len(self.op_nodes())

    def count(self, op: str, const: bool | None = None) -> int:
        return sum(
            1
            for n in self.op_nodes()
            if n.op == op and (const is None or n.const_flag == const)
        )

    def pruned(self) -> "IRGraph":
        """Copy without dead nodes; declared inputs are always kept."""
        keep = set(self.reachable()) | {p.node for p in self.inputs}
        b = GraphBuilder()
        remap: dict[int, int] = {}
        for n in self.nodes:
            if n.id in keep:
                remap[n.id] = b.copy_node(n, [remap[o] for o in n.operands])
        return b.finish(
            [Port(p.name, remap[p.node], p.type) for p in self.inputs],
            [Port(p.name, remap[p.node], p.type) for p in self.outputs],
        )


class GraphBuilder:
    """Append-only construction of an IRGraph; shapes are inferred eagerly."""

    def __init__(self):
        self.nodes: list[IRNode] = []
        self._consts: dict[tuple, int] = {}

    def _append(self, **kw) -> int:
        node = IRNode(id=len(self.nodes), **kw)
        self.nodes.append(node)
        return node.id

    def shape(self, i: int) -> Shape:
        return self.nodes[i].shape

    def const(self, value) -> int:
        arr = np.array(value, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        key = (arr.shape, arr.tobytes())
        if key in self._consts:
            return self._consts[key]
        arr.setflags(write=False)
        i = self._append(op="const", operands=(), shape=arr.shape, value=arr, const_flag=True)
        self._consts[key] = i
        return i

    def input(self, name: str, shape: Shape, nonneg: bool = False) -> int:
        return self._append(op="input", operands=(), shape=tuple(shape), name=name, nonneg=nonneg)

    def op(self, op: str, *args: int) -> int:
        if op not in ARITY or op in LEAVES or len(args) != ARITY[op]:
            raise InternalError(f"bad IR op {op} with {len(args)} operands")
        shapes = [self.nodes[a].shape for a in args]
        shape = infer_shape(op, shapes)
        if shape is None:
            raise InternalError(f"lowering produced ill-shaped {op} on {shapes}")
        flag = all(self.nodes[a].const_flag for a in args)
        return self._append(op=op, operands=tuple(args), shape=shape, const_flag=flag)

    def copy_node(self, n: IRNode, operands: list[int]) -> int:
        if n.op == "const":
            return self.const(n.value)
        if n.op == "input":
            return self.input(n.name, n.shape, n.nonneg)
        return self.op(n.op, *operands)

    def finish(self, inputs: list[Port], outputs: list[Port]) -> IRGraph:
        return IRGraph(list(self.nodes), list(inputs), list(outputs))


def ir_shape_check(g: IRGraph) -> bool:
    """Recompute every node's shape under the broadcast/matmul rules.

    Returns True or raises ShapeError naming the offending node.
    """
    for idx, n in enumerate(g.nodes):
        if n.id != idx:
            raise ShapeError(f"node at position {idx} has id {n.id}")
        if n.op not in ARITY:
            raise ShapeError(f"node {n.id}: unknown op {n.op!r}")
        if len(n.operands) != ARITY[n.op]:
            raise ShapeError(f"node {n.id}: {n.op} expects {ARITY[n.op]} operands")
        if any(o >= n.id or o < 0 for o in n.operands):
            raise ShapeError(f"node {n.id}: operands {n.operands} break topological order")
        if n.op == "const":
            if n.value is None or tuple(n.value.shape) != n.shape:
                raise ShapeError(f"node {n.id}: const payload does not match shape {n.shape}")
            continue
        if n.op == "input":
            if not n.shape or any(d < 1 for d in n.shape):
                raise ShapeError(f"node {n.id}: bad input shape {n.shape}")
            continue
        shapes = [g.nodes[o].shape for o in n.operands]
        got = infer_shape(n.op, shapes)
        if got is None:
            raise ShapeError(
                f"node {n.id}: {n.op} operands have incompatible shapes "
                + " and ".join(str(list(s)) for s in shapes)
            )
        if got != n.shape:
            raise ShapeError(f"node {n.id}: annotated shape {list(n.shape)} but computed {list(got)}")
    for p in list(g.inputs) + list(g.outputs):
        if not 0 <= p.node < len(g.nodes):
            raise ShapeError(f"port {p.name!r} refers to missing node {p.node}")
    for p in g.inputs:
        if g.nodes[p.node].op != "input":
            raise ShapeError(f"input {p.name!r} is not an input node")
    return True


# -- serialization ---------------------------------------------------------


def to_json(g: IRGraph) -> str:
    nodes = []
    for n in g.nodes:
        d: dict = {"id": n.id, "op": n.op, "operands": list(n.operands), "shape": list(n.shape)}
        if n.op == "const":
            d["data"] = [float(v) for v in n.value.ravel()]
        elif n.op == "input":
            d["name"] = n.name
            d["nonneg"] = n.nonneg
        nodes.append(d)
    doc = {
        "format": IRJ_FORMAT,
        "version": IRJ_VERSION,
        "inputs": [{"name": p.name, "node": p.node, "type": p.type} for p in g.inputs],
        "outputs": [{"name": p.name, "node": p.node, "type": p.type} for p in g.outputs],
        "nodes": nodes,
    }
    return json.dumps(doc, indent=1)


def from_json(text: str) -> IRGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TensorFormatError(f"not a valid .irj document: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != IRJ_FORMAT:
        raise TensorFormatError("not a chromac IR document")
    if doc.get("version") != IRJ_VERSION:
        raise TensorFormatError(f"unsupported .irj version {doc.get('version')}")
    try:
        b = GraphBuilder()
        nodes = []
        for d in doc["nodes"]:
            shape = tuple(d["shape"])
            ops = tuple(d["operands"])
            if d["op"] == "const":
                value = np.array(d["data"], dtype=np.float64).reshape(shape)
                value.setflags(write=False)
                node = IRNode(d["id"], "const", ops, shape, value=value, const_flag=True)
            elif d["op"] == "input":
                node = IRNode(d["id"], "input", ops, shape, name=d["name"], nonneg=bool(d.get("nonneg")))
            else:
                flag = all(nodes[o].const_flag for o in ops if o < len(nodes))
                node = IRNode(d["id"], d["op"], ops, shape, const_flag=flag)
            nodes.append(node)
        b.nodes = nodes
        g = b.finish(
            [Port(p["name"], p["node"], p.get("type")) for p in doc["inputs"]],
            [Port(p["name"], p["node"], p.get("type")) for p in doc["outputs"]],
        )
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise TensorFormatError(f"malformed .irj document: {e!r}") from None
    ir_shape_check(g)
    return g


def save_irj(path, g: IRGraph) -> None:
    with open(path, "w") as f:
        f.write(to_json(g))


def load_irj(path) -> IRGraph:
    with open(path) as f:
        return from_json(f.read())


def graph_summary(g: IRGraph) -> dict:
    return {"nodes": len(g.reachable()), "ops": g.op_count()}

