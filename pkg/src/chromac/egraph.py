"""E-graph with hash-consing, union-find and a small per-class analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChromacError, InternalError
from .ir import IRGraph, infer_shape
from .runtime import apply_op

Shape = tuple[int, ...]
# const tensors larger than this are tracked by flag only, not by value
CONST_VALUE_LIMIT = 1 << 16


@dataclass(frozen=True)
class ENode:
    op: str
    children: tuple[int, ...] = ()
    payload: object = None  # const handle or input name


@dataclass
class ClassData:
    shape: Shape
    const_flag: bool
    const_value: np.ndarray | None
    nonneg: bool

    def merge(self, other: "ClassData") -> bool:
        """Fold ``other`` into self; returns whether anything changed."""
        if self.shape != other.shape:
            raise InternalError(f"merging classes of shapes {self.shape} and {other.shape}")
        changed = False
        if other.const_flag and not self.const_flag:
            self.const_flag = changed = True
        if self.const_value is None and other.const_value is not None:
            self.const_value = other.const_value
            changed = True
        if other.nonneg and not self.nonneg:
            self.nonneg = changed = True
        return changed


@dataclass
class EClass:
    id: int
    data: ClassData
    nodes: dict[ENode, None] = field(default_factory=dict)  # ordered set
    parents: list[tuple[ENode, int]] = field(default_factory=list)
    by_op: dict[str, list[ENode]] = field(default_factory=dict)  # refreshed by rebuild


def _nonneg(op: str, kids: list[ClassData]) -> bool:
    if op in ("add", "mul", "div", "matmul", "min"):
        return all(k.nonneg for k in kids)
    if op == "max":
        return any(k.nonneg for k in kids)
    if op == "pow":
        return kids[0].nonneg
    if op == "select":
        return kids[1].nonneg and kids[2].nonneg
    if op == "floor_mod":
        v = kids[1].const_value
        return v is not None and bool(np.all(v > 0))
    return False


# rewrites that compute constants (x^a * c -> (x * c^(1/a))^a and back) would
# otherwise mint an endless chain of values a few ulps apart
_KEY_BITS = 36


def _approx_key(arr: np.ndarray) -> tuple:
    m, e = np.frexp(arr)
    return arr.shape, np.round(m * (1 << _KEY_BITS)).tobytes(), e.tobytes()


class EGraph:
    def __init__(self):
        self._parent: list[int] = []
        self.classes: dict[int, EClass] = {}
        self.memo: dict[ENode, int] = {}
        self.consts: list[np.ndarray] = []
        self._const_keys: dict[tuple, int] = {}
        self.inputs: dict[str, tuple[Shape, bool]] = {}
        self._pending: list[int] = []
        self._analysis_pending: list[int] = []
        self._fold_pending: list[int] = []
        self.version = 0  # bumped on every structural change

    # -- union-find ------------------------------------------------------

    def find(self, a: int) -> int:
        root = a
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[a] != root:
            self._parent[a], a = root, self._parent[a]
        return root

    def canonicalize(self, n: ENode) -> ENode:
        if not n.children:
            return n
        return ENode(n.op, tuple(self.find(c) for c in n.children), n.payload)

    def __len__(self) -> int:
        return len(self.memo)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def data(self, a: int) -> ClassData:
        return self.classes[self.find(a)].data

    # -- construction ----------------------------------------------------

    def const_handle(self, value) -> int:
        """Intern a constant; values within rounding noise share one handle."""
        arr = np.array(value, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        key = _approx_key(arr)
        if key not in self._const_keys:
            arr.setflags(write=False)
            self._const_keys[key] = len(self.consts)
            self.consts.append(arr)
        return self._const_keys[key]

    def add_const(self, value) -> int:
        return self.add(ENode("const", (), self.const_handle(value)))

    def add_input(self, name: str, shape: Shape, nonneg: bool) -> int:
        self.inputs[name] = (tuple(shape), nonneg)
        return self.add(ENode("input", (), name))

    def make(self, n: ENode) -> ClassData:
        if n.op == "const":
            v = self.consts[n.payload]
            return ClassData(v.shape, True, v, bool(np.all(v >= 0)))
        if n.op == "input":
            shape, nonneg = self.inputs[n.payload]
            return ClassData(shape, False, None, nonneg)
        kids = [self.data(c) for c in n.children]
        shape = infer_shape(n.op, [k.shape for k in kids])
        if shape is None:
            raise InternalError(f"ill-shaped e-node {n.op} on {[k.shape for k in kids]}")
        flag = all(k.const_flag for k in kids)
        value = None
        if flag and all(k.const_value is not None for k in kids) and np.prod(shape) <= CONST_VALUE_LIMIT:
            try:
                out = apply_op(n.op, [k.const_value for k in kids])
                if np.all(np.isfinite(out)):
                    value = out
                    value.setflags(write=False)
            except ChromacError:
                value = None
        nonneg = bool(np.all(value >= 0)) if value is not None else _nonneg(n.op, kids)
        return ClassData(shape, flag, value, nonneg)

    def shape_of(self, op: str, children) -> Shape | None:
        return infer_shape(op, [self.data(c).shape for c in children])

    def add(self, n: ENode) -> int:
        n = self.canonicalize(n)
        if n in self.memo:
            return self.find(self.memo[n])
        data = self.make(n)
        cid = len(self._parent)
        self._parent.append(cid)
        cls = EClass(cid, data)
        cls.nodes[n] = None
        self.classes[cid] = cls
        for c in n.children:
            self.classes[self.find(c)].parents.append((n, cid))
        self.memo[n] = cid
        self.version += 1
        if data.const_value is not None and n.op != "const":
            self._fold_pending.append(cid)
        return cid

    def union(self, a: int, b: int) -> int:
        a, b = self.find(a), self.find(b)
        if a == b:
            return a
        ca, cb = self.classes[a], self.classes[b]
        # keep the older id as root so ids stay stable across runs
        if b < a:
            ca, cb = cb, ca
        self._parent[cb.id] = ca.id
        ca.nodes.update(cb.nodes)
        ca.parents.extend(cb.parents)
        a_changed = ca.data.merge(cb.data)
        b_changed = cb.data.const_flag != ca.data.const_flag or cb.data.nonneg != ca.data.nonneg
        del self.classes[cb.id]
        self._pending.append(ca.id)
        if a_changed or b_changed:
            self._analysis_pending.append(ca.id)
        self.version += 1
        return ca.id

    # -- invariants ------------------------------------------------------

    def rebuild(self) -> None:
        while self._pending or self._analysis_pending or self._fold_pending:
            todo = {self.find(c): None for c in self._pending}
            self._pending.clear()
            for cid in todo:
                self._repair(cid)
            changed = {self.find(c): None for c in self._analysis_pending}
            self._analysis_pending.clear()
            for cid in changed:
                self._propagate(cid)
                if self.data(cid).const_value is not None:
                    self._fold_pending.append(cid)
            folds = {self.find(c): None for c in self._fold_pending}
            self._fold_pending.clear()
            for cid in folds:
                self._fold(cid)
        for cls in self.classes.values():
            cls.nodes = {self.canonicalize(n): None for n in cls.nodes}
            cls.by_op = {}
            for n in cls.nodes:
                cls.by_op.setdefault(n.op, []).append(n)

    def _fold(self, cid: int) -> None:
        """Give a class with a known constant value an explicit const leaf."""
        cls = self.classes[self.find(cid)]
        if any(n.op == "const" for n in cls.nodes):
            return
        leaf = self.add(ENode("const", (), self.const_handle(cls.data.const_value)))
        self.union(cls.id, leaf)

    def _repair(self, cid: int) -> None:
        cls = self.classes[self.find(cid)]
        for n, _ in cls.parents:
            self.memo.pop(n, None)
        seen: dict[ENode, int] = {}
        for n, pid in cls.parents:
            n = self.canonicalize(n)
            pid = self.find(pid)
            if n in seen:
                pid = self.union(seen[n], pid)
            elif n in self.memo and self.find(self.memo[n]) != pid:
                pid = self.union(self.memo[n], pid)
            seen[n] = self.find(pid)
            self.memo[n] = self.find(pid)
        cls = self.classes[self.find(cid)]
        cls.parents = [(n, self.find(p)) for n, p in seen.items()]

    def _propagate(self, cid: int) -> None:
        cls = self.classes.get(self.find(cid))
        if cls is None:
            return
        for n, pid in list(cls.parents):
            pcls = self.classes[self.find(pid)]
            if pcls.data.merge(self.make(self.canonicalize(n))):
                self._analysis_pending.append(pcls.id)

    def canonical_classes(self) -> list[EClass]:
        return [self.classes[k] for k in sorted(self.classes)]

    def nodes_of(self, cid: int) -> list[ENode]:
        """Members of a class; canonical as of the last rebuild."""
        return list(self.classes[self.find(cid)].nodes)


def from_graph(g: IRGraph) -> tuple[EGraph, dict[int, int]]:
    """Load an IR graph; returns the e-graph and node id -> class id."""
    eg = EGraph()
    cls: dict[int, int] = {}
    for n in g.nodes:
        if n.op == "const":
            cls[n.id] = eg.add_const(n.value)
        elif n.op == "input":
            cls[n.id] = eg.add_input(n.name, n.shape, n.nonneg)
        else:
            cls[n.id] = eg.add(ENode(n.op, tuple(cls[o] for o in n.operands)))
    eg.rebuild()
    return eg, cls
