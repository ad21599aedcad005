"""Rewrite rules and e-matching.

Patterns are nested tuples ``(op, sub, ...)`` whose leaves are variables
(``"?x"``). A rule's right-hand side is either a pattern or an applier
``f(egraph, subst) -> class id | None`` for rewrites that compute new
constants. Side conditions see the e-graph and the substitution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .egraph import EGraph, ENode
from .ir import infer_shape

Pattern = Union[str, tuple]
Subst = dict[str, int]
Condition = Callable[[EGraph, Subst], bool]
Applier = Callable[[EGraph, Subst], Union[int, None]]


def is_var(p) -> bool:
    return isinstance(p, str) and p.startswith("?")


Matcher = Callable[[EGraph, int, Subst], list]


def compile_pattern(pat: Pattern) -> Matcher:
    """Turn a pattern into a function listing substitutions at one class.

    Assumes the e-graph was rebuilt since the last union, so every child id
    is canonical.
    """
    if is_var(pat):

        def match_var(eg, cid, s):
            bound = s.get(pat)
            if bound is None:
                s = dict(s)
                s[pat] = cid
                return [s]
            return [s] if bound == cid else []

        return match_var
    op, subs = pat[0], [compile_pattern(p) for p in pat[1:]]
    arity = len(subs)

    def match_op(eg, cid, s):
        out = []
        for n in eg.classes[cid].by_op.get(op, ()):
            if len(n.children) != arity:
                continue
            partial = [s]
            for sub, child in zip(subs, n.children):
                partial = [s2 for s1 in partial for s2 in sub(eg, child, s1)]
                if not partial:
                    break
            out.extend(partial)
        return out

    return match_op


@dataclass(frozen=True)
class Rule:
    name: str
    lhs: Pattern
    rhs: Pattern | Applier
    cond: Condition | None = None

    def __post_init__(self):
        object.__setattr__(self, "_matcher", compile_pattern(self.lhs))

    def search(self, eg: EGraph, index: dict[str, list[int]], limit: int | None = None):
        """All matches, or None once more than ``limit`` have been found."""
        out = []
        for cid in index.get(self.lhs[0], ()):
            if eg.classes[cid].data.const_flag:
                continue  # constant terms are free and get folded anyway
            for s in self._matcher(eg, cid, {"?root": cid}):
                if self.cond is None or self.cond(eg, s):
                    out.append((cid, s))
                    if limit is not None and len(out) > limit:
                        return None
        return out

    def apply(self, eg: EGraph, cid: int, s: Subst) -> int | None:
        """Add the right-hand side for one match; returns its class or None."""
        if callable(self.rhs):
            return self.rhs(eg, s)
        if dry_shape(eg, self.rhs, s) != eg.data(cid).shape:
            return None
        return instantiate(eg, self.rhs, s)


def match(eg: EGraph, pat: Pattern, cid: int, s: Subst | None = None) -> list[Subst]:
    return compile_pattern(pat)(eg, eg.find(cid), dict(s or {}))


def dry_shape(eg: EGraph, pat: Pattern, s: Subst):
    """Shape the instantiated pattern would have, or None if ill-shaped."""
    if is_var(pat):
        return eg.data(s[pat]).shape
    shapes = [dry_shape(eg, p, s) for p in pat[1:]]
    if any(sh is None for sh in shapes):
        return None
    return infer_shape(pat[0], shapes)


def instantiate(eg: EGraph, pat: Pattern, s: Subst) -> int:
    if is_var(pat):
        return s[pat]
    return eg.add(ENode(pat[0], tuple(instantiate(eg, p, s) for p in pat[1:])))


# -- side conditions -------------------------------------------------------


def _value(eg: EGraph, s: Subst, var: str):
    return eg.data(s[var]).const_value


def nonneg(*vars: str) -> Condition:
    return lambda eg, s: all(eg.data(s[v]).nonneg for v in vars)


def positive_const(var: str) -> Condition:
    def cond(eg, s):
        v = _value(eg, s, var)
        return v is not None and bool(np.all(v > 0))

    return cond


def const_equals(var: str, target: float) -> Condition:
    def cond(eg, s):
        v = _value(eg, s, var)
        return v is not None and bool(np.all(np.abs(v - target) <= 1e-12))

    return cond


def same_shape(var: str, root: str) -> Condition:
    """``var`` already has the shape of the matched term (no broadcast growth)."""
    return lambda eg, s: eg.data(s[var]).shape == eg.data(s[root]).shape


def not_const(var: str) -> Condition:
    return lambda eg, s: not eg.data(s[var]).const_flag


def both(*conds: Condition) -> Condition:
    return lambda eg, s: all(c(eg, s) for c in conds)


def either(*conds: Condition) -> Condition:
    return lambda eg, s: any(c(eg, s) for c in conds)


def _strip(shape) -> tuple:
    shape = tuple(shape)
    while len(shape) > 1 and shape[0] == 1:
        shape = shape[1:]
    return shape


def row_scale(vec: str, mat: str) -> Condition:
    """``vec`` scales the columns of matrix ``mat``: shape [1] or [n]."""

    def cond(eg, s):
        v = _strip(eg.data(s[vec]).shape)
        m = eg.data(s[mat]).shape
        return len(m) == 2 and v in ((1,), (m[1],))

    return cond


# -- appliers that compute new constants -----------------------------------


def _div_to_mul(eg: EGraph, s: Subst):
    c = _value(eg, s, "?c")
    if c is None or np.any(c == 0):
        return None
    return eg.add(ENode("mul", (s["?x"], eg.add_const(1.0 / c))))


def _mul_into_pow(eg: EGraph, s: Subst):
    # x^a * c  ==  (x * c^(1/a))^a   for c > 0, a != 0
    a, c = _value(eg, s, "?a"), _value(eg, s, "?c")
    if a is None or c is None or np.any(a == 0) or np.any(c <= 0):
        return None
    root = s["?root"]
    with np.errstate(over="ignore", invalid="ignore"):
        k = np.power(c, 1.0 / a)
        back = np.power(k, a)
    if not (np.all(np.isfinite(k)) and np.allclose(back, c, rtol=1e-12, atol=0)):
        return None
    kc = eg.add_const(k)
    if eg.shape_of("mul", (s["?x"], kc)) is None:
        return None
    inner = eg.add(ENode("mul", (s["?x"], kc)))
    if eg.shape_of("pow", (inner, s["?a"])) != eg.data(root).shape:
        return None
    return eg.add(ENode("pow", (inner, s["?a"])))


def _sink_scale(eg: EGraph, s: Subst):
    # matmul(x * v, A) == matmul(x, diag(v) A) when v scales x's last axis
    x, v, a = s["?x"], eg.data(s["?v"]), eg.data(s["?A"])
    if len(a.shape) != 2 or eg.shape_of("mul", (x, s["?v"])) != eg.data(x).shape:
        return None
    flat = _strip(v.shape)
    if flat == (1,):
        scaled = eg.add(ENode("mul", (s["?A"], s["?v"])))
    elif flat == (a.shape[0],):
        if v.const_value is None or a.const_value is None:
            return None
        scaled = eg.add_const(v.const_value.reshape(-1, 1) * a.const_value)
    else:
        return None
    if eg.shape_of("matmul", (x, scaled)) is None:
        return None
    return eg.add(ENode("matmul", (x, scaled)))


# -- catalog ---------------------------------------------------------------

_pow_split = either(nonneg("?x", "?y"), positive_const("?x"), positive_const("?y"))

RULES: tuple[Rule, ...] = (
    Rule("add-comm", ("add", "?x", "?y"), ("add", "?y", "?x")),
    Rule("mul-comm", ("mul", "?x", "?y"), ("mul", "?y", "?x")),
    Rule("add-assoc", ("add", ("add", "?x", "?y"), "?z"), ("add", "?x", ("add", "?y", "?z"))),
    Rule("add-assoc-rev", ("add", "?x", ("add", "?y", "?z")), ("add", ("add", "?x", "?y"), "?z")),
    Rule("mul-assoc", ("mul", ("mul", "?x", "?y"), "?z"), ("mul", "?x", ("mul", "?y", "?z"))),
    Rule("mul-assoc-rev", ("mul", "?x", ("mul", "?y", "?z")), ("mul", ("mul", "?x", "?y"), "?z")),
    Rule(
        "mul-distribute",
        ("mul", "?x", ("add", "?y", "?z")),
        ("add", ("mul", "?x", "?y"), ("mul", "?x", "?z")),
    ),
    Rule(
        "mul-factor",
        ("add", ("mul", "?x", "?y"), ("mul", "?x", "?z")),
        ("mul", "?x", ("add", "?y", "?z")),
    ),
    Rule(
        "matmul-assoc",
        ("matmul", ("matmul", "?x", "?A"), "?B"),
        ("matmul", "?x", ("matmul", "?A", "?B")),
    ),
    Rule(
        "matmul-assoc-rev",
        ("matmul", "?x", ("matmul", "?A", "?B")),
        ("matmul", ("matmul", "?x", "?A"), "?B"),
    ),
    Rule(
        "matmul-distribute",
        ("matmul", ("add", "?x", "?y"), "?A"),
        ("add", ("matmul", "?x", "?A"), ("matmul", "?y", "?A")),
    ),
    Rule(
        "matmul-factor",
        ("add", ("matmul", "?x", "?A"), ("matmul", "?y", "?A")),
        ("matmul", ("add", "?x", "?y"), "?A"),
    ),
    Rule(
        "pow-fuse",
        ("pow", ("pow", "?x", "?a"), "?b"),
        ("pow", "?x", ("mul", "?a", "?b")),
        both(nonneg("?x"), positive_const("?a"), positive_const("?b")),
    ),
    Rule(
        "pow-mul-split",
        ("pow", ("mul", "?x", "?y"), "?a"),
        ("mul", ("pow", "?x", "?a"), ("pow", "?y", "?a")),
        _pow_split,
    ),
    Rule(
        "pow-mul-join",
        ("mul", ("pow", "?x", "?a"), ("pow", "?y", "?a")),
        ("pow", ("mul", "?x", "?y"), "?a"),
        both(nonneg("?x", "?y"), not_const("?x"), not_const("?y")),
    ),
    Rule("mul-into-pow", ("mul", ("pow", "?x", "?a"), "?c"), _mul_into_pow, positive_const("?c")),
    Rule("mul-one", ("mul", "?x", "?one"), "?x", both(const_equals("?one", 1.0), same_shape("?x", "?root"))),
    Rule("add-zero", ("add", "?x", "?zero"), "?x", both(const_equals("?zero", 0.0), same_shape("?x", "?root"))),
    Rule("pow-one", ("pow", "?x", "?one"), "?x", both(const_equals("?one", 1.0), same_shape("?x", "?root"))),
    Rule("div-const", ("div", "?x", "?c"), _div_to_mul),
    Rule(
        "hoist-scale",
        ("mul", ("matmul", "?x", "?A"), "?c"),
        ("matmul", "?x", ("mul", "?A", "?c")),
        row_scale("?c", "?A"),
    ),
    Rule("sink-scale", ("matmul", ("mul", "?x", "?v"), "?A"), _sink_scale),
)

RULES_BY_NAME = {r.name: r for r in RULES}
