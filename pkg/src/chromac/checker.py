"""Static type checker: assigns a ShapedType to every expression.

Each accepted node is tagged with the name of the rule that typed it, which
lowering uses to pick a recipe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .casts import path_exists
from .errors import (
    DimensionMismatchError,
    IllegalCastError,
    TypeMismatchError,
    UnknownChannelError,
)
from .ir import broadcast_shape, matmul_shape
from .stdlib import BUILTINS
from .syntax import (
    ArrayLit,
    BinOp,
    Channel,
    Construct,
    Expr,
    MatMul,
    Mix,
    Number,
    Program,
    Var,
    array_shape,
)
from .types import CHANNEL_NAMES, PhysicalType, ShapedType

P = PhysicalType
MATRIX_SCALAR = ShapedType(P.Matrix, (1,))


@dataclass(frozen=True)
class TypedProgram:
    program: Program
    env: dict[str, ShapedType]  # every input and bound name
    types: dict[Expr, ShapedType]  # keyed by node identity
    rules: dict[Expr, str]

    def type_of(self, e: Expr) -> ShapedType:
        return self.types[e]

    @property
    def input_types(self) -> dict[str, ShapedType]:
        return {d.name: d.type for d in self.program.inputs}

    @property
    def output_types(self) -> dict[str, ShapedType]:
        return {o.name: self.env[o.name] for o in self.program.outputs}


def _fits(m: tuple, target: tuple) -> bool:
    """Does a Matrix of shape ``m`` broadcast onto ``target`` without growing it?"""
    return broadcast_shape(m, target) == tuple(target)


def channel_index(phys: PhysicalType, name: str) -> int | None:
    names = CHANNEL_NAMES.get(phys)
    if names is None:
        return None
    if name in names:
        return names.index(name)
    folded = [n.lower() for n in names]
    if name.lower() in folded and folded.count(name.lower()) == 1:
        return folded.index(name.lower())
    return None


class _Checker:
    def __init__(self):
        self.env: dict[str, ShapedType] = {}
        self.types: dict[Expr, ShapedType] = {}
        self.rules: dict[Expr, str] = {}

    def mismatch(self, e: Expr, rule: str, msg: str):
        return TypeMismatchError(f"{rule}: {msg}", e.line, e.col)

    def dim_error(self, e: Expr, rule: str, a: ShapedType, b: ShapedType):
        return DimensionMismatchError(f"{rule}: dimensions of {a} and {b} differ", e.line, e.col)

    def check(self, e: Expr) -> ShapedType:
        t, rule = self._infer(e)
        self.types[e] = t
        self.rules[e] = rule
        return t

    def _infer(self, e: Expr) -> tuple[ShapedType, str]:
        if isinstance(e, Var):
            if e.name in self.env:
                return self.env[e.name], "Var"
            return BUILTINS[e.name].type, "Builtin"
        if isinstance(e, Number):
            return MATRIX_SCALAR, "Scalar"
        if isinstance(e, ArrayLit):
            raise self.mismatch(e, "Literal", "array literal needs a type constructor, e.g. Matrix([...])")
        if isinstance(e, BinOp):
            return self._binop(e)
        if isinstance(e, Construct):
            return self._construct(e)
        if isinstance(e, Mix):
            return self._mix(e)
        if isinstance(e, MatMul):
            return self._matmul(e)
        if isinstance(e, Channel):
            return self._channel(e)
        raise TypeError(f"unknown expression node {e!r}")

    def _binop(self, e: BinOp) -> tuple[ShapedType, str]:
        a, b = self.check(e.left), self.check(e.right)
        sym = e.op
        if sym in "+-":
            if a.phys == b.phys == P.Matrix:
                out = broadcast_shape(a.dims, b.dims)
                if out is None:
                    raise self.dim_error(e, "MatrixAdd", a, b)
                return ShapedType(P.Matrix, out), "MatrixAdd"
            if a.phys == b.phys and (a.phys.is_color or a.phys == P.Light):
                rule = (
                    "LightAdd" if a.phys == P.Light
                    else "TristimulusAdd" if a.phys.is_tristimulus
                    else "PerceptualAdd"
                )
                if a.dims != b.dims:
                    raise self.dim_error(e, rule, a, b)
                return a, rule
            raise self.mismatch(e, "Add", f"cannot apply {sym!r} to {a} and {b}")
        if sym == "*":
            if a.phys == b.phys == P.Matrix:
                out = broadcast_shape(a.dims, b.dims)
                if out is None:
                    raise self.dim_error(e, "MatrixMul", a, b)
                return ShapedType(P.Matrix, out), "MatrixMul"
            if {a.phys, b.phys} == {P.Light, P.Reflectance}:
                light, refl = (a, b) if a.phys == P.Light else (b, a)
                if light.dims == refl.dims or refl.dims == (1,):
                    return light, "Reflect"
                if light.dims == (1,):
                    return ShapedType(P.Light, refl.dims), "Reflect"
                raise self.dim_error(e, "Reflect", a, b)
            if P.Matrix in (a.phys, b.phys):
                color, m = (a, b) if b.phys == P.Matrix else (b, a)
                if color.phys.is_color:
                    rule = "TriScale" if color.phys.is_tristimulus else "PerceptualScale"
                    if not _fits(m.dims, color.erase()):
                        raise self.dim_error(e, rule, color, m)
                    return color, rule
            raise self.mismatch(e, "Mul", f"cannot multiply {a} by {b}")
        if sym == "/":
            if a.phys == b.phys == P.Matrix:
                out = broadcast_shape(a.dims, b.dims)
                if out is None:
                    raise self.dim_error(e, "MatrixDiv", a, b)
                return ShapedType(P.Matrix, out), "MatrixDiv"
            raise self.mismatch(e, "Div", f"division is defined only between Matrix values, got {a} and {b}")
        raise TypeError(sym)

    def _construct(self, e: Construct) -> tuple[ShapedType, str]:
        tau = e.phys
        if len(e.args) == 2:
            a, s = self.check(e.args[0]), self.check(e.args[1])
            if tau != P.Pigment:
                raise self.mismatch(e, "PgmtInit", f"{tau} does not take two arguments")
            if a.phys != P.Absorption or s.phys != P.Scattering:
                raise self.mismatch(
                    e, "PgmtInit", f"expects (Absorption, Scattering), got ({a}, {s})"
                )
            if a.dims != s.dims:
                raise self.dim_error(e, "PgmtInit", a, s)
            return ShapedType(P.Pigment, a.dims), "PgmtInit"
        (arg,) = e.args
        if isinstance(arg, (ArrayLit, Number)):
            return self._literal(e, arg), "Literal"
        t = self.check(arg)
        if t.phys == tau:
            return t, "Identity"
        if tau == P.Matrix:
            if t.phys == P.Pigment:
                raise IllegalCastError("Pigment values cannot be viewed as a Matrix", e.line, e.col)
            return ShapedType(P.Matrix, t.erase()), "MatrixCast"
        if t.phys == P.Matrix:
            c = tau.channel_count
            if tau == P.Pigment or len(t.dims) < 2 or t.dims[-1] != c:
                raise IllegalCastError(
                    f"cannot view {t} as {tau}: need a Matrix of rank >= 2 with {c} trailing channels",
                    e.line,
                    e.col,
                )
            return ShapedType(tau, t.dims[:-1]), "MatrixCast"
        if not path_exists(t.phys, tau):
            raise IllegalCastError(f"no cast from {t.phys} to {tau}", e.line, e.col)
        return ShapedType(tau, t.dims), "Cast"

    def _literal(self, e: Construct, arg: Expr) -> ShapedType:
        tau = e.phys
        if isinstance(arg, Number):
            if tau != P.Matrix:
                raise self.mismatch(e, "Literal", f"a bare number cannot be a {tau}")
            self.types[arg], self.rules[arg] = MATRIX_SCALAR, "Scalar"
            return MATRIX_SCALAR
        shape = array_shape(arg.data)
        if tau == P.Matrix:
            return ShapedType(P.Matrix, shape)
        if tau == P.Pigment:
            raise self.mismatch(e, "Literal", "Pigment literals are built with Pigment(absorption, scattering)")
        c = tau.channel_count
        if shape[-1] != c:
            raise self.mismatch(e, "Literal", f"{tau} literal needs {c} values per entry, got {shape[-1]}")
        if tau.nonnegative and np.min(np.array(arg.data)) < 0:
            raise self.mismatch(e, "Literal", f"{tau} literal must be nonnegative")
        return ShapedType(tau, shape[:-1] if len(shape) > 1 else (1,))

    def _mix(self, e: Mix) -> tuple[ShapedType, str]:
        c1, p1, c2, p2 = (self.check(x) for x in (e.c1, e.p1, e.c2, e.p2))
        for c in (c1, c2):
            if c != MATRIX_SCALAR:
                raise self.mismatch(e, "PgmtMix", f"concentration must be a scalar Matrix[1], got {c}")
        for p in (p1, p2):
            if p.phys != P.Pigment:
                raise self.mismatch(e, "PgmtMix", f"expects Pigment operands, got {p}")
        if p1.dims != p2.dims:
            raise self.dim_error(e, "PgmtMix", p1, p2)
        return p1, "PgmtMix"

    def _matmul(self, e: MatMul) -> tuple[ShapedType, str]:
        a, m = self.check(e.left), self.check(e.right)
        if m.phys != P.Matrix:
            raise self.mismatch(e, "MatMul", f"right operand must be a Matrix, got {m}")
        if a.phys.is_tristimulus:
            if m.dims != (3, 3):
                raise self.dim_error(e, "MatMul", a, m)
            return a, "MatMul"
        if a.phys == P.Matrix:
            out = matmul_shape(a.dims, m.dims)
            if out is None:
                raise self.dim_error(e, "MatrixMatMul", a, m)
            return ShapedType(P.Matrix, out), "MatrixMatMul"
        raise self.mismatch(e, "MatMul", f"cannot matmul {a} with {m}")

    def _channel(self, e: Channel) -> tuple[ShapedType, str]:
        t = self.check(e.base)
        idx = channel_index(t.phys, e.name)
        if idx is None:
            names = CHANNEL_NAMES.get(t.phys)
            hint = f"; expected one of {', '.join(names)}" if names else ""
            raise UnknownChannelError(f"{t} has no channel {e.name!r}{hint}", e.line, e.col)
        return ShapedType(P.Matrix, t.dims + (1,)), "Channel"


def type_check(p: Program) -> TypedProgram:
    """Type every expression of a parsed program; raises TypeCheckError."""
    c = _Checker()
    for d in p.inputs:
        c.env[d.name] = d.type
    for s in p.statements:
        c.env[s.name] = c.check(s.expr)
    return TypedProgram(p, dict(c.env), c.types, c.rules)
