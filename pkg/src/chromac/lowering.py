"""Translate a type-checked program into the tensor IR.

Every value of shaped type ``(tau, d)`` becomes a tensor of shape
``d + [channels(tau)]`` (Matrix values keep ``d``). Casts expand along the
casting graph and each edge instantiates one recipe below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import color
from .casts import cast_path
from .checker import TypedProgram, channel_index
from .errors import InternalError
from .ir import GraphBuilder, IRGraph, Port
from .stdlib import BUILTINS
from .syntax import ArrayLit, BinOp, Channel, Construct, Expr, MatMul, Mix, Number, Var
from .types import NONLINEAR, PhysicalType, ShapedType

P = PhysicalType
NB = color.N_BANDS

GAMMAS = {P.sRGB: color.SRGB_GAMMA, P.opRGB: color.OPRGB_GAMMA}

# keeps HSV divisions finite on the achromatic axis; any positive value works
# because the numerators vanish there too
_EPS = float(np.finfo(np.float64).tiny)


def _unit(n: int, i: int) -> np.ndarray:
    v = np.zeros((n, 1))
    v[i, 0] = 1.0
    return v


def _pigment_selectors() -> tuple[np.ndarray, np.ndarray]:
    """[178, 89] slicing matrices for the scattering and absorption halves."""
    eye = np.eye(NB)
    zero = np.zeros((NB, NB))
    return np.vstack([eye, zero]), np.vstack([zero, eye])


SEL_SCATTER, SEL_ABSORB = _pigment_selectors()
# LAB channels from cube-rooted, whitepoint-normalised XYZ: [fx, fy, fz] @ LAB_FROM_F + LAB_OFFSET
LAB_FROM_F = np.array([[0.0, 500.0, 0.0], [116.0, -500.0, 200.0], [0.0, 0.0, -200.0]])
LAB_OFFSET = np.array([-16.0, 0.0, 0.0])
F_FROM_LAB = np.linalg.inv(LAB_FROM_F)


@dataclass
class LoweredProgram:
    graph: IRGraph
    statement_nodes: dict[str, int]  # bound name -> node id of its value


class _Lowerer:
    def __init__(self, tp: TypedProgram):
        self.tp = tp
        self.b = GraphBuilder()
        self.env: dict[str, int] = {}

    # small helpers

    def c(self, value) -> int:
        return self.b.const(value)

    def op(self, name: str, *args: int) -> int:
        return self.b.op(name, *args)

    def decode(self, v: int, phys: P) -> int:
        g = GAMMAS[phys]
        return self.op("pow", self.op("div", v, self.c(g.scale)), self.c(g.gamma))

    def encode(self, v: int, phys: P) -> int:
        g = GAMMAS[phys]
        return self.op("mul", self.op("pow", v, self.c(1.0 / g.gamma)), self.c(g.scale))

    def linear(self, phys: P, v: int, f) -> int:
        """Apply ``f`` to ``v`` in linear light when ``phys`` is gamma-encoded."""
        if phys in NONLINEAR:
            return self.encode(f(self.decode(v, phys)), phys)
        return f(v)

    def pick(self, v: int, n: int, i: int) -> int:
        return self.op("matmul", v, self.c(_unit(n, i)))

    # expressions

    def lower(self, e: Expr) -> int:
        rule = self.tp.rules[e]
        t = self.tp.types[e]
        if isinstance(e, Var):
            if rule == "Builtin":
                return self.c(BUILTINS[e.name].value)
            return self.env[e.name]
        if isinstance(e, Number):
            return self.c(e.value)
        if isinstance(e, BinOp):
            return self.binop(e, rule, t)
        if isinstance(e, Construct):
            return self.construct(e, rule, t)
        if isinstance(e, Mix):
            c1, p1, c2, p2 = (self.lower(x) for x in (e.c1, e.p1, e.c2, e.p2))
            num = self.op("add", self.op("mul", p1, c1), self.op("mul", p2, c2))
            return self.op("div", num, self.op("add", c1, c2))
        if isinstance(e, MatMul):
            v, m = self.lower(e.left), self.lower(e.right)
            return self.linear(t.phys, v, lambda x: self.op("matmul", x, m))
        if isinstance(e, Channel):
            base = self.tp.types[e.base]
            v = self.lower(e.base)
            return self.pick(v, base.phys.channel_count, channel_index(base.phys, e.name))
        raise InternalError(f"no lowering for {type(e).__name__}")

    def binop(self, e: BinOp, rule: str, t: ShapedType) -> int:
        a, b = self.lower(e.left), self.lower(e.right)
        name = {"+": "add", "-": "sub", "*": "mul", "/": "div"}[e.op]
        if rule == "TristimulusAdd" and t.phys in NONLINEAR:
            return self.encode(
                self.op(name, self.decode(a, t.phys), self.decode(b, t.phys)), t.phys
            )
        if rule == "TriScale" and t.phys in NONLINEAR:
            if self.tp.types[e.left].phys == P.Matrix:
                return self.linear(t.phys, b, lambda x: self.op(name, a, x))
            return self.linear(t.phys, a, lambda x: self.op(name, x, b))
        return self.op(name, a, b)

    def construct(self, e: Construct, rule: str, t: ShapedType) -> int:
        if rule == "PgmtInit":
            absorb, scatter = (self.lower(x) for x in e.args)
            return self.op(
                "add",
                self.op("matmul", scatter, self.c(SEL_SCATTER.T)),
                self.op("matmul", absorb, self.c(SEL_ABSORB.T)),
            )
        (arg,) = e.args
        if rule == "Literal":
            if isinstance(arg, Number):
                return self.c(arg.value)
            assert isinstance(arg, ArrayLit)
            return self.c(np.array(arg.data, dtype=np.float64).reshape(t.erase()))
        v = self.lower(arg)
        if rule in ("Identity", "MatrixCast"):
            return v
        src = self.tp.types[arg].phys
        for _, _, recipe in cast_path(src, e.phys):
            v = getattr(self, recipe)(v)
        return v

    # cast recipes, one per casting-graph edge

    def light_to_lms(self, v):
        return self.op("matmul", v, self.c(color.M1))

    def lms_to_xyz(self, v):
        return self.op("matmul", v, self.c(color.M2))

    def xyz_to_lms(self, v):
        return self.op("matmul", v, self.c(color.M2_INV))

    def xyz_to_srgb(self, v):
        return self.encode(self.op("matmul", v, self.c(color.M3)), P.sRGB)

    def srgb_to_xyz(self, v):
        return self.op("matmul", self.decode(v, P.sRGB), self.c(color.M3_INV))

    def xyz_to_oprgb(self, v):
        return self.encode(self.op("matmul", v, self.c(color.M4)), P.opRGB)

    def oprgb_to_xyz(self, v):
        return self.op("matmul", self.decode(v, P.opRGB), self.c(color.M4_INV))

    def xyz_to_lab(self, v):
        wp = self.c(color.WHITEPOINT_D65)
        f = self.op("pow", self.op("div", v, wp), self.c(1.0 / 3.0))
        return self.op("add", self.op("matmul", f, self.c(LAB_FROM_F)), self.c(LAB_OFFSET))

    def lab_to_xyz(self, v):
        f = self.op("matmul", self.op("sub", v, self.c(LAB_OFFSET)), self.c(F_FROM_LAB))
        return self.op("mul", self.op("pow", f, self.c(3.0)), self.c(color.WHITEPOINT_D65))

    def xyz_to_chromaticity(self, v):
        xy = self.op("matmul", v, self.c(np.eye(3)[:, :2]))
        return self.op("div", xy, self.op("matmul", v, self.c(np.ones((3, 2)))))

    def pigment_to_scattering(self, v):
        return self.op("matmul", v, self.c(SEL_SCATTER))

    def pigment_to_absorption(self, v):
        return self.op("matmul", v, self.c(SEL_ABSORB))

    def pigment_to_reflectance(self, v):
        ks = self.op("div", self.pigment_to_absorption(v), self.pigment_to_scattering(v))
        root = self.op(
            "pow",
            self.op("add", self.op("mul", ks, ks), self.op("mul", ks, self.c(2.0))),
            self.c(0.5),
        )
        return self.op("sub", self.op("add", ks, self.c(1.0)), root)

    def srgb_to_hsv(self, v):
        op, c = self.op, self.c
        x = op("div", v, c(255.0))
        r, g, b = (self.pick(x, 3, i) for i in range(3))
        mx = op("max", op("max", r, g), b)
        mn = op("min", op("min", r, g), b)
        delta = op("sub", mx, mn)
        sat = op("div", delta, op("max", mx, c(_EPS)))
        safe = op("max", delta, c(_EPS))
        h_r = op("floor_mod", op("div", op("sub", g, b), safe), c(6.0))
        h_g = op("add", op("div", op("sub", b, r), safe), c(2.0))
        h_b = op("add", op("div", op("sub", r, g), safe), c(4.0))
        # the first channel equal to the maximum picks the hue sector
        sector = op("select", op("sub", r, mx), h_r, op("select", op("sub", g, mx), h_g, h_b))
        hue = op("select", op("sub", c(0.0), delta), c(0.0), op("mul", sector, c(60.0)))
        hue = op("floor_mod", hue, c(360.0))
        parts = [op("matmul", ch, c(np.eye(3)[i:i + 1])) for i, ch in enumerate((hue, sat, mx))]
        return op("add", op("add", parts[0], parts[1]), parts[2])

    def hsv_to_srgb(self, v):
        op, c = self.op, self.c
        spread = np.zeros((3, 3, 3))
        for i in range(3):
            spread[i][i, :] = 1.0
        h6 = op("matmul", v, c(spread[0] / 60.0))
        sat = op("matmul", v, c(spread[1]))
        val = op("matmul", v, c(spread[2]))
        # f(n) = V - V S max(0, min(k, 4 - k, 1)),  k = (n + H/60) mod 6,  n = 5, 3, 1
        k = op("floor_mod", op("add", h6, c([5.0, 3.0, 1.0])), c(6.0))
        ramp = op("max", c(0.0), op("min", op("min", k, op("sub", c(4.0), k)), c(1.0)))
        rgb = op("sub", val, op("mul", op("mul", val, sat), ramp))
        return op("mul", rgb, c(255.0))

    # program

    def program(self) -> LoweredProgram:
        inputs = []
        for d in self.tp.program.inputs:
            node = self.b.input(d.name, d.type.erase(), d.type.phys.nonnegative)
            self.env[d.name] = node
            inputs.append(Port(d.name, node, str(d.type)))
        for s in self.tp.program.statements:
            self.env[s.name] = self.lower(s.expr)
        outputs = [
            Port(o.name, self.env[o.name], str(self.tp.env[o.name])) for o in self.tp.program.outputs
        ]
        return LoweredProgram(self.b.finish(inputs, outputs), dict(self.env))


def lower_program(tp: TypedProgram) -> LoweredProgram:
    return _Lowerer(tp).program()


def lower(tp: TypedProgram) -> IRGraph:
    """Lower a typed program; the result passes ``ir_shape_check``."""
    return lower_program(tp).graph
