"""Random well-typed programs and in-domain input tensors.

The program generator runs the typing rules backwards: asked for a value of
some shaped type, it picks one of the rules whose conclusion has that type
and recursively generates the premises.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import color
from .casts import path_exists
from .syntax import (
    ArrayLit,
    BinOp,
    Binding,
    Channel,
    Construct,
    Expr,
    InputDecl,
    MatMul,
    Mix,
    Number,
    OutputDecl,
    Program,
    Var,
)
from .types import CHANNEL_NAMES, PhysicalType, ShapedType

P = PhysicalType

DIM_POOL = ((1,), (2,), (3,), (2, 2), (3, 2), (2, 2, 2))
VALUE_TYPES = tuple(t for t in P if t != P.Matrix)


@dataclass
class GenConfig:
    max_statements: int = 4
    max_depth: int = 3
    allow_sub: bool = True
    allow_div: bool = True


@dataclass
class _State:
    rng: random.Random
    cfg: GenConfig
    inputs: list[InputDecl] = field(default_factory=list)
    env: dict[str, ShapedType] = field(default_factory=dict)

    def fresh_input(self, t: ShapedType) -> Var:
        name = f"in{len(self.inputs)}"
        self.inputs.append(InputDecl(name, t))
        self.env[name] = t
        return Var(name)

    def existing(self, t: ShapedType) -> list[str]:
        return [n for n, u in self.env.items() if u == t]


def _literal(rng: random.Random, t: ShapedType) -> Expr:
    shape = t.erase() if t.phys != P.Matrix else t.dims
    hi = 255.0 if t.phys in (P.sRGB, P.opRGB) else 1.0
    values = np.round(np.array([rng.uniform(0.05, hi) for _ in range(int(np.prod(shape)))]), 3)
    data = values.reshape(shape).tolist()

    def tup(x):
        return tuple(tup(v) for v in x) if isinstance(x, list) else float(x)

    if t.phys != P.Matrix:
        # one entry per dims position, flattened to the literal rule's shape
        return Construct(t.phys, (ArrayLit(tup(data)),))
    return Construct(P.Matrix, (ArrayLit(tup(data)),))


def _gen(st: _State, t: ShapedType, depth: int) -> Expr:
    rng = st.rng
    options = [_var_or_input]
    if depth > 0:
        options += _productions(st, t)
    return rng.choice(options)(st, t, depth)


def _var_or_input(st: _State, t: ShapedType, depth: int) -> Expr:
    names = st.existing(t)
    if t.phys == P.Matrix and t.dims == (1,) and st.rng.random() < 0.6:
        return Number(round(st.rng.uniform(0.1, 2.0), 3))
    if t.phys == P.Matrix and st.rng.random() < 0.4 and np.prod(t.dims) <= 12:
        return _literal(st.rng, t)
    if names and st.rng.random() < 0.6:
        return Var(st.rng.choice(names))
    return st.fresh_input(t)


def _productions(st: _State, t: ShapedType):
    ph, d = t.phys, t.dims
    out = []

    def binop(sym):
        return lambda st, t, k: BinOp(sym, _gen(st, t, k - 1), _gen(st, t, k - 1))

    if ph == P.Light or ph.is_color:
        out.append(binop("+"))
        if st.cfg.allow_sub and ph not in (P.sRGB, P.opRGB, P.Light):
            out.append(binop("-"))
    if ph == P.Light:
        def reflect(st, t, k):
            light_dims = st.rng.choice([d, (1,)])
            light = _gen(st, ShapedType(P.Light, light_dims), k - 1)
            refl = _gen(st, ShapedType(P.Reflectance, d), k - 1)
            return BinOp("*", light, refl) if st.rng.random() < 0.5 else BinOp("*", refl, light)

        out.append(reflect)
    if ph.is_color:
        def scale(st, t, k):
            m_dims = st.rng.choice([(1,), (3,), t.erase()])
            m = _gen(st, ShapedType(P.Matrix, m_dims), k - 1)
            v = _gen(st, t, k - 1)
            return BinOp("*", v, m) if st.rng.random() < 0.5 else BinOp("*", m, v)

        out.append(scale)
    if ph.is_tristimulus:
        out.append(lambda st, t, k: MatMul(_gen(st, t, k - 1), _gen(st, ShapedType(P.Matrix, (3, 3)), k - 1)))
    if ph != P.Matrix:
        sources = [s for s in VALUE_TYPES if s != ph and path_exists(s, ph)]
        if sources:
            def cast(st, t, k):
                src = st.rng.choice(sources)
                return Construct(ph, (_gen(st, ShapedType(src, d), k - 1),))

            out.append(cast)
        if ph != P.Pigment:
            out.append(
                lambda st, t, k: Construct(
                    ph, (_gen(st, ShapedType(P.Matrix, t.erase()), k - 1),)
                )
            )
    if ph == P.Pigment:
        out.append(
            lambda st, t, k: Construct(
                P.Pigment,
                (
                    _gen(st, ShapedType(P.Absorption, d), k - 1),
                    _gen(st, ShapedType(P.Scattering, d), k - 1),
                ),
            )
        )

        def mix(st, t, k):
            c = [Number(round(st.rng.uniform(0.1, 1.0), 3)) for _ in range(2)]
            return Mix(c[0], _gen(st, t, k - 1), c[1], _gen(st, t, k - 1))

        out.append(mix)
    if ph == P.Matrix:
        out.append(binop("+"))
        out.append(binop("*"))
        if st.cfg.allow_sub:
            out.append(binop("-"))
        if st.cfg.allow_div:
            def div(st, t, k):
                den = ShapedType(P.Matrix, st.rng.choice([(1,), t.dims]))
                return BinOp("/", _gen(st, t, k - 1), _gen(st, den, k - 1))

            out.append(div)
        if len(d) >= 2 and d[-1] == 1:
            lead = d[:-1]
            colours = [c for c in CHANNEL_NAMES if c.channel_count]

            def channel(st, t, k):
                src = st.rng.choice(colours)
                name = st.rng.choice(CHANNEL_NAMES[src])
                return Channel(_gen(st, ShapedType(src, lead), k - 1), name)

            out.append(channel)
        if len(d) >= 2:
            lead, c = d[:-1], d[-1]
            views = [v for v in VALUE_TYPES if v.channel_count == c and v != P.Pigment]
            if views:
                out.append(
                    lambda st, t, k: Construct(
                        P.Matrix, (_gen(st, ShapedType(st.rng.choice(views), lead), k - 1),)
                    )
                )
            if len(d) >= 2:
                def mm(st, t, k):
                    inner = st.rng.choice([1, 2, 3])
                    left = _gen(st, ShapedType(P.Matrix, d[:-1] + (inner,)), k - 1)
                    right = _gen(st, ShapedType(P.Matrix, (inner, d[-1])), k - 1)
                    return MatMul(left, right)

                out.append(mm)
    return out


def _random_type(rng: random.Random) -> ShapedType:
    ph = rng.choice(list(P))
    d = rng.choice(DIM_POOL)
    if ph == P.Matrix:
        d = rng.choice([(1,), d + (3,), d + (1,), d])
    return ShapedType(ph, d)


def random_program(rng: random.Random | int, cfg: GenConfig = GenConfig()) -> Program:
    """A random program that type checks by construction."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    st = _State(rng, cfg)
    stmts = []
    for i in range(rng.randint(1, cfg.max_statements)):
        t = _random_type(rng)
        e = _gen(st, t, rng.randint(1, cfg.max_depth))
        name = f"v{i}"
        stmts.append(Binding(name, e))
        st.env[name] = t
    names = [s.name for s in stmts]
    outs = [names[-1]] + [n for n in names[:-1] if rng.random() < 0.3]
    return Program(tuple(st.inputs), tuple(stmts), tuple(OutputDecl(n) for n in outs))


# -- inputs ------------------------------------------------------------------


def _srgb(rng: np.random.Generator, lead: tuple, lo=0.0, hi=255.0) -> np.ndarray:
    return rng.uniform(lo, hi, lead + (3,))


def sample_value(t: ShapedType, rng: np.random.Generator) -> np.ndarray:
    """Random tensor from the valid domain of ``t`` (in-gamut colours)."""
    lead, ph = t.dims, t.phys
    if ph == P.Matrix:
        return rng.uniform(0.05, 1.0, t.dims)
    if ph in (P.sRGB, P.opRGB):
        return _srgb(rng, lead)
    xyz = color.srgb_to_xyz(_srgb(rng, lead))
    if ph == P.XYZ:
        return xyz
    if ph == P.LMS:
        return color.xyz_to_lms(xyz)
    if ph == P.LAB:
        return color.xyz_to_lab(xyz)
    if ph == P.HSV:
        return color.rgb_to_hsv(_srgb(rng, lead) / 255.0)
    if ph == P.Chromaticity:
        return color.xyz_to_chromaticity(xyz)
    if ph in (P.Light, P.Reflectance, P.Absorption):
        return rng.uniform(0.0, 1.0, t.erase())
    if ph == P.Scattering:
        return rng.uniform(0.05, 1.0, t.erase())
    if ph == P.Pigment:
        return np.concatenate(
            [rng.uniform(0.05, 1.0, lead + (color.N_BANDS,)), rng.uniform(0.0, 1.0, lead + (color.N_BANDS,))],
            axis=-1,
        )
    raise ValueError(ph)


def sample_inputs(types: dict[str, ShapedType], rng: np.random.Generator) -> dict[str, np.ndarray]:
    return {name: sample_value(t, rng) for name, t in types.items()}
