"""Abstract syntax and the parser for ``.csl`` programs.

A program is a sequence of line-oriented statements::

    input img : sRGB[64,64]     # declare an input
    half = img * 0.5            # bind a name (single assignment)
    output half                 # mark a name as a program output

Newlines inside brackets or parentheses continue the current statement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    DuplicateBindingError,
    NoOutputError,
    ParseError,
    UnknownTypeError,
    UnresolvedVariableError,
)
from .stdlib import BUILTINS
from .types import PhysicalType, ShapedType, parse_physical

# -- AST -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Expr:
    line: int = field(default=0, kw_only=True, repr=False)
    col: int = field(default=0, kw_only=True, repr=False)


@dataclass(frozen=True, eq=False)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=False)
class Number(Expr):
    value: float


@dataclass(frozen=True, eq=False)
class ArrayLit(Expr):
    """Rectangular nested list of numbers; only meaningful as ``TYPE([...])``."""

    data: tuple


@dataclass(frozen=True, eq=False)
class Construct(Expr):
    """``TYPE(e)`` cast or literal, or ``Pigment(absorption, scattering)``."""

    phys: PhysicalType
    args: tuple[Expr, ...]


@dataclass(frozen=True, eq=False)
class Mix(Expr):
    c1: Expr
    p1: Expr
    c2: Expr
    p2: Expr


@dataclass(frozen=True, eq=False)
class MatMul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=False)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=False)
class Channel(Expr):
    base: Expr
    name: str


@dataclass(frozen=True)
class InputDecl:
    name: str
    type: ShapedType
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Binding:
    name: str
    expr: Expr
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class OutputDecl:
    name: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Program:
    inputs: tuple[InputDecl, ...]
    statements: tuple[Binding, ...]
    outputs: tuple[OutputDecl, ...]


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Construct):
        return e.args
    if isinstance(e, Mix):
        return (e.c1, e.p1, e.c2, e.p2)
    if isinstance(e, (MatMul, BinOp)):
        return (e.left, e.right)
    if isinstance(e, Channel):
        return (e.base,)
    return ()


def format_expr(e: Expr) -> str:
    """Render an expression back to surface syntax."""
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Number):
        return repr(e.value)
    if isinstance(e, ArrayLit):
        return _format_array(e.data)
    if isinstance(e, Construct):
        return f"{e.phys}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Mix):
        return f"mix({', '.join(format_expr(a) for a in children(e))})"
    if isinstance(e, MatMul):
        return f"matmul({format_expr(e.left)}, {format_expr(e.right)})"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Channel):
        return f"{format_expr(e.base)}.{e.name}"
    raise TypeError(e)


def _format_array(a) -> str:
    if isinstance(a, tuple):
        return "[" + ", ".join(_format_array(x) for x in a) + "]"
    return repr(a)


def format_program(p: Program) -> str:
    lines = [f"input {d.name} : {d.type}" for d in p.inputs]
    lines += [f"{b.name} = {format_expr(b.expr)}" for b in p.statements]
    lines += [f"output {o.name}" for o in p.outputs]
    return "\n".join(lines) + "\n"


# -- lexer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],.:=+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, punct, nl, eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, depth = 1, 0, 0
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind, text = m.lastgroup, m.group()
        pos = m.end()
        if kind == "nl":
            if depth == 0:
                tokens.append(Token("nl", text, line, col))
            line, line_start = line + 1, pos
            continue
        if kind in ("ws", "comment"):
            continue
        if text in "([":
            depth += 1
        elif text in ")]":
            depth = max(depth - 1, 0)
        tokens.append(Token(kind, text, line, col))
    col = pos - line_start + 1
    tokens.append(Token("nl", "", line, col))
    tokens.append(Token("eof", "", line, col))
    return tokens


# -- parser ----------------------------------------------------------------

KEYWORDS = frozenset({"input", "output", "cast", "mix", "matmul"})


class _Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, t: Token | None = None) -> ParseError:
        t = t or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "name") and self.tok.text == text

    def describe(self) -> str:
        if self.tok.kind == "nl":
            return "end of line"
        if self.tok.kind == "eof":
            return "end of file"
        return repr(self.tok.text)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.describe()}")
        return self.advance()

    def expect_name(self, what: str) -> Token:
        if self.tok.kind != "name":
            raise self.error(f"expected {what}")
        return self.advance()

    def end_of_statement(self):
        if self.tok.kind != "nl":
            raise self.error(f"unexpected {self.describe()} after statement")
        self.advance()

    # statements

    def program(self) -> Program:
        inputs, stmts, outputs = [], [], []
        while self.tok.kind != "eof":
            if self.tok.kind == "nl":
                self.advance()
                continue
            if self.at("input"):
                inputs.append(self.input_decl())
            elif self.at("output"):
                t = self.advance()
                name = self.expect_name("output name")
                outputs.append(OutputDecl(name.text, t.line, t.col))
                self.end_of_statement()
            else:
                stmts.append(self.binding())
        return Program(tuple(inputs), tuple(stmts), tuple(outputs))

    def var_name(self, what: str) -> Token:
        t = self.expect_name(what)
        if t.text in KEYWORDS or parse_physical(t.text) is not None or t.text in BUILTINS:
            raise self.error(f"{t.text!r} is reserved and cannot name a value", t)
        return t

    def input_decl(self) -> InputDecl:
        start = self.advance()
        name = self.var_name("input name")
        self.expect(":")
        tname = self.expect_name("type name")
        phys = parse_physical(tname.text)
        if phys is None:
            raise UnknownTypeError(f"unknown type {tname.text!r}", tname.line, tname.col)
        self.expect("[")
        dims = [self.dim()]
        while self.at(","):
            self.advance()
            dims.append(self.dim())
        self.expect("]")
        self.end_of_statement()
        return InputDecl(name.text, ShapedType(phys, tuple(dims)), start.line, start.col)

    def dim(self) -> int:
        t = self.tok
        if t.kind != "number" or not t.text.isdigit() or int(t.text) < 1:
            raise self.error("dimension must be a positive integer")
        self.advance()
        return int(t.text)

    def binding(self) -> Binding:
        name = self.var_name("statement")
        self.expect("=")
        e = self.expr()
        self.end_of_statement()
        return Binding(name.text, e, name.line, name.col)

    # expressions

    def expr(self) -> Expr:
        left = self.term()
        while self.at("+") or self.at("-"):
            t = self.advance()
            left = BinOp(t.text, left, self.term(), line=t.line, col=t.col)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at("*") or self.at("/"):
            t = self.advance()
            left = BinOp(t.text, left, self.unary(), line=t.line, col=t.col)
        return left

    def unary(self) -> Expr:
        if self.at("-"):
            t = self.advance()
            inner = self.unary()
            if not isinstance(inner, Number):
                raise self.error("unary minus applies only to numeric literals", t)
            return Number(-inner.value, line=t.line, col=t.col)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while self.at("."):
            self.advance()
            t = self.expect_name("channel name")
            e = Channel(e, t.text, line=t.line, col=t.col)
        return e

    def args(self) -> list[Expr]:
        self.expect("(")
        out = [self.expr()]
        while self.at(","):
            self.advance()
            out.append(self.expr())
        self.expect(")")
        return out

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Number(float(t.text), line=t.line, col=t.col)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("["):
            return self.array()
        if t.kind != "name":
            raise self.error(f"unexpected {self.describe()} in expression")
        self.advance()
        if t.text == "cast":
            tname = self.expect_name("type name after 'cast'")
            phys = parse_physical(tname.text)
            if phys is None:
                raise UnknownTypeError(f"unknown type {tname.text!r}", tname.line, tname.col)
            return self.construct(phys, t)
        phys = parse_physical(t.text)
        if phys is not None:
            return self.construct(phys, t)
        if t.text == "mix":
            a = self.args()
            if len(a) != 4:
                raise self.error(f"mix takes 4 arguments, got {len(a)}", t)
            return Mix(*a, line=t.line, col=t.col)
        if t.text == "matmul":
            a = self.args()
            if len(a) != 2:
                raise self.error(f"matmul takes 2 arguments, got {len(a)}", t)
            return MatMul(*a, line=t.line, col=t.col)
        if self.at("("):
            raise UnknownTypeError(f"unknown type or function {t.text!r}", t.line, t.col)
        if t.text in ("input", "output"):
            raise self.error(f"{t.text!r} is a statement keyword", t)
        return Var(t.text, line=t.line, col=t.col)

    def construct(self, phys: PhysicalType, t: Token) -> Construct:
        a = self.args()
        if len(a) > 2:
            raise self.error(f"{phys} takes one or two arguments, got {len(a)}", t)
        return Construct(phys, tuple(a), line=t.line, col=t.col)

    def array(self) -> ArrayLit:
        start = self.tok
        data = self._array_items()
        if isinstance(data, tuple) and not _rectangular(data):
            raise self.error("array literal is not rectangular", start)
        return ArrayLit(data, line=start.line, col=start.col)

    def _array_items(self):
        if not self.at("["):
            e = self.unary()
            if not isinstance(e, Number):
                raise self.error("array literals may contain only numbers")
            return e.value
        self.advance()
        items = [self._array_items()]
        while self.at(","):
            self.advance()
            items.append(self._array_items())
        self.expect("]")
        return tuple(items)


def _shape_of(a) -> tuple[int, ...] | None:
    if not isinstance(a, tuple):
        return ()
    shapes = {_shape_of(x) for x in a}
    if len(shapes) != 1 or None in shapes:
        return None
    return (len(a),) + shapes.pop()


def _rectangular(a) -> bool:
    return _shape_of(a) is not None


def array_shape(a) -> tuple[int, ...]:
    return _shape_of(a) or ()


def _resolve(p: Program) -> None:
    """Enforce single assignment and that every name is bound before use."""
    bound: dict[str, tuple[int, int]] = {}

    def bind(name, line, col):
        if name in bound:
            pl, pc = bound[name]
            raise DuplicateBindingError(f"{name!r} already bound at {pl}:{pc}", line, col)
        bound[name] = (line, col)

    for d in p.inputs:
        bind(d.name, d.line, d.col)

    def visit(e: Expr):
        if isinstance(e, Var) and e.name not in bound and e.name not in BUILTINS:
            raise UnresolvedVariableError(f"unbound name {e.name!r}", e.line, e.col)
        for c in children(e):
            visit(c)

    for s in p.statements:
        visit(s.expr)
        bind(s.name, s.line, s.col)
    seen = set()
    for o in p.outputs:
        if o.name not in bound:
            raise UnresolvedVariableError(f"output {o.name!r} is never bound", o.line, o.col)
        if o.name in seen:
            raise DuplicateBindingError(f"output {o.name!r} declared twice", o.line, o.col)
        seen.add(o.name)
    if not p.outputs:
        raise NoOutputError("no output declared", 1, 1)


def parse(source: str) -> Program:
    """Parse and resolve names. Raises a SourceError subclass with location."""
    prog = _Parser(source).program()
    _resolve(prog)
    return prog
