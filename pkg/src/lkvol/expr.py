"""A small expression language for metric components.

Expressions are built from decimal literals, coordinate variables
``x0 .. x{n-1}``, the constant ``pi``, binary ``+ - * / ^``, unary minus and
the functions ``sin cos tan exp log sqrt``.  ``^`` binds tightest and is
right-associative, then unary minus, then ``* /``, then ``+ -``.

``parse_expr`` and ``to_source`` are inverse to each other on every tree the
parser can produce (literals are non-negative; negative constants are spelled
with unary minus).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR_RE = re.compile(r"^x(\d+)$")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            # Skip trailing whitespace before declaring an error.
            if text[pos:].strip() == "":
                break
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", offset)
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        kind, value, offset = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected {value!r}", offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.pos += 1
                left = BinOp(value, left, self.term())
            else:
                return left

    def term(self) -> Expr:
        left = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.pos += 1
                left = BinOp(value, left, self.unary())
            else:
                return left

    def unary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.pos += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.pos += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, value, offset = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            if value == "pi":
                return Pi()
            m = _VAR_RE.match(value)
            if m:
                index = int(m.group(1))
                if index >= self.dim:
                    raise ParseError(
                        f"variable index out of range: {value} in dimension {self.dim}",
                        offset,
                    )
                return Var(index)
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            raise ParseError(f"unknown identifier {value!r}", offset)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"unexpected {value!r}", offset)


def parse_expr(text: str, dim: int) -> Expr:
    """Parse ``text`` into an expression tree over variables x0..x{dim-1}."""
    if not text or text.strip() == "":
        raise ParseError("empty expression", 0)
    return _Parser(text, dim).parse()


_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5
_BINOP_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}


def _render(e: Expr, ctx: int) -> str:
    if isinstance(e, Num):
        s = repr(e.value)
        return s if e.value >= 0 else f"({s})"
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Call):
        return f"{e.func}({_render(e.arg, _PREC_ADD)})"
    if isinstance(e, Neg):
        s = "-" + _render(e.arg, _PREC_UNARY)
        return s if _PREC_UNARY >= ctx else f"({s})"
    if isinstance(e, BinOp):
        prec = _BINOP_PREC[e.op]
        if e.op == "^":
            # Right-associative; the base must be an atom to survive reparsing.
            s = _render(e.left, _PREC_ATOM) + "^" + _render(e.right, _PREC_UNARY)
        else:
            s = _render(e.left, prec) + e.op + _render(e.right, prec + 1)
        return s if prec >= ctx else f"({s})"
    raise TypeError(f"not an expression node: {e!r}")


def to_source(e: Expr) -> str:
    """Render an expression tree back to source text."""
    return _render(e, _PREC_ADD)


def max_var(e: Expr) -> int:
    """Largest variable index used, or -1 for constant expressions."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Neg):
        return max_var(e.arg)
    if isinstance(e, Call):
        return max_var(e.arg)
    if isinstance(e, BinOp):
        return max(max_var(e.left), max_var(e.right))
    return -1


def substitute(e: Expr, fixed: dict[int, float], remap: dict[int, int]) -> Expr:
    """Freeze some variables to constants and renumber the remaining ones.

    Every variable index must appear in exactly one of ``fixed`` or ``remap``.
    """
    if isinstance(e, Var):
        if e.index in fixed:
            v = fixed[e.index]
            return Num(v) if v >= 0 else Neg(Num(-v))
        return Var(remap[e.index])
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, fixed, remap))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, fixed, remap))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, fixed, remap), substitute(e.right, fixed, remap))
    return e
