"""A small arithmetic language for writing scalar fields on the sphere.

Grammar (whitespace is ignored between tokens)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?          # right associative
    primary := NUMBER | "x" | "y" | "z" | "pi"
             | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := "sin" | "cos" | "exp" | "abs" | "sqrt"

So ``-x^2`` is ``-(x^2)``, ``2^3^2`` is ``2^(3^2)`` and ``2^-1`` is allowed.
Evaluation is vectorized over ``(n, 3)`` point arrays.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvaluationError, ExprSyntaxError, UnknownIdentifier
from .labelling import ScalarField

VARIABLES = ("x", "y", "z")
CONSTANTS = {"pi": np.pi}
FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs, "sqrt": np.sqrt}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


def Pow(a, b):
    return BinOp("^", a, b)


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text):
    byte_offset = [0]
    for ch in text:
        byte_offset.append(byte_offset[-1] + len(ch.encode("utf-8")))
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", byte_offset[pos])
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), byte_offset[pos]))
        pos = m.end()
    toks.append(_Tok("end", "", byte_offset[len(text)]))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.tok.offset)
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "ident":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            if self.tok.text == "(":
                raise UnknownIdentifier(f"unknown function {t.text!r}", t.offset)
            if t.text in VARIABLES:
                return Var(t.text)
            if t.text in CONSTANTS:
                return Const(t.text)
            raise UnknownIdentifier(f"unknown identifier {t.text!r}", t.offset)
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = t.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", t.offset)


def parse(text: str) -> Node:
    return _Parser(text).parse()


def to_text(node: Node) -> str:
    """Canonical, fully parenthesized rendering; ``parse`` inverts it."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _eval(node, p):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return p[..., VARIABLES.index(node.name)]
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, p)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, p))
    a = _eval(node.left, p)
    b = _eval(node.right, p)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(np.asarray(b) == 0):
            raise ZeroDivisionError("division by zero")
        return np.divide(a, b)
    return np.power(a, b)


def evaluate(expr: Node, p) -> float | np.ndarray:
    """Value at a point ``(3,)`` or at each row of an ``(n, 3)`` array."""
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise EvaluationError("point has non-finite coordinates")
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise", under="ignore"):
            out = _eval(expr, p)
    except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        raise EvaluationError(f"cannot evaluate {to_text(expr)}: {exc}") from exc
    out = np.broadcast_to(np.asarray(out, dtype=np.float64), p.shape[:-1])
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"{to_text(expr)} is not finite at some point")
    return float(out) if out.ndim == 0 else out.copy()


def field_from_text(text: str) -> ScalarField:
    expr = parse(text)
    return ScalarField(lambda p: evaluate(expr, p), vectorized=True, name=text)
