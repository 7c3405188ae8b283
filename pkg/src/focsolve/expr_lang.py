"""A tiny arithmetic language for writing f, g and H as text.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := number | ident | ident "(" expr ")" | "(" expr ")"

Identifiers are the variables ``t x u a d1..d9``, the constant ``pi`` and the
unary functions ``sin cos exp ln sqrt abs besselj0 gamma``. Evaluation works
on floats and on numpy arrays alike.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .special import bessel_j0_array, gamma

__all__ = [
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "Expr",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse",
    "evaluate",
    "to_source",
    "variables",
    "VARIABLES",
    "FUNCTIONS",
]

VARIABLES = frozenset({"t", "x", "u", "a"} | {f"d{i}" for i in range(1, 10)})
CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    """Parse failure carrying the byte offset and the tokens that would fit."""

    def __init__(self, message: str, offset: int, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        hint = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{hint}")


class ExprEvalError(ArithmeticError):
    pass


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
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


def _checked_ln(v):
    if np.any(np.asarray(v) <= 0):
        raise ExprEvalError("ln of a non-positive value")
    return np.log(v)


def _checked_sqrt(v):
    if np.any(np.asarray(v) < 0):
        raise ExprEvalError("sqrt of a negative value")
    return np.sqrt(v)


def _checked_gamma(v):
    arr = np.asarray(v, dtype=float)
    if np.any(arr <= 0):
        raise ExprEvalError("gamma of a non-positive value")
    if arr.ndim == 0:
        return gamma(float(arr))
    return np.vectorize(gamma, otypes=[float])(arr)


def _checked_j0(v):
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0):
        raise ExprEvalError("besselj0 of a negative value")
    return bessel_j0_array(arr)


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": _checked_ln,
    "sqrt": _checked_sqrt,
    "abs": np.abs,
    "besselj0": _checked_j0,
    "gamma": _checked_gamma,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}", pos, {repr(value)})
        return self.take()

    def parse(self):
        node = self.expr()
        kind, _, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError("unexpected trailing input", pos, {"'+'", "'-'", "'*'", "'/'", "'^'", "end"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            is_call = self.peek()[0] == "op" and self.peek()[1] == "("
            if text in FUNCTIONS:
                if not is_call:
                    raise ExprSyntaxError(f"function {text!r} needs one argument in parentheses", self.peek()[2], {"'('"})
                self.take()
                arg = self.expr()
                kind2, text2, pos2 = self.peek()
                if kind2 == "op" and text2 == ")":
                    self.take()
                    return Call(text, arg)
                if kind2 == "op" and text2 == ",":
                    raise ExprSyntaxError(f"arity mismatch: {text!r} takes exactly one argument", pos2, {"')'"})
                raise ExprSyntaxError("expected ')'", pos2, {"')'"})
            if text in VARIABLES or text in CONSTANTS:
                if is_call:
                    raise ExprSyntaxError(f"{text!r} is not a function", self.peek()[2])
                return Const(text) if text in CONSTANTS else Var(text)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", pos, {"number", "identifier", "'('", "'-'"})


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises
    ------
    ExprSyntaxError
        With ``offset`` pointing at the offending character.
    """
    return _Parser(source).parse()


def variables(expr: Expr) -> set[str]:
    """Names of the variables referenced by ``expr``."""
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Neg):
        return variables(expr.operand)
    if isinstance(expr, BinOp):
        return variables(expr.left) | variables(expr.right)
    if isinstance(expr, Call):
        return variables(expr.arg)
    return set()


def _power(base, exponent):
    b = np.asarray(base, dtype=float)
    e = np.asarray(exponent, dtype=float)
    bad = (b < 0) & (e != np.round(e))
    if np.any(bad):
        raise ExprEvalError("fractional power of a negative base")
    with np.errstate(divide="raise", invalid="raise"):
        try:
            out = np.power(b, e)
        except FloatingPointError as exc:
            raise ExprEvalError(f"invalid power: {exc}") from None
    return out if out.ndim else float(out)


def evaluate(expr: Expr, bindings: dict):
    """Evaluate ``expr`` with variables taken from ``bindings``.

    Values may be floats or numpy arrays; arrays broadcast.
    """
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return bindings[expr.name]
        except KeyError:
            raise ExprEvalError(f"unbound variable {expr.name!r}") from None
    if isinstance(expr, Const):
        return CONSTANTS[expr.name]
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, bindings)
    if isinstance(expr, Call):
        return FUNCTIONS[expr.func](evaluate(expr.arg, bindings))
    left = evaluate(expr.left, bindings)
    right = evaluate(expr.right, bindings)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if expr.op == "/":
        if np.any(np.asarray(right) == 0):
            raise ExprEvalError("division by zero")
        return left / right
    return _power(left, right)


def to_source(expr: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, (Var, Const)):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
