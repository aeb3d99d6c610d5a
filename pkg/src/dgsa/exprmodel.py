"""Arithmetic expression models.

Parses expressions over variables ``x1..xd`` into an immutable AST that
evaluates vectorized over numpy arrays, so user-defined models run at builtin
speed. Grammar (loosest to tightest): ``+ -`` < ``* /`` < unary ``-`` < ``^``,
with ``^`` right-associative. Supported functions: abs, exp, log, sin, cos,
sqrt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExpressionDomainError, ExpressionSyntaxError
from .functions import ModelFunction

FUNCTIONS = ("abs", "exp", "log", "sin", "cos", "sqrt")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Unary, Binary, Call]


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | op | end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dimension: int):
        if not text.strip():
            raise ExpressionSyntaxError("empty expression", 0)
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dimension = dimension

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ExpressionSyntaxError(f"expected '{op}'", tok.offset)
        self.advance()

    def parse(self) -> Expr:
        expr = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {tok.text!r}", tok.offset)
        return expr

    def sum(self) -> Expr:
        node = self.product()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.product())
        return node

    def product(self) -> Expr:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Unary("-", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            # right-associative; exponent may carry its own unary minus
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect_op("(")
                arg = self.sum()
                self.expect_op(")")
                return Call(name, arg)
            m = re.fullmatch(r"x([1-9]\d*)", name)
            if m is None:
                raise ExpressionSyntaxError(f"unknown identifier '{name}'", tok.offset)
            index = int(m.group(1))
            if index > self.dimension:
                raise ExpressionSyntaxError(
                    f"variable x{index} exceeds declared dimension {self.dimension}",
                    tok.offset,
                )
            return Var(index)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.sum()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(f"expected a value, got {tok.text or 'end of input'!r}", tok.offset)


def parse(text: str, dimension: int) -> Expr:
    """Parse ``text`` into an AST over variables ``x1..x<dimension>``."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    return _Parser(text, dimension).parse()


def evaluate(expr: Expr, x) -> np.ndarray:
    """Evaluate vectorized over an ``(n, d)`` matrix (or a single d-vector).

    Domain violations raise :class:`ExpressionDomainError` instead of letting
    NaNs propagate.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    result = _eval(expr, x)
    return np.broadcast_to(result, (x.shape[0],)).astype(float)


def _eval(expr: Expr, x: np.ndarray) -> np.ndarray:
    if isinstance(expr, Num):
        return np.full(x.shape[0], expr.value)
    if isinstance(expr, Var):
        return x[:, expr.index - 1]
    if isinstance(expr, Unary):
        return -_eval(expr.operand, x)
    if isinstance(expr, Binary):
        lhs = _eval(expr.lhs, x)
        rhs = _eval(expr.rhs, x)
        if expr.op == "+":
            return lhs + rhs
        if expr.op == "-":
            return lhs - rhs
        if expr.op == "*":
            return lhs * rhs
        if expr.op == "/":
            if np.any(rhs == 0.0):
                raise ExpressionDomainError("division by zero")
            return lhs / rhs
        if expr.op == "^":
            fractional = rhs != np.floor(rhs)
            if np.any((lhs < 0.0) & fractional):
                raise ExpressionDomainError("fractional power of a negative base")
            if np.any((lhs == 0.0) & (rhs < 0.0)):
                raise ExpressionDomainError("zero raised to a negative power")
            return np.power(lhs, rhs)
        raise AssertionError(f"unreachable operator {expr.op}")
    if isinstance(expr, Call):
        arg = _eval(expr.arg, x)
        if expr.func == "abs":
            return np.abs(arg)
        if expr.func == "exp":
            return np.exp(arg)
        if expr.func == "log":
            if np.any(arg <= 0.0):
                raise ExpressionDomainError("log of a nonpositive value")
            return np.log(arg)
        if expr.func == "sin":
            return np.sin(arg)
        if expr.func == "cos":
            return np.cos(arg)
        if expr.func == "sqrt":
            if np.any(arg < 0.0):
                raise ExpressionDomainError("sqrt of a negative value")
            return np.sqrt(arg)
        raise AssertionError(f"unreachable function {expr.func}")
    raise TypeError(f"not an expression node: {expr!r}")


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "u-": 3, "^": 4}


def pretty(expr: Expr) -> str:
    """Render with the minimal parentheses that reparse to the same AST."""
    return _pretty(expr, 0)


def _pretty(expr: Expr, parent_prec: int) -> str:
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return f"x{expr.index}"
    if isinstance(expr, Call):
        return f"{expr.func}({_pretty(expr.arg, 0)})"
    if isinstance(expr, Unary):
        prec = _PRECEDENCE["u-"]
        # operand binds at unary level, so x^2 keeps its parens-free form
        text = f"-{_pretty(expr.operand, prec)}"
        return f"({text})" if parent_prec > prec else text
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        if expr.op == "^":
            # right-associative; exponent re-enters at unary level
            text = f"{_pretty(expr.lhs, prec + 1)}^{_pretty(expr.rhs, _PRECEDENCE['u-'])}"
        else:
            text = f"{_pretty(expr.lhs, prec)} {expr.op} {_pretty(expr.rhs, prec + 1)}"
        return f"({text})" if parent_prec > prec else text
    raise TypeError(f"not an expression node: {expr!r}")


def expression_model(text: str, dimension: int, name: str = "expression") -> ModelFunction:
    """Compile an expression into a :class:`ModelFunction`.

    Expression models carry no analytic gradient; derivative-based measures
    fall back to finite differences.
    """
    ast = parse(text, dimension)

    def batch(points: np.ndarray) -> np.ndarray:
        return evaluate(ast, points)

    return ModelFunction(name=name, dimension=dimension, batch=batch)
