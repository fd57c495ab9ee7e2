"""Small arithmetic-expression language for user-supplied metric components.

Grammar (standard precedence, ^ binds tightest and is right-associative):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'pi' | 'e' | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are x1..xn with n the declared dimension.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import GeoError

__all__ = [
    "Expr", "Num", "Var", "Neg", "Bin", "Call",
    "ParseError", "EvalError",
    "parse", "evaluate", "partial", "pretty",
]


class ParseError(GeoError):
    def __init__(self, position: int, message: str):
        super().__init__(f"parse error at offset {position}: {message}")
        self.position = position
        self.message = message


class EvalError(GeoError):
    def __init__(self, node, x, message: str):
        super().__init__(f"evaluation error at {node!r} with x = {tuple(x)}: {message}")
        self.node = node
        self.x = tuple(x)
        self.message = message


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Bin, Call]

FUNCTIONS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt, "abs": abs,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR_RE = re.compile(r"x([1-9]\d*)$")


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num' | 'ident' | 'op' | 'eof'
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            # skip leading whitespace manually to report the offending char
            j = i
            while j < len(src) and src[j].isspace():
                j += 1
            if j >= len(src):
                break
            raise ParseError(j, f"unexpected character {src[j]!r}")
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        i = m.end()
    tokens.append(_Token("eof", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, dim: int):
        self.src = src
        self.dim = dim
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(tok.pos, f"expected '{text}'")
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(tok.pos, f"unexpected token {tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            e = Bin(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            e = Bin(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            name = tok.text
            if name in CONSTANTS:
                return Num(CONSTANTS[name])
            m = _VAR_RE.match(name)
            if m:
                index = int(m.group(1))
                if index > self.dim:
                    raise ParseError(tok.pos, "variable index exceeds dimension")
                return Var(index)
            if name in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(name, arg)
            raise ParseError(tok.pos, f"unknown identifier '{name}'")
        if tok.kind == "op" and tok.text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(tok.pos, f"unexpected token {tok.text or '<end>'!r}")


def parse(src: str, dim: int) -> Expr:
    """Parse an expression over variables x1..x<dim>."""
    return _Parser(src, dim).parse()


def _pow(node: Bin, base: float, expo: float, x) -> float:
    if expo == math.floor(expo) and abs(expo) < 1e9:
        k = int(expo)
        if base == 0.0 and k < 0:
            raise EvalError(node, x, "zero base with negative exponent")
        return base ** k
    if base > 0.0:
        return math.exp(expo * math.log(base))
    raise EvalError(node, x, "non-positive base with non-integer exponent")


def evaluate(e: Expr, x: Sequence[float]) -> float:
    """Evaluate an expression at coordinates x (x[0] binds x1)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.index > len(x):
            raise EvalError(e, x, "coordinate vector too short")
        return float(x[e.index - 1])
    if isinstance(e, Neg):
        return -evaluate(e.arg, x)
    if isinstance(e, Bin):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        try:
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                if b == 0.0:
                    raise EvalError(e, x, "division by zero")
                return a / b
            if e.op == "^":
                return _pow(e, a, b, x)
        except OverflowError:
            raise EvalError(e, x, "overflow") from None
        raise EvalError(e, x, f"unknown operator {e.op!r}")
    if isinstance(e, Call):
        v = evaluate(e.arg, x)
        if e.func == "log" and v <= 0.0:
            raise EvalError(e, x, "log of non-positive value")
        if e.func == "sqrt" and v < 0.0:
            raise EvalError(e, x, "sqrt of negative value")
        try:
            return FUNCTIONS[e.func](v)
        except (OverflowError, ValueError):
            raise EvalError(e, x, f"domain fault in {e.func}") from None
    raise EvalError(e, x, "unknown node type")


def partial(e: Expr, x: Sequence[float], i: int, step: float | None = None) -> float:
    """Central-difference partial derivative with respect to x<i> (1-based)."""
    if step is None:
        step = 1e-5 * max(1.0, abs(float(x[i - 1])))
    xp = list(map(float, x))
    xm = list(map(float, x))
    xp[i - 1] += step
    xm[i - 1] -= step
    return (evaluate(e, xp) - evaluate(e, xm)) / (2.0 * step)


def pretty(e: Expr) -> str:
    """Fully parenthesized rendering; reparses to a structurally equal AST."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"(-{pretty(e.arg)})"
    if isinstance(e, Bin):
        return f"({pretty(e.left)}{e.op}{pretty(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    raise TypeError(f"not an Expr: {e!r}")
