"""Small expression language for coefficient, source and boundary functions.

Expressions are scalar functions of the coordinates ``x1``, ``x2``, ``x3``::

    >>> e = parse("0.5*atan(20*(x1-1))+1")
    >>> evaluate(e, [1.0])
    1.0

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

so ``^`` binds tighter than unary minus (``-2^2 == -4``) and is
right-associative (``2^3^2 == 512``).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExpressionSyntaxError",
    "ExpressionDomainError",
    "FUNCTIONS",
    "parse",
    "evaluate",
    "evaluate_many",
    "to_source",
    "max_variable_index",
    "const",
    "add",
]


class ExpressionSyntaxError(ValueError):
    """Raised for malformed input; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ExpressionDomainError(ArithmeticError):
    """Raised when an expression is evaluated at a mathematical singularity."""


def _log(v: float) -> float:
    if v <= 0.0:
        raise ExpressionDomainError(f"log of non-positive value {v!r}")
    return math.log(v)


def _sqrt(v: float) -> float:
    if v < 0.0:
        raise ExpressionDomainError(f"sqrt of negative value {v!r}")
    return math.sqrt(v)


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "atan": math.atan,
    "exp": math.exp,
    "log": _log,
    "sqrt": _sqrt,
    "abs": abs,
    "tanh": math.tanh,
}

VARIABLES = {"x1": 0, "x2": 1, "x3": 2}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero-based: x1 -> 0


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expression"


Expression = Union[Const, Var, Neg, BinOp, Call]


def const(value: float) -> Const:
    return Const(float(value))


def add(left: Expression, right: Expression) -> Expression:
    return BinOp("+", left, right)


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    raw = source.encode("utf-8")
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            offset = len(source[:pos].encode("utf-8"))
            raise ExpressionSyntaxError(f"unexpected character {source[pos]!r}", offset)
        kind = m.lastgroup
        if kind != "ws":
            offset = len(source[:pos].encode("utf-8"))
            tokens.append((kind, m.group(), offset))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        kind, value, offset = self.tok
        if value != text or kind != "op":
            found = value if kind != "end" else "end of input"
            raise ExpressionSyntaxError(f"expected {text!r}, found {found!r}", offset)
        self.advance()

    def expr(self) -> Expression:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.factor()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expression:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expression:
        kind, value, offset = self.tok
        if kind == "number":
            self.advance()
            return Const(float(value))
        if kind == "ident":
            self.advance()
            if self.tok[0] == "op" and self.tok[1] == "(":
                if value not in FUNCTIONS:
                    raise ExpressionSyntaxError(f"unknown function {value!r}", offset)
                self.advance()
                arg = self.expr()
                if self.tok[1] == ",":
                    raise ExpressionSyntaxError(f"{value} takes exactly one argument", self.tok[2])
                self.expect(")")
                return Call(value, arg)
            if value in FUNCTIONS:
                raise ExpressionSyntaxError(f"function {value!r} called without an argument", offset)
            if value not in VARIABLES:
                raise ExpressionSyntaxError(f"unknown identifier {value!r}", offset)
            return Var(VARIABLES[value])
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = value if kind != "end" else "end of input"
        raise ExpressionSyntaxError(f"unexpected {found!r}", offset)


def parse(source: str) -> Expression:
    """Parse ``source`` into an expression tree."""
    if "," in source:
        # the grammar has no argument lists; report arity problems clearly
        offset = len(source[: source.index(",")].encode("utf-8"))
        raise ExpressionSyntaxError("functions take exactly one argument", offset)
    p = _Parser(source)
    node = p.expr()
    kind, value, offset = p.tok
    if kind != "end":
        raise ExpressionSyntaxError(f"unexpected trailing {value!r}", offset)
    return node


# --------------------------------------------------------------------------
# evaluation


def _pow(a: float, b: float) -> float:
    try:
        return math.pow(a, b)
    except ValueError:
        raise ExpressionDomainError(f"{a!r}^{b!r} is not real") from None
    except ZeroDivisionError:
        raise ExpressionDomainError(f"{a!r}^{b!r} divides by zero") from None


def evaluate(e: Expression, x: Sequence[float]) -> float:
    """Evaluate ``e`` at the point ``x`` (length >= largest variable index)."""
    try:
        return _eval(e, x)
    except ZeroDivisionError as exc:
        raise ExpressionDomainError(str(exc)) from None
    except OverflowError as exc:
        raise ExpressionDomainError(f"overflow: {exc}") from None


def _eval(e: Expression, x) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.index >= len(x):
            raise IndexError(f"x{e.index + 1} used at a {len(x)}-dimensional point")
        return float(x[e.index])
    if isinstance(e, Neg):
        return -_eval(e.operand, x)
    if isinstance(e, BinOp):
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0.0:
                raise ExpressionDomainError("division by zero")
            return a / b
        return _pow(a, b)
    if isinstance(e, Call):
        try:
            return float(FUNCTIONS[e.name](_eval(e.arg, x)))
        except ValueError as exc:
            raise ExpressionDomainError(f"{e.name}: {exc}") from None
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_many(e: Expression, points) -> "list[float]":
    """Evaluate at each row of ``points``; returns a list of floats."""
    return [evaluate(e, p) for p in points]


def max_variable_index(e: Expression) -> int:
    """One-based index of the highest coordinate used, 0 for constants."""
    if isinstance(e, Const):
        return 0
    if isinstance(e, Var):
        return e.index + 1
    if isinstance(e, Neg):
        return max_variable_index(e.operand)
    if isinstance(e, BinOp):
        return max(max_variable_index(e.left), max_variable_index(e.right))
    return max_variable_index(e.arg)


# --------------------------------------------------------------------------
# printing


def _number(v: float) -> str:
    if math.isinf(v):
        return "1e999" if v > 0 else "(-1e999)"
    if math.isnan(v):
        raise ValueError("NaN constant has no source form")
    text = repr(v)
    if v < 0 or text.startswith("-"):
        return f"(-{text[1:]})"
    return text


def to_source(e: Expression) -> str:
    """Fully parenthesized source text that re-parses to an equal tree."""
    if isinstance(e, Const):
        return _number(e.value)
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)}{e.op}{to_source(e.right)})"
    return f"{e.name}({to_source(e.arg)})"
