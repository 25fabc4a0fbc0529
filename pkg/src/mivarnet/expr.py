"""Arithmetic rule bodies: parsing, evaluation and printing.

The language is the minimal closure of rule values such as ``180-P2-P3``::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | atom
    atom   := NUMBER | IDENT | '(' expr ')'

Binary operators are left-associative; unary minus binds tighter than any
binary operator. Whitespace is ignored.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

from .errors import DivisionByZero, NonFiniteResult, ParseError, UnboundVariable

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Expr",
    "parse",
    "evaluate",
    "free_vars",
    "to_text",
]


@dataclass(frozen=True, slots=True)
class Num:
    value: float

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be non-empty")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Neg:
    operand: Expr

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in _PRECEDENCE:
            raise ValueError(f"unknown operator {self.op!r}")

    def __str__(self) -> str:
        return to_text(self)


Expr = Union[Num, Var, Neg, BinOp]

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY_PRECEDENCE = 3

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(text, _byte_offset(text, pos), "number, identifier, operator or parenthesis")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, expected: str):
        raise ParseError(self.text, _byte_offset(self.text, self.tok[2]), expected)

    def parse(self) -> Expr:
        node = self.binary(1)
        if self.tok[0] != "end":
            self.fail("operator or end of input")
        return node

    def binary(self, min_prec: int) -> Expr:
        left = self.unary()
        while True:
            kind, text, _ = self.tok
            prec = _PRECEDENCE.get(text) if kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.i += 1
            right = self.binary(prec + 1)
            left = BinOp(text, left, right)

    def unary(self) -> Expr:
        kind, text, _ = self.tok
        if kind == "op" and text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        kind, text, _ = self.tok
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                self.fail("finite numeric literal")
            self.i += 1
            return Num(value)
        if kind == "ident":
            self.i += 1
            return Var(text)
        if kind == "op" and text == "(":
            self.i += 1
            node = self.binary(1)
            if self.tok[1] != ")" or self.tok[0] != "op":
                self.fail("')'")
            self.i += 1
            return node
        self.fail("number, identifier, '-' or '('")


def parse(text: str) -> Expr:
    """Parse expression text into an AST.

    Raises :class:`ParseError` carrying the byte offset of the offending token
    and a description of what was expected there.
    """
    return _Parser(text).parse()


def evaluate(expr: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate ``expr`` in double precision against ``bindings``.

    Division by zero and any non-finite intermediate (overflow) raise instead
    of propagating ``inf``/``nan``.
    """
    if type(expr) is Num:
        return expr.value
    if type(expr) is Var:
        try:
            return float(bindings[expr.name])
        except KeyError:
            raise UnboundVariable(f"unbound variable {expr.name}") from None
    if type(expr) is Neg:
        return -evaluate(expr.operand, bindings)

    a = evaluate(expr.left, bindings)
    b = evaluate(expr.right, bindings)
    op = expr.op
    if op == "+":
        result = a + b
    elif op == "-":
        result = a - b
    elif op == "*":
        result = a * b
    else:
        if b == 0.0:
            raise DivisionByZero(f"division by zero in {to_text(expr)}")
        result = a / b
    if not math.isfinite(result):
        raise NonFiniteResult(f"non-finite result {result} in {to_text(expr)}")
    return result


def free_vars(expr: Expr) -> set[str]:
    out: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if type(node) is Var:
            out.add(node.name)
        elif type(node) is Neg:
            stack.append(node.operand)
        elif type(node) is BinOp:
            stack.append(node.left)
            stack.append(node.right)
    return out


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_text(expr: Expr) -> str:
    """Print ``expr`` with the fewest parentheses that reparse to the same tree."""
    if type(expr) is Num:
        return _format_number(expr.value)
    if type(expr) is Var:
        return expr.name
    if type(expr) is Neg:
        inner = to_text(expr.operand)
        if type(expr.operand) is BinOp:
            inner = f"({inner})"
        return "-" + inner

    prec = _PRECEDENCE[expr.op]
    left = to_text(expr.left)
    if type(expr.left) is BinOp and _PRECEDENCE[expr.left.op] < prec:
        left = f"({left})"
    right = to_text(expr.right)
    # same-precedence right operands keep their grouping: a-(b-c), a+(b+c)
    if type(expr.right) is BinOp and _PRECEDENCE[expr.right.op] <= prec:
        right = f"({right})"
    return f"{left}{expr.op}{right}"
