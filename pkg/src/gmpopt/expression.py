"""A small arithmetic language for user-supplied cost and test functions.

Grammar (highest precedence first)::

    atom    := number | name | name '(' args ')' | '(' expr ')'
    power   := atom ['^' unary]          # right-associative
    unary   := '-' unary | '+' unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*

Variables are ``x1 .. xn`` (1-based coordinates) unless another set of names
is given. Functions: ``abs``, ``min``, ``max`` (two or more arguments),
``sqrt``, ``exp``, ``log``. Evaluation is vectorized over an ``(N, d)`` array.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)
_VAR = re.compile(r"x([1-9]\d*)$")
_FUNCS = {
    "abs": (1, 1, np.abs),
    "sqrt": (1, 1, np.sqrt),
    "exp": (1, 1, np.exp),
    "log": (1, 1, np.log),
    "min": (2, None, lambda *a: np.minimum.reduce(np.broadcast_arrays(*a))),
    "max": (2, None, lambda *a: np.maximum.reduce(np.broadcast_arrays(*a))),
}
_CONSTS = {"pi": math.pi, "e": math.e}


class ExpressionError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            bad = len(src[pos:]) - len(src[pos:].lstrip()) + pos
            raise ExpressionError(f"unexpected character {src[bad]!r}", bad)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src, variables):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            found = tok[1] or "end of input"
            raise ExpressionError(f"expected {value!r}, found {found!r}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return ("neg", self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return ("bin", "^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return ("num", float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                return self.call(text, pos)
            if text in _CONSTS:
                return ("num", _CONSTS[text])
            return self.variable(text, pos)
        if text == "(":
            node = self.expr()
            self.take(")")
            return node
        raise ExpressionError(f"unexpected {text or 'end of input'!r}", pos)

    def call(self, name, pos):
        if name not in _FUNCS:
            raise ExpressionError(f"unknown function {name!r}", pos)
        lo, hi, _ = _FUNCS[name]
        self.take("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ExpressionError(f"wrong number of arguments to {name}", pos)
        return ("call", name, args)

    def variable(self, name, pos):
        if self.variables is None:
            m = _VAR.match(name)
            if not m:
                raise ExpressionError(f"unknown identifier {name!r}", pos)
            return ("var", int(m.group(1)) - 1)
        if name not in self.variables:
            raise ExpressionError(f"unknown identifier {name!r}", pos)
        return ("var", self.variables.index(name))


def _eval(node, cols):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return cols[node[1]]
    if tag == "neg":
        return -_eval(node[1], cols)
    if tag == "call":
        return _FUNCS[node[1]][2](*[_eval(a, cols) for a in node[2]])
    _, op, left, right = node
    a, b = _eval(left, cols), _eval(right, cols)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return np.power(a, b)


def _max_var(node) -> int:
    tag = node[0]
    if tag == "var":
        return node[1]
    if tag == "neg":
        return _max_var(node[1])
    if tag == "call":
        return max((_max_var(a) for a in node[2]), default=-1)
    if tag == "bin":
        return max(_max_var(node[2]), _max_var(node[3]))
    return -1


@dataclass(frozen=True)
class Expression:
    """A parsed expression; call it on an ``(N, d)`` array or a single point."""

    source: str
    tree: tuple
    variables: tuple | None = None

    @property
    def arity(self) -> int:
        """Smallest number of coordinates the expression needs."""
        return _max_var(self.tree) + 1

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if self.arity > pts.shape[1]:
            raise ExpressionError(
                f"expression uses {self.arity} coordinates, points have {pts.shape[1]}"
            )
        cols = [pts[:, i] for i in range(pts.shape[1])]
        with np.errstate(all="ignore"):
            out = np.broadcast_to(np.asarray(_eval(self.tree, cols), dtype=float), (pts.shape[0],))
        if not np.all(np.isfinite(out)):
            raise ExpressionError(f"{self.source!r} is not finite on every point")
        return float(out[0]) if single else np.array(out)


def parse_expression(src: str, variables: Sequence[str] | None = None) -> Expression:
    """Parse ``src``; ``variables`` replaces the default ``x1..xn`` names."""
    # Accept the typographic minus so formulas can be pasted from documents.
    text = src.replace("−", "-")
    names = tuple(variables) if variables is not None else None
    return Expression(src, _Parser(text, names).parse(), names)
