"""A small frozen expression language for boundary data and defining functions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so ``-x1^2``
is ``-(x1^2)`` and ``2^-1`` is ``0.5``.  Variables are ``x1`` ... ``x9``,
constants ``pi`` and ``e``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


class ExprError(ValueError):
    """Syntax or name error; ``offset`` is a byte offset into the UTF-8 text."""

    def __init__(self, msg, offset=None):
        super().__init__(msg if offset is None else f"{msg} at byte {offset}")
        self.offset = offset


class ExprEvalError(ArithmeticError):
    pass


FUNCTIONS = {
    "sin": (np.sin, 1), "cos": (np.cos, 1), "tan": (np.tan, 1), "exp": (np.exp, 1),
    "log": (np.log, 1), "sqrt": (np.sqrt, 1), "abs": (np.abs, 1), "atan": (np.arctan, 1),
    "min": (None, -2), "max": (None, -2),
}
CONSTANTS = {"pi": math.pi, "e": math.e}
_VAR = re.compile(r"x([1-9])$")

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int          # 0-based


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def _tokenize(text):
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ExprError(f"unexpected character {text[i]!r}", len(text[:i].encode()))
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), len(text[:i].encode())))
        i = m.end()
    toks.append(("end", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        t = self.take()
        if t[1] != val:
            raise ExprError(f"expected {val!r}, found {t[1] or 'end of input'!r}", t[2])
        return t

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ExprError(f"unexpected {t[1]!r}", t[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            v = float(val)
            if not math.isfinite(v):
                raise ExprError(f"number {val!r} out of range", off)
            return Num(v)
        if kind == "id":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise ExprError(f"unknown function {val!r}", off)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[val][1]
                if (arity > 0 and len(args) != arity) or (arity < 0 and len(args) < -arity):
                    want = arity if arity > 0 else f"at least {-arity}"
                    raise ExprError(f"{val} takes {want} argument(s), got {len(args)}", off)
                return Call(val, tuple(args))
            m = _VAR.match(val)
            if m:
                return Var(int(m.group(1)) - 1)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                raise ExprError(f"function {val!r} needs arguments", off)
            raise ExprError(f"unknown identifier {val!r}", off)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprError(f"unexpected {val or 'end of input'!r}", off)


class Expr:
    """Parsed expression; call with a coordinate vector (or stacked arrays)."""

    def __init__(self, tree, text=None):
        self.tree = tree
        self.text = text

    def __repr__(self):
        return f"Expr({to_string(self.tree)!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    @property
    def nvars(self):
        return _max_var(self.tree) + 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if self.nvars > len(x):
            raise ExprEvalError(f"expression uses x{self.nvars} but the point has {len(x)} coordinates")
        with np.errstate(all="raise"):
            try:
                v = _eval(self.tree, x)
            except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
                raise ExprEvalError(f"{self}: {exc}") from exc
        if np.ndim(v) == 0:
            return float(v)
        return v

    def __str__(self):
        return to_string(self.tree)


def _max_var(t):
    if isinstance(t, Var):
        return t.index
    if isinstance(t, Neg):
        return _max_var(t.arg)
    if isinstance(t, Bin):
        return max(_max_var(t.left), _max_var(t.right))
    if isinstance(t, Call):
        return max(_max_var(a) for a in t.args)
    return -1


def _eval(t, x):
    if isinstance(t, Num):
        return np.float64(t.value)
    if isinstance(t, Var):
        return np.float64(x[t.index]) if x.ndim == 1 else x[t.index]
    if isinstance(t, Const):
        return np.float64(CONSTANTS[t.name])
    if isinstance(t, Neg):
        return -_eval(t.arg, x)
    if isinstance(t, Bin):
        a, b = _eval(t.left, x), _eval(t.right, x)
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        if t.op == "*":
            return a * b
        if t.op == "/":
            if np.any(b == 0):
                raise ZeroDivisionError("division by zero")
            return a / b
        return np.power(a, b)
    if isinstance(t, Call):
        vals = [_eval(a, x) for a in t.args]
        if t.name == "min":
            out = vals[0]
            for v in vals[1:]:
                out = np.minimum(out, v)
            return out
        if t.name == "max":
            out = vals[0]
            for v in vals[1:]:
                out = np.maximum(out, v)
            return out
        return FUNCTIONS[t.name][0](vals[0])
    raise TypeError(t)


def to_string(t):
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(t, Num):
        return repr(t.value)
    if isinstance(t, Var):
        return f"x{t.index + 1}"
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Neg):
        return f"(-{to_string(t.arg)})"
    if isinstance(t, Bin):
        return f"({to_string(t.left)} {t.op} {to_string(t.right)})"
    if isinstance(t, Call):
        return f"{t.name}(" + ", ".join(to_string(a) for a in t.args) + ")"
    raise TypeError(t)


def parse_expr(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return Expr(_Parser(text).parse(), text)
