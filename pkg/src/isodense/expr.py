"""Scalar expression language for log-densities.

Expressions are in a single variable (``x`` or ``r``) with optional named
parameters that are bound at evaluation time::

    >>> ast = parse("exp(c*r^2)", params=("c",))
    >>> evaluate(ast, {"c": 1.0}, 0.0)
    1.0

Grammar (highest precedence first): ``^`` (right associative), unary ``-``,
``* /``, ``+ -``.  Functions: exp, log, sqrt, abs, sin, cos, and ``sgn``
(the derivative of ``abs``, with ``sgn(0) = +1``).  ``pi`` and ``e`` are
constants unless declared as parameters.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Const",
    "Var",
    "Param",
    "Unary",
    "Binary",
    "ExprAst",
    "ExprSyntaxError",
    "ExprDomainError",
    "parse",
    "render",
    "evaluate",
    "compile_expr",
    "differentiate",
    "variables",
    "abs_arguments",
]

VARIABLES = ("x", "r")
FUNCTIONS = ("exp", "log", "sqrt", "abs", "sin", "cos", "sgn")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``position`` is a 0-based character index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ExprDomainError(ArithmeticError):
    """Evaluation left the real domain (log of non-positive, sqrt of negative, ...)."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "ExprAst"
    right: "ExprAst"


ExprAst = Union[Const, Var, Param, Unary, Binary]


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, params: Sequence[str]):
        if not text.isascii():
            raise ExprSyntaxError("non-ASCII input", next(i for i, ch in enumerate(text) if ord(ch) > 127))
        self.tokens = _tokenize(text)
        self.i = 0
        self.params = set(params)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)

    def parse(self) -> ExprAst:
        node = self.additive()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def additive(self) -> ExprAst:
        node = self.multiplicative()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> ExprAst:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> ExprAst:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> ExprAst:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if val not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", pos)
                self.take()
                arg = self.additive()
                self.expect(")")
                return Unary(val, arg)
            if val in VARIABLES:
                return Var(val)
            if val in self.params:
                return Param(val)
            if val in CONSTANTS:
                return Const(CONSTANTS[val])
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.additive()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def parse(text: str, params: Sequence[str] = ()) -> ExprAst:
    """Parse ``text`` into an AST.

    ``params`` declares the parameter names that may appear; any other
    identifier besides ``x``, ``r``, ``pi`` and ``e`` is an error.
    """
    return _Parser(text, params).parse()


# ---------------------------------------------------------------------------
# rendering

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_const(v: float) -> str:
    if v == math.pi:
        return "pi"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def render(ast: ExprAst) -> str:
    """Render an AST back to parseable text with minimal parentheses."""
    return _render(ast)[0]


def _render(node: ExprAst) -> tuple[str, int]:
    if isinstance(node, Const):
        text = _fmt_const(node.value)
        # negative literals behave like a unary minus
        return text, (_PREC["neg"] if node.value < 0 else 5)
    if isinstance(node, (Var, Param)):
        return node.name, 5
    if isinstance(node, Unary):
        if node.op == "neg":
            inner, p = _render(node.arg)
            if p < _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}", _PREC["neg"]
        return f"{node.op}({_render(node.arg)[0]})", 5
    prec = _PREC[node.op]
    left, lp = _render(node.left)
    right, rp = _render(node.right)
    if node.op == "^":
        if lp <= prec:
            left = f"({left})"
        if rp < _PREC["neg"]:
            right = f"({right})"
    else:
        if lp < prec:
            left = f"({left})"
        # right operand of - and / needs parens at equal precedence
        if rp < prec or (rp == prec and node.op in ("-", "/")):
            right = f"({right})"
    return f"{left}{node.op}{right}" if node.op in "*/^" else f"{left} {node.op} {right}", prec


# ---------------------------------------------------------------------------
# evaluation

def _check(bad, message: str):
    if np.any(bad):
        raise ExprDomainError(message)


def _sgn(u):
    return np.where(u >= 0, 1.0, -1.0)


def _pow(a, b):
    _check((a == 0) & (b < 0), "0 raised to a negative power")
    nonint = np.asarray(b) != np.floor(b)
    _check((a < 0) & nonint, "negative base with non-integer exponent")
    return np.power(a, b)


def _div(a, b):
    _check(b == 0, "division by zero")
    return a / b


def _log(u):
    _check(u <= 0, "log of non-positive value")
    return np.log(u)


def _sqrt(u):
    _check(u < 0, "sqrt of negative value")
    return np.sqrt(u)


_UNARY: dict[str, Callable] = {
    "neg": np.negative,
    "exp": np.exp,
    "log": _log,
    "sqrt": _sqrt,
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
    "sgn": _sgn,
}
_BINARY: dict[str, Callable] = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": _div,
    "^": _pow,
}


def compile_expr(ast: ExprAst, bindings: Mapping[str, float] | None = None) -> Callable:
    """Return a vectorised callable ``g(t)`` evaluating ``ast`` with bound parameters.

    Works for Python floats and numpy arrays.  Overflow yields ``inf`` rather
    than an exception; genuine domain violations raise :class:`ExprDomainError`.
    """
    bindings = dict(bindings or {})

    def build(node: ExprAst) -> Callable:
        if isinstance(node, Const):
            v = float(node.value)
            return lambda t: v
        if isinstance(node, Var):
            return lambda t: t
        if isinstance(node, Param):
            if node.name not in bindings:
                raise KeyError(f"parameter {node.name!r} is not bound")
            v = float(bindings[node.name])
            return lambda t: v
        if isinstance(node, Unary):
            fn, inner = _UNARY[node.op], build(node.arg)
            return lambda t: fn(inner(t))
        fn, lhs, rhs = _BINARY[node.op], build(node.left), build(node.right)
        return lambda t: fn(lhs(t), rhs(t))

    body = build(ast)

    def g(t):
        scalar = np.ndim(t) == 0
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            out = body(np.asarray(t, dtype=float) if not scalar else float(t))
        if scalar:
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(t)).copy()

    return g


def evaluate(ast: ExprAst, bindings: Mapping[str, float] | None, point) -> float:
    """Evaluate ``ast`` at ``point`` (a float or an array of floats)."""
    return compile_expr(ast, bindings)(point)


# ---------------------------------------------------------------------------
# differentiation

def _is_const(node: ExprAst, value: float | None = None) -> bool:
    return isinstance(node, Const) and (value is None or node.value == value)


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def _neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(b):
        a, b = b, a
    return Binary("*", a, b)


def _div_node(a, b):
    if _is_const(a, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    return Binary("/", a, b)


def _pow_node(a, b):
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return Const(1.0)
    return Binary("^", a, b)


def _depends(node: ExprAst, var: str) -> bool:
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, Unary):
        return _depends(node.arg, var)
    if isinstance(node, Binary):
        return _depends(node.left, var) or _depends(node.right, var)
    return False


def differentiate(ast: ExprAst, var: str = "x") -> ExprAst:
    """Symbolic derivative of ``ast`` with respect to ``var``.

    ``abs`` differentiates to ``sgn``, which takes the right-derivative
    convention at the kink.  Only light constant folding is applied.
    """
    if not _depends(ast, var):
        return Const(0.0)
    if isinstance(ast, Var):
        return Const(1.0)
    if isinstance(ast, Unary):
        u, du = ast.arg, differentiate(ast.arg, var)
        op = ast.op
        if op == "neg":
            return _neg(du)
        if op == "exp":
            return _mul(ast, du)
        if op == "log":
            return _div_node(du, u)
        if op == "sqrt":
            return _div_node(du, _mul(Const(2.0), ast))
        if op == "abs":
            return _mul(Unary("sgn", u), du)
        if op == "sin":
            return _mul(Unary("cos", u), du)
        if op == "cos":
            return _neg(_mul(Unary("sin", u), du))
        if op == "sgn":
            return Const(0.0)
        raise ValueError(f"unknown operator {op!r}")
    a, b = ast.left, ast.right
    da, db = differentiate(a, var), differentiate(b, var)
    if ast.op == "+":
        return _add(da, db)
    if ast.op == "-":
        return _sub(da, db)
    if ast.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if ast.op == "/":
        return _div_node(_sub(_mul(da, b), _mul(a, db)), _pow_node(b, Const(2.0)))
    # power
    if not _depends(b, var):
        exponent = _sub(b, Const(1.0))
        return _mul(_mul(b, _pow_node(a, exponent)), da)
    # general u^v = exp(v log u)
    return _mul(ast, _add(_mul(db, Unary("log", a)), _div_node(_mul(b, da), a)))


# ---------------------------------------------------------------------------
# inspection helpers

def variables(ast: ExprAst) -> set[str]:
    """Names of the variables (``x``/``r``) that occur in ``ast``."""
    if isinstance(ast, Var):
        return {ast.name}
    if isinstance(ast, Unary):
        return variables(ast.arg)
    if isinstance(ast, Binary):
        return variables(ast.left) | variables(ast.right)
    return set()


def abs_arguments(ast: ExprAst) -> list[ExprAst]:
    """Arguments of every ``abs``/``sgn`` node; their zeros are the kinks."""
    out: list[ExprAst] = []
    if isinstance(ast, Unary):
        if ast.op in ("abs", "sgn"):
            out.append(ast.arg)
        out.extend(abs_arguments(ast.arg))
    elif isinstance(ast, Binary):
        out.extend(abs_arguments(ast.left))
        out.extend(abs_arguments(ast.right))
    return out
