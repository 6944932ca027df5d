"""Expression tree for user-supplied squared norms.

Nodes are frozen dataclasses, so two trees compare equal exactly when they
are structurally identical.  :func:`evaluate` works over plain numbers and
over :class:`~finsler.jet.Jet3` arguments alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math
from typing import Union

from .errors import DomainError
from .jet import Jet3

MAX_DEPTH = 64


@dataclass(frozen=True)
class Const:
    value: Union[Fraction, float]


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: Fraction


@dataclass(frozen=True)
class Sqrt:
    arg: "Expr"


@dataclass(frozen=True)
class Abs:
    arg: "Expr"


Expr = Union[Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sqrt, Abs]

_BINARY = (Add, Sub, Mul, Div)


def children(node):
    if isinstance(node, _BINARY):
        return (node.left, node.right)
    if isinstance(node, (Neg, Sqrt, Abs)):
        return (node.arg,)
    if isinstance(node, Pow):
        return (node.base,)
    return ()


def depth(node):
    kids = children(node)
    return 1 + (max(depth(k) for k in kids) if kids else 0)


def max_var(node):
    if isinstance(node, Var):
        return node.index
    return max((max_var(k) for k in children(node)), default=0)


# -- pretty printing ---------------------------------------------------------

_LEVEL = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_const(value):
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator) if value >= 0 else f"({value.numerator})"
        return f"({value.numerator}/{value.denominator})"
    text = repr(float(value))
    if "inf" in text or "nan" in text:
        raise ValueError(f"cannot print non-finite constant {value!r}")
    return text


def _fmt_rational(r):
    r = Fraction(r)
    if r.denominator == 1:
        return str(r.numerator) if r >= 0 else f"({r.numerator})"
    return f"({r.numerator}/{r.denominator})"


def to_text(node, _min=0):
    """Render ``node`` in the metric grammar with the fewest parentheses."""
    level = _LEVEL.get(type(node), 5)
    if isinstance(node, Const):
        s = _fmt_const(node.value)
    elif isinstance(node, Var):
        s = f"v{node.index}"
    elif isinstance(node, Add):
        s = f"{to_text(node.left, 1)} + {to_text(node.right, 2)}"
    elif isinstance(node, Sub):
        s = f"{to_text(node.left, 1)} - {to_text(node.right, 2)}"
    elif isinstance(node, Mul):
        s = f"{to_text(node.left, 2)}*{to_text(node.right, 3)}"
    elif isinstance(node, Div):
        s = f"{to_text(node.left, 2)}/{to_text(node.right, 3)}"
    elif isinstance(node, Neg):
        s = f"-{to_text(node.arg, 3)}"
    elif isinstance(node, Pow):
        s = f"{to_text(node.base, 5)}^{_fmt_rational(node.exponent)}"
    elif isinstance(node, Sqrt):
        s = f"sqrt({to_text(node.arg)})"
    elif isinstance(node, Abs):
        s = f"abs({to_text(node.arg)})"
    else:
        raise TypeError(f"not an expression node: {node!r}")
    return f"({s})" if level < _min else s


# -- evaluation --------------------------------------------------------------

def _sqrt(x):
    if isinstance(x, Jet3):
        return x.sqrt()
    if x < 0:
        raise DomainError(f"sqrt of negative value {float(x)!r}")
    return math.sqrt(x)


def _abs(x):
    if isinstance(x, Jet3):
        return x.abs()
    return abs(x)


def _pow(x, r):
    if isinstance(x, Jet3):
        return x.powr(r)
    if r.denominator == 1:
        if x == 0 and r < 0:
            raise DomainError("zero raised to a negative power")
        if isinstance(x, Fraction):
            return x ** r.numerator
        return float(x) ** r.numerator
    if x <= 0:
        raise DomainError(f"non-integer power {r} of non-positive base {float(x)!r}")
    return float(x) ** float(r)


def _div(a, b):
    if not isinstance(b, Jet3) and b == 0:
        raise DomainError("division by zero")
    try:
        return a / b
    except ZeroDivisionError as exc:
        raise DomainError("division by zero") from exc


def evaluate(node, args):
    """Evaluate ``node`` with ``args[i-1]`` bound to variable ``v<i>``.

    Integer and ``p/q`` constants stay exact :class:`~fractions.Fraction`
    values until they meet a float or jet operand.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return args[node.index - 1]
    if isinstance(node, Add):
        return evaluate(node.left, args) + evaluate(node.right, args)
    if isinstance(node, Sub):
        return evaluate(node.left, args) - evaluate(node.right, args)
    if isinstance(node, Mul):
        return evaluate(node.left, args) * evaluate(node.right, args)
    if isinstance(node, Div):
        return _div(evaluate(node.left, args), evaluate(node.right, args))
    if isinstance(node, Neg):
        return -evaluate(node.arg, args)
    if isinstance(node, Pow):
        return _pow(evaluate(node.base, args), node.exponent)
    if isinstance(node, Sqrt):
        return _sqrt(evaluate(node.arg, args))
    if isinstance(node, Abs):
        return _abs(evaluate(node.arg, args))
    raise TypeError(f"not an expression node: {node!r}")
