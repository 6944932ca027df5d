"""Forward-mode truncated Taylor arithmetic of order 3.

A :class:`Jet3` holds the value, gradient, Hessian and third derivatives of
a scalar function of ``n`` variables at one point.  The third-order tensor
is stored only on the upper simplex ``i <= j <= k`` so full symmetry holds
by construction; :meth:`Jet3.third_tensor` expands it.

Every elementary operation is the exact order-3 truncation of the Taylor
series, so polynomial inputs of total degree <= 3 come out with analytic
derivatives.  Unary functions go through one composition rule
(:func:`_compose`) fed with the first three derivatives of the function.
"""

from fractions import Fraction
from functools import lru_cache
from itertools import permutations
import math
from numbers import Real

import numpy as np

from .errors import DomainError, NonSmoothError


@lru_cache(maxsize=None)
def simplex_index(n):
    """Index arrays ``(I, J, K)`` of all triples ``i <= j <= k < n``."""
    trip = [(i, j, k) for i in range(n) for j in range(i, n) for k in range(j, n)]
    arr = np.array(trip, dtype=np.intp).reshape(-1, 3)
    out = (arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy())
    for a in out:
        a.flags.writeable = False
    return out


def expand_third(packed, n):
    """Full symmetric ``n x n x n`` array from upper-simplex storage."""
    full = np.zeros((n, n, n))
    idx = simplex_index(n)
    for p in permutations(range(3)):
        full[idx[p[0]], idx[p[1]], idx[p[2]]] = packed
    return full


def pack_third(full):
    I, J, K = simplex_index(full.shape[0])
    return full[I, J, K]


@lru_cache(maxsize=None)
def _flat_index(n):
    # positions of (i, jk), (j, ik), (k, ij) in a raveled n x n^2 array
    I, J, K = simplex_index(n)
    nn = n * n
    out = (I * nn + J * n + K, J * nn + I * n + K, K * nn + I * n + J)
    for a in out:
        a.flags.writeable = False
    return out


def _sym_outer(g, H, n):
    # g_i H_jk + g_j H_ik + g_k H_ij on the simplex
    P = np.multiply.outer(g, H).ravel()
    a, b, c = _flat_index(n)
    return P.take(a) + P.take(b) + P.take(c)


def _sym_outer2(g1, H1, g2, H2, n):
    """``_sym_outer(g1, H1) + _sym_outer(g2, H2)`` with a single gather."""
    P = (np.multiply.outer(g1, H1) + np.multiply.outer(g2, H2)).ravel()
    a, b, c = _flat_index(n)
    return P.take(a) + P.take(b) + P.take(c)


def _cube(g, n):
    I, J, K = simplex_index(n)
    return g[I] * g[J] * g[K]


class Jet3:
    """Order-``order`` jet of a scalar in ``n`` variables.

    Slots above ``order`` are kept as ``None`` during arithmetic; use
    :meth:`filled` to get zero arrays in their place.
    """

    __slots__ = ("value", "grad", "hess", "third", "order")

    def __init__(self, value, grad, hess=None, third=None, order=2):
        self.value = float(value)
        self.grad = grad
        self.hess = hess if order >= 2 else None
        self.third = third if order >= 3 else None
        self.order = order

    @property
    def n(self):
        return self.grad.shape[0]

    @classmethod
    def variable(cls, value, index, n, order=2):
        grad = np.zeros(n)
        grad[index] = 1.0
        hess = np.zeros((n, n)) if order >= 2 else None
        third = np.zeros(len(simplex_index(n)[0])) if order >= 3 else None
        return cls(value, grad, hess, third, order)

    @classmethod
    def constant(cls, value, n, order=2):
        hess = np.zeros((n, n)) if order >= 2 else None
        third = np.zeros(len(simplex_index(n)[0])) if order >= 3 else None
        return cls(value, np.zeros(n), hess, third, order)

    def filled(self):
        n = self.n
        hess = self.hess if self.hess is not None else np.zeros((n, n))
        third = self.third if self.third is not None else np.zeros(len(simplex_index(n)[0]))
        return Jet3(self.value, self.grad, hess, third, order=3)

    def third_tensor(self):
        if self.third is None:
            return np.zeros((self.n,) * 3)
        return expand_third(self.third, self.n)

    def __repr__(self):
        return f"Jet3(value={self.value!r}, grad={self.grad!r}, order={self.order})"

    # -- arithmetic ---------------------------------------------------------

    def _lift(self, other):
        if isinstance(other, Jet3):
            return other
        if isinstance(other, (Real, Fraction)):
            return None
        return NotImplemented

    def __neg__(self):
        return Jet3(
            -self.value,
            -self.grad,
            None if self.hess is None else -self.hess,
            None if self.third is None else -self.third,
            self.order,
        )

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if o is None:
            return Jet3(self.value + float(other), self.grad, self.hess, self.third, self.order)
        order = min(self.order, o.order)
        return Jet3(
            self.value + o.value,
            self.grad + o.grad,
            self.hess + o.hess if order >= 2 else None,
            self.third + o.third if order >= 3 else None,
            order,
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if o is None:
            return Jet3(self.value - float(other), self.grad, self.hess, self.third, self.order)
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def _scale(self, c):
        return Jet3(
            self.value * c,
            self.grad * c,
            None if self.hess is None else self.hess * c,
            None if self.third is None else self.third * c,
            self.order,
        )

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if o is None:
            return self._scale(float(other))
        if o is self:
            return self._square()
        order = min(self.order, o.order)
        n = self.n
        a0, b0 = self.value, o.value
        a1, b1 = self.grad, o.grad
        grad = a0 * b1 + b0 * a1
        hess = third = None
        if order >= 2:
            cross = np.multiply.outer(a1, b1)
            hess = a0 * o.hess + b0 * self.hess + (cross + cross.T)
        if order >= 3:
            third = (
                a0 * o.third
                + b0 * self.third
                + _sym_outer2(a1, o.hess, b1, self.hess, n)
            )
        return Jet3(a0 * b0, grad, hess, third, order)

    __rmul__ = __mul__

    def _square(self):
        a0, a1 = self.value, self.grad
        hess = third = None
        if self.order >= 2:
            hess = 2.0 * (a0 * self.hess + np.multiply.outer(a1, a1))
        if self.order >= 3:
            third = 2.0 * (a0 * self.third + _sym_outer(a1, self.hess, self.n))
        return Jet3(a0 * a0, 2.0 * a0 * a1, hess, third, self.order)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if o is None:
            c = float(other)
            if c == 0.0:
                raise DomainError("division by zero")
            return self._scale(1.0 / c)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        return self.powr(exponent)

    # -- unary functions ----------------------------------------------------

    def _compose(self, f0, f1, f2, f3):
        n = self.n
        g = self.grad
        hess = third = None
        if self.order >= 2:
            hess = f1 * self.hess + f2 * np.outer(g, g)
        if self.order >= 3:
            third = f1 * self.third + f2 * _sym_outer(g, self.hess, n) + f3 * _cube(g, n)
        return Jet3(f0, f1 * g, hess, third, self.order)

    def reciprocal(self):
        x = self.value
        if x == 0.0:
            raise DomainError("division by zero")
        r = 1.0 / x
        r2 = r * r
        return self._compose(r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2)

    def sqrt(self):
        x = self.value
        if x < 0.0:
            raise DomainError(f"sqrt of negative value {x!r}")
        if x == 0.0:
            raise NonSmoothError("sqrt is not differentiable at 0")
        s = math.sqrt(x)
        return self._compose(s, 0.5 / s, -0.25 / (x * s), 0.375 / (x * x * s))

    def abs(self):
        x = self.value
        if x == 0.0:
            raise NonSmoothError("abs is not differentiable at 0")
        return self if x > 0.0 else -self

    def powr(self, exponent):
        """``self ** exponent`` for an integer or rational exponent."""
        r = Fraction(exponent)
        x = self.value
        if r.denominator == 1:
            k = r.numerator
            if k < 0 and x == 0.0:
                raise DomainError("zero raised to a negative power")
            fs = []
            for m in range(4):
                c = _falling(k, m)
                fs.append(0.0 if c == 0 else c * x ** (k - m))
            return self._compose(*fs)
        if x <= 0.0:
            raise DomainError(f"non-integer power {r} of non-positive base {x!r}")
        rf = float(r)
        fs = [_falling(rf, m) * x ** (rf - m) for m in range(4)]
        return self._compose(*fs)


def _falling(r, m):
    out = 1
    for i in range(m):
        out *= r - i
    return out
