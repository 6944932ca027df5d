"""Derivatives of ``F^2`` through jets, and a central-difference cross-check."""

from dataclasses import dataclass
import math

import numpy as np

from .jet import Jet3
from .norms import eval_f2


def jet_eval(norm, v, order=2) -> Jet3:
    """Jet of ``F^2`` at ``v`` with derivatives up to ``order`` (1, 2 or 3).

    Slots above ``order`` are returned as zeros.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    v = np.asarray(v, dtype=float)
    n = norm.dim
    if v.shape != (n,):
        raise ValueError(f"expected a vector of length {n}, got shape {v.shape}")
    args = [Jet3.variable(float(x), i, n, order) for i, x in enumerate(v)]
    out = norm.fn(args)
    if not isinstance(out, Jet3):
        out = Jet3.constant(float(out), n, order)
    return out.filled()


def fd_step(v):
    """``2^-17`` times the power of two nearest ``max |v_i|``."""
    scale = float(np.max(np.abs(v))) if len(v) else 1.0
    if scale == 0.0 or not math.isfinite(scale):
        scale = 1.0
    return 2.0 ** (round(math.log2(scale)) - 17)


@dataclass(frozen=True)
class FdOracle:
    """Second-order central differences, one rung of the derivative ladder each.

    The gradient is differenced from raw ``F^2`` values; the Hessian from
    order-1 jet gradients; the third derivatives from order-2 jet Hessians.
    Each order is therefore checked against quantities that never pass
    through that order's propagation rules.
    """

    h: float

    def grad(self, norm, v):
        n = norm.dim
        out = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = self.h
            out[i] = (eval_f2(norm, v + e) - eval_f2(norm, v - e)) / (2 * self.h)
        return out

    def hess(self, norm, v):
        n = norm.dim
        out = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = self.h
            out[:, i] = (jet_eval(norm, v + e, 1).grad - jet_eval(norm, v - e, 1).grad) / (2 * self.h)
        return 0.5 * (out + out.T)

    def third(self, norm, v):
        n = norm.dim
        out = np.empty((n, n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = self.h
            out[:, :, i] = (jet_eval(norm, v + e, 2).hess - jet_eval(norm, v - e, 2).hess) / (2 * self.h)
        return out


@dataclass(frozen=True)
class DiscrepancyReport:
    grad: float
    hess: float
    third: float
    h: float

    def as_tuple(self):
        return (self.grad, self.hess, self.third)


def relative_discrepancy(a, b):
    """``max|a - b| / max(max|a|, max|b|)``; zero when both vanish."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    if denom == 0.0:
        return 0.0
    return float(np.max(np.abs(a - b))) / denom


def fd_check(norm, v, third=True) -> DiscrepancyReport:
    """Max relative discrepancy per order between :func:`jet_eval` and :class:`FdOracle`."""
    v = np.asarray(v, dtype=float)
    oracle = FdOracle(fd_step(v))
    jet = jet_eval(norm, v, 3 if third else 2)
    d1 = relative_discrepancy(jet.grad, oracle.grad(norm, v))
    d2 = relative_discrepancy(jet.hess, oracle.hess(norm, v))
    d3 = relative_discrepancy(jet.third_tensor(), oracle.third(norm, v)) if third else 0.0
    return DiscrepancyReport(d1, d2, d3, oracle.h)
