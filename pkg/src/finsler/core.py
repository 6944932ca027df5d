"""Metric tensor, scalar product, vector classes, Cartan tensor, Euler checks.

The metric at direction ``v`` is ``g_ij(v) = 1/2 d^2 F^2 / dv^i dv^j`` and
the scalar product of ``a`` and ``b`` at ``v`` is ``g_ij(v) a^i b^j``.  By
Euler's theorem ``g_ij(v) v^i = 1/2 dF^2/dv^j``, so products whose first
slot is the direction itself (``<v, b>_v``) only need the gradient; see
:func:`lowered`.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import rng as _rng
from .autodiff import jet_eval
from .errors import IsotropicDirection, IsotropicVector, NotProductForm, SingularMetric
from .norms import eval_f2

CLASS_TOL = 1e-9
SINGULAR_TOL = 1e-10
_TINY = np.finfo(float).tiny


@dataclass(frozen=True, eq=False)
class MetricAt:
    at: np.ndarray
    g: np.ndarray
    det_g: float


@dataclass(frozen=True, eq=False)
class CartanAt:
    at: np.ndarray
    c: np.ndarray  # C_ijk = 1/2 dg_ij/dv^k


class Kind(str, Enum):
    ISOTROPIC = "Isotropic"
    TIMELIKE = "Timelike"
    SPACELIKE = "Spacelike"


@dataclass(frozen=True)
class VectorClass:
    kind: Kind
    f2: float


def _vec(norm, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (norm.dim,):
        raise ValueError(f"expected a vector of length {norm.dim}, got shape {v.shape}")
    return v


def metric_at(norm, v, singular_tol=SINGULAR_TOL) -> MetricAt:
    v = _vec(norm, v)
    if not np.any(v):
        raise ValueError("the metric is undefined at the zero vector")
    g = 0.5 * jet_eval(norm, v, 2).hess
    det = float(np.linalg.det(g))
    if abs(det) <= singular_tol:
        raise SingularMetric(f"metric is singular at {v.tolist()} (det = {det:.3e})", v=v.tolist(), det=det)
    return MetricAt(v, g, det)


def lowered(norm, v):
    """The covector ``g_ij(v) v^i``, computed as half the gradient of ``F^2``.

    ``lowered(norm, a) @ b`` is the scalar product ``<a, b>_a``.
    """
    v = _vec(norm, v)
    return 0.5 * jet_eval(norm, v, 1).grad


def scalar_product(norm, v, a, b):
    """``g_ij(v) a^i b^j``; ``v`` is the direction the metric is taken at."""
    g = metric_at(norm, v).g
    return float(np.asarray(a, dtype=float) @ g @ np.asarray(b, dtype=float))


def classify(norm, v, class_tol=CLASS_TOL) -> VectorClass:
    f2 = eval_f2(norm, _vec(norm, v))
    if abs(f2) <= class_tol:
        kind = Kind.ISOTROPIC
    elif f2 < 0:
        kind = Kind.TIMELIKE
    else:
        kind = Kind.SPACELIKE
    return VectorClass(kind, f2)


def unit_vector(norm, v, class_tol=CLASS_TOL):
    """``v / sqrt(|F^2(v)|)``, so ``F^2 = +1`` (spacelike) or ``-1`` (timelike)."""
    v = _vec(norm, v)
    cls = classify(norm, v, class_tol)
    if cls.kind is Kind.ISOTROPIC:
        raise IsotropicVector(f"cannot normalize isotropic vector {v.tolist()}", v=v.tolist(), f2=cls.f2)
    return v / np.sqrt(abs(cls.f2))


def cartan_at(norm, v) -> CartanAt:
    v = _vec(norm, v)
    if not np.any(v):
        raise ValueError("the Cartan tensor is undefined at the zero vector")
    return CartanAt(v, 0.25 * jet_eval(norm, v, 3).third_tensor())


@dataclass(frozen=True)
class EulerReport:
    """Relative residuals of the Euler identities at one point.

    homogeneity   ``v^i dF^2/dv^i - 2 F^2``
    contraction   ``g_ij v^i v^j - F^2``
    degree0       ``dg_ij/dv^k v^k`` (metric has degree 0)
    gradient      ``dF^2/dv^j - 2 g_ij v^i``

    Each residual is divided by the magnitude of the terms it cancels.
    """

    homogeneity: float
    contraction: float
    degree0: float
    gradient: float

    @property
    def worst(self):
        return max(self.homogeneity, self.contraction, self.degree0, self.gradient)


def _rel(residual, scale):
    residual = float(np.max(np.abs(residual)))
    return 0.0 if residual == 0.0 else residual / max(scale, _TINY)


def euler_report(norm, v) -> EulerReport:
    v = _vec(norm, v)
    jet = jet_eval(norm, v, 3)
    f2, df = jet.value, jet.grad
    g = 0.5 * jet.hess
    dg = 0.5 * jet.third_tensor()  # dg_ij/dv^k

    vdf = v * df
    r1 = _rel(vdf.sum() - 2 * f2, max(np.abs(vdf).sum(), 2 * abs(f2)))
    gvv = g * np.outer(v, v)
    r2 = _rel(gvv.sum() - f2, max(np.abs(gvv).sum(), abs(f2)))
    dgv = np.abs(dg * v).sum(axis=2)
    r3 = _rel(dg @ v, max(float(dgv.max()), float(np.abs(g).max())))
    gv = g * v[:, None]
    r4 = _rel(df - 2 * gv.sum(axis=0), max(float(np.abs(df).max()), 2 * float(np.abs(gv).sum(axis=0).max())))
    return EulerReport(r1, r2, r3, r4)


@dataclass(frozen=True, eq=False)
class SpeedReport:
    """Time components ``v0 > 0`` of isotropic vectors over unit spatial directions."""

    direction: np.ndarray
    v0: float
    samples: np.ndarray

    @property
    def spread(self):
        return float(self.samples.max() - self.samples.min()) if len(self.samples) else 0.0

    @property
    def mean(self):
        return float(self.samples.mean()) if len(self.samples) else self.v0


def _isotropic_time(norm4, d_unit):
    # product form: F^2(t, d) = F^2(0, d) - c^2 t^2
    def phi(t):
        return eval_f2(norm4, np.concatenate(([t], d_unit)))

    f0, f1, f2 = phi(0.0), phi(1.0), phi(2.0)
    k = f0 - f1
    if k <= 0 or abs((f0 - f2) - 4 * k) > 1e-9 * max(1.0, abs(4 * k)):
        raise NotProductForm("F^2 is not of the form F^2(0, d) - c^2 t^2 along the time axis", d=d_unit.tolist())
    return float(np.sqrt(f0 / k))


def light_speed(norm4, direction=(1.0, 0.0, 0.0), trials=0, seed=0, class_tol=CLASS_TOL) -> SpeedReport:
    """Solve ``F^2(v0, d) = 0`` for ``v0 > 0`` with ``d`` scaled to ``F3(d) = 1``.

    ``norm4`` must be declared product-form (``spacetime4``); the speed
    parameter ``c`` is the one it was built with.  ``trials`` extra
    directions are drawn from the seeded stream ``light-speed``.
    """
    if norm4.spatial is None or norm4.dim != 4:
        raise NotProductForm(f"{norm4.label()} is not a declared product-form 4D norm")
    spatial = norm4.spatial

    def solve(d):
        d = np.asarray(d, dtype=float)
        f3 = eval_f2(spatial, d)
        if f3 <= class_tol:
            raise IsotropicDirection(f"spatial direction {d.tolist()} has F3^2 = {f3!r}", d=d.tolist())
        return _isotropic_time(norm4, d / np.sqrt(f3))

    d0 = np.asarray(direction, dtype=float)
    v0 = solve(d0)
    gen = _rng.stream(seed, "light-speed")
    samples = np.array([solve(gen.standard_normal(3)) for _ in range(trials)])
    return SpeedReport(d0, v0, samples)


def find_asymmetry_witness(norm, seed=0, tries=200, threshold=1e-3):
    """Seeded search for ``(v1, v2)`` with ``<v1, v2>_{v1} = 0`` and ``|<v2, v1>_{v2}| > threshold``.

    ``v2`` is a random vector projected onto the hyperplane orthogonal to
    ``v1``.  Returns ``(v1, v2, <v2, v1>_{v2})`` or ``None``.
    """
    gen = _rng.stream(seed, "asymmetry", norm.dim)
    for _ in range(tries):
        v1 = gen.standard_normal(norm.dim)
        v2 = gen.standard_normal(norm.dim)
        w = lowered(norm, v1)
        v2 = v2 - (w @ v2) / (w @ w) * w
        back = float(lowered(norm, v2) @ v1)
        if abs(back) > threshold:
            return v1, v2, back
    return None
