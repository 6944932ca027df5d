"""Passive transformations: the same norm seen in new coordinates.

With new basis vectors as the columns of ``A`` (in old coordinates), a
vector has old coordinates ``v = A v'`` and the metric obeys the tensor law

    g'_ij(v') = g_kl(A v') A^k_i A^l_j .
"""

import numpy as np

from .core import lowered, metric_at
from .errors import SingularTransform
from .norms import eval_f2

_COND_LIMIT = 1e12


def _check_invertible(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SingularTransform(f"transform must be square, got shape {A.shape}", A=A.tolist())
    if not np.all(np.isfinite(A)) or np.linalg.cond(A) > _COND_LIMIT:
        raise SingularTransform("transform is singular or numerically singular", A=A.tolist())
    return A


class PassiveMetric:
    """Evaluator for ``F^2`` and ``g`` in the coordinates defined by ``A``."""

    def __init__(self, norm, A):
        self.norm = norm
        self.A = _check_invertible(A)
        if self.A.shape[0] != norm.dim:
            raise SingularTransform(f"transform is {self.A.shape}, norm has dimension {norm.dim}")

    def to_old(self, vp):
        return self.A @ np.asarray(vp, dtype=float)

    def to_new(self, v):
        return np.linalg.solve(self.A, np.asarray(v, dtype=float))

    def f2(self, vp):
        return eval_f2(self.norm, self.to_old(vp))

    def metric(self, vp):
        g = metric_at(self.norm, self.to_old(vp)).g
        return self.A.T @ g @ self.A

    def lowered(self, vp):
        """``g'_ij(v') v'^i``: the tensor law applied to the covector ``g v``."""
        return self.A.T @ lowered(self.norm, self.to_old(vp))


def passive_transform(norm, A) -> PassiveMetric:
    return PassiveMetric(norm, A)
