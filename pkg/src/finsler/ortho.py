"""Orthogonalization under the asymmetric orthogonality relation.

``b`` is orthogonal to ``a`` when ``<a, b>_a = g_ij(a) a^i b^j = 0``.  The
relation is not symmetric, so basis order matters: in an orthogonal basis
every later vector is orthogonal to every earlier one, which makes the
matrix ``T[k][l] = <e_k, e_l>_{e_k}`` lower triangular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from . import rng as _rng
from .core import CLASS_TOL, lowered
from .errors import (
    IsotropicIntermediate,
    NotSpacelikeSeed,
    PerpContainsIsotropic,
    SingularSystem,
)
from .norms import eval_f2
from .transform import passive_transform

ORTHO_TOL = 1e-8
_BASIS_COND = 1e12


@dataclass(frozen=True, eq=False)
class Basis:
    """Ordered basis; row ``k`` of ``vectors`` is ``e_k`` in ambient coordinates."""

    vectors: np.ndarray

    def __post_init__(self):
        E = np.array(self.vectors, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1] or E.shape[0] == 0:
            raise ValueError(f"a basis needs n vectors of length n, got shape {E.shape}")
        if not np.all(np.isfinite(E)) or np.linalg.cond(E) > _BASIS_COND:
            raise ValueError("basis vectors are not linearly independent")
        E.flags.writeable = False
        object.__setattr__(self, "vectors", E)

    @classmethod
    def from_columns(cls, M):
        return cls(np.asarray(M, dtype=float).T)

    @classmethod
    def standard(cls, n):
        return cls(np.eye(n))

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def columns(self):
        """Matrix whose columns are the basis vectors."""
        return self.vectors.T

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class OrthoReport:
    basis: Basis
    tri: np.ndarray
    max_upper_violation: float
    diag_signs: tuple
    orthonormal: bool

    @property
    def residual(self):
        """Worst deviation over the constrained entries (upper triangle and diagonal)."""
        d = np.abs(np.diag(self.tri))
        return max(self.max_upper_violation, float(np.max(np.abs(d - 1.0))))

    @property
    def lower(self):
        """The unconstrained ``k > l`` entries, row by row."""
        return self.tri[np.tril_indices(self.basis.n, -1)]


def _make_report(basis, tri, ortho_tol):
    n = basis.n
    upper = tri[np.triu_indices(n, 1)]
    max_upper = float(np.max(np.abs(upper))) if upper.size else 0.0
    diag = np.diag(tri)
    signs = tuple(int(s) for s in np.sign(diag))
    ok = max_upper <= ortho_tol and bool(np.all(np.abs(np.abs(diag) - 1.0) <= ortho_tol))
    return OrthoReport(basis, tri, max_upper, signs, ok)


def direct_tri(norm, vectors):
    """``T[k][l] = <e_k, e_l>_{e_k}`` evaluated in ambient coordinates."""
    E = np.asarray(vectors, dtype=float)
    W = np.array([lowered(norm, e) for e in E])
    return W @ E.T


def _procedure(norm, vectors, done=(), class_tol=CLASS_TOL, require=None):
    """Extend the orthonormal list ``done`` by orthogonalizing ``vectors`` in order.

    ``require`` optionally demands every new vector be ``"spacelike"`` or
    ``"timelike"`` before normalization.
    """
    out = [np.asarray(e, dtype=float) for e in done]
    covs = [lowered(norm, e) for e in out]
    diag = [eval_f2(norm, e) for e in out]
    for raw in vectors:
        raw = np.asarray(raw, dtype=float)
        step = len(out) + 1
        m = len(out)
        # M[i][p] = <e_i, e_p>_{e_i} is lower triangular with diagonal F^2(e_i)
        coef = np.zeros(m)
        for i in range(m):
            if abs(diag[i]) <= class_tol:
                raise SingularSystem(
                    f"zero pivot F^2(e_{i + 1}) = {diag[i]!r} at step {step}",
                    step=step, index=i + 1, vector=out[i].tolist(),
                )
            rhs = -(covs[i] @ raw) - sum(coef[p] * (covs[i] @ out[p]) for p in range(i))
            coef[i] = rhs / diag[i]
        x = raw + sum(coef[i] * out[i] for i in range(m))
        f2 = eval_f2(norm, x)
        rel = f2 / float(x @ x)
        if require == "timelike" and rel >= -class_tol:
            raise PerpContainsIsotropic(
                f"orthogonal complement contains a non-timelike vector (F^2/|x|^2 = {rel:.3e})",
                step=step, vector=x.tolist(), f2=f2,
            )
        if abs(rel) <= class_tol:
            raise IsotropicIntermediate(
                f"vector at step {step} is isotropic (F^2/|x|^2 = {rel:.3e}); the procedure cannot continue",
                step=step, vector=x.tolist(), f2=f2,
            )
        if require == "spacelike" and rel < 0:
            raise NotSpacelikeSeed(f"vector at step {step} is timelike", step=step, vector=x.tolist(), f2=f2)
        e = x / np.sqrt(abs(f2))
        out.append(e)
        covs.append(lowered(norm, e))
        diag.append(eval_f2(norm, e))
    return out[len(done):]


def orthogonalize(norm, seed, class_tol=CLASS_TOL, ortho_tol=ORTHO_TOL) -> OrthoReport:
    """Orthonormal basis from ``seed`` keeping the seed's order.

    ``e_1`` is the first seed vector; each next vector is the seed vector
    plus the combination of earlier ``e_i`` that makes it orthogonal to all
    of them, found by forward substitution.  Vectors are normalized as soon
    as they are built.  Raises :class:`IsotropicIntermediate` when some
    vector comes out isotropic, in which case no orthonormal basis can be
    reached from this seed in this order.
    """
    if not isinstance(seed, Basis):
        seed = Basis(seed)
    vectors = _procedure(norm, seed.vectors, class_tol=class_tol)
    basis = Basis(np.array(vectors))
    return _make_report(basis, direct_tri(norm, basis.vectors), ortho_tol)


def triangular_report(norm, basis, ortho_tol=ORTHO_TOL) -> OrthoReport:
    """``T[k][l] = g'_kl(d_k)`` with ``g'`` the metric in ``basis`` coordinates.

    Row ``k`` of ``g'`` at the ``k``-th coordinate unit vector ``d_k`` is
    ``g'(d_k) d_k``, so it comes straight from the transformed covector.
    """
    if not isinstance(basis, Basis):
        basis = Basis(basis)
    P = passive_transform(norm, basis.columns)
    eye = np.eye(basis.n)
    tri = np.array([P.lowered(eye[k]) for k in range(basis.n)])
    return _make_report(basis, tri, ortho_tol)


@dataclass(frozen=True, eq=False)
class ConeSplit:
    plus: np.ndarray   # rows: orthonormal spacelike vectors
    minus: np.ndarray  # rows: orthonormal timelike vectors
    report: OrthoReport

    @property
    def basis(self):
        return self.report.basis


def _canonical_sign(v):
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def cone_split(norm, seed_plus, class_tol=CLASS_TOL, ortho_tol=ORTHO_TOL, seed=0, probes=16) -> ConeSplit:
    """Orthonormal basis ``(e+, e-)`` from a spacelike seed subspace.

    ``e+`` orthonormalizes ``seed_plus``.  The vectors orthogonal to every
    ``e+_k`` form the kernel of the functionals ``w -> <e+_k, w>_{e+_k}``;
    that kernel is orthonormalized with timelike normalization.  If it holds
    an isotropic or spacelike vector (checked on every intermediate vector
    and on ``probes`` random kernel elements) :class:`PerpContainsIsotropic`
    is raised.
    """
    n = norm.dim
    S = np.asarray(seed_plus, dtype=float).reshape(-1, n)
    for k, s in enumerate(S):
        f2 = eval_f2(norm, s)
        if f2 <= class_tol * float(s @ s):
            raise NotSpacelikeSeed(f"seed vector {k + 1} is not spacelike (F^2 = {f2!r})", index=k + 1, vector=s.tolist())
    if len(S) and np.linalg.matrix_rank(S) < len(S):
        raise ValueError("seed_plus vectors are linearly dependent")

    plus = _procedure(norm, S, class_tol=class_tol, require="spacelike")
    if plus:
        W = np.array([lowered(norm, e) for e in plus])
        K = null_space(W)
    else:
        K = np.eye(n)
    if K.shape[1] != n - len(plus):
        raise PerpContainsIsotropic("orthogonal complement has unexpected dimension", dim=int(K.shape[1]))
    kernel = [_canonical_sign(K[:, j]) for j in range(K.shape[1])]

    gen = _rng.stream(seed, "cone-split", n)
    for _ in range(probes if kernel else 0):
        x = K @ gen.standard_normal(K.shape[1])
        f2 = eval_f2(norm, x)
        if f2 >= -class_tol * float(x @ x):
            raise PerpContainsIsotropic(
                f"orthogonal complement contains a non-timelike vector (F^2 = {f2!r})", vector=x.tolist(), f2=f2
            )

    minus = _procedure(norm, kernel, done=plus, class_tol=class_tol, require="timelike")
    basis = Basis(np.array(plus + minus))
    report = _make_report(basis, direct_tri(norm, basis.vectors), ortho_tol)
    empty = np.zeros((0, n))
    return ConeSplit(np.array(plus) if plus else empty, np.array(minus) if minus else empty, report)


def random_seed_basis(gen, n, spread=0.25):
    """Seed basis ``I + spread * N(0, 1)`` drawn from ``gen`` (redrawn until well conditioned)."""
    while True:
        M = np.eye(n) + spread * gen.standard_normal((n, n))
        if np.linalg.cond(M) < 1e6:
            return Basis(M)
