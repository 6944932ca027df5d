"""Motions between orthonormal bases and their infinitesimal counterparts.

A motion is a linear map sending at least one orthonormal basis to an
orthonormal basis.  Between two orthonormal bases there is exactly one such
map, but applying it again to its own image need not give an orthonormal
basis, so composition can leave the set of motions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import cartan_at, lowered, metric_at
from .errors import NotOrthonormal, RankDeficiencyAmbiguous
from .ortho import ORTHO_TOL, Basis, OrthoReport, _make_report, direct_tri, triangular_report
from .transform import _check_invertible, passive_transform

RANK_TOL = 1e-7
SMALLNESS_EPS = (1e-4, 1e-5, 1e-6)
SMALLNESS_K = 100.0

__all__ = [
    "Motion",
    "motion_between",
    "probe_closure",
    "passive_transform",
    "quasimotion_check",
    "active_check",
    "infinitesimal_space",
    "scalar_defect",
    "defect_rate",
]


@dataclass(frozen=True, eq=False)
class Motion:
    """``matrix @ source.columns == image.columns`` in ambient coordinates."""

    matrix: np.ndarray
    source: Basis
    image: Basis

    def apply(self, basis):
        return Basis.from_columns(self.matrix @ basis.columns)

    def relative_to(self, basis):
        """Matrix of this map in the coordinates of ``basis``."""
        return np.linalg.solve(basis.columns, self.matrix @ basis.columns)


def _require_orthonormal(norm, basis, which, ortho_tol):
    rep = triangular_report(norm, basis, ortho_tol)
    if not rep.orthonormal:
        raise NotOrthonormal(
            f"{which} is not orthonormal (residual {rep.residual:.3e})",
            which=which, residual=rep.residual, basis=basis.vectors.tolist(),
        )
    return rep


def motion_between(norm, b1, b2, ortho_tol=ORTHO_TOL) -> Motion:
    """The unique linear map taking ``b1[k]`` to ``b2[k]`` for every ``k``."""
    _require_orthonormal(norm, b1, "b1", ortho_tol)
    _require_orthonormal(norm, b2, "b2", ortho_tol)
    # A E1^T = E2^T  <=>  E1 A^T = E2
    A = np.linalg.solve(b1.vectors, b2.vectors).T
    return Motion(A, b1, b2)


class Verdict(str, Enum):
    CLOSED = "Closed"
    NOT_CLOSED = "NotClosed"


@dataclass(frozen=True, eq=False)
class ClosureProbeResult:
    motion: Motion
    chained_basis: Basis
    report: OrthoReport
    violation: float
    verdict: Verdict


def probe_closure(norm, b1, b2, ortho_tol=ORTHO_TOL) -> ClosureProbeResult:
    """Apply the motion ``b1 -> b2`` once more, to ``b2``, and test the result."""
    motion = motion_between(norm, b1, b2, ortho_tol)
    b3 = motion.apply(b2)
    rep = triangular_report(norm, b3, ortho_tol)
    violation = rep.residual
    verdict = Verdict.NOT_CLOSED if violation > ortho_tol else Verdict.CLOSED
    return ClosureProbeResult(motion, b3, rep, violation, verdict)


def quasimotion_check(norm, A, b, ortho_tol=ORTHO_TOL) -> bool:
    """Is the passive image of orthonormal ``b`` under ``A`` orthonormal?

    ``A`` holds, column by column, the coordinates of the new basis vectors
    relative to ``b``.  The check runs through the tensor law: the metric is
    re-expressed in the new coordinates and read off at the unit vectors.
    """
    A = _check_invertible(A)
    _require_orthonormal(norm, b, "b", ortho_tol)
    P = passive_transform(norm, b.columns @ A)
    eye = np.eye(b.n)
    tri = np.array([P.lowered(eye[k]) for k in range(b.n)])
    return _make_report(Basis.from_columns(P.A), tri, ortho_tol).orthonormal


def active_check(norm, A, b, ortho_tol=ORTHO_TOL) -> bool:
    """Same question with ``A`` acting as a linear map in ``b`` coordinates.

    The images ``A(b_k)`` are formed in ambient coordinates and the
    orthogonality relations evaluated there directly.
    """
    A = _check_invertible(A)
    _require_orthonormal(norm, b, "b", ortho_tol)
    L = b.columns @ A @ np.linalg.inv(b.columns)
    image = np.array([L @ e for e in b.vectors])
    return _make_report(Basis(image), direct_tri(norm, image), ortho_tol).orthonormal


# -- infinitesimal motions ---------------------------------------------------

def orthonormality_residual(norm, vectors, signs):
    """``Phi``: ``<e_k, e_l>_{e_k} - target`` over the constrained ``k <= l``."""
    T = direct_tri(norm, vectors)
    target = np.diag(np.asarray(signs, dtype=float))
    iu = np.triu_indices(len(signs))
    return (T - target)[iu]


@dataclass(frozen=True, eq=False)
class InfinitesimalSpace:
    at: Basis
    generators: list
    singular_values: np.ndarray
    smallness: np.ndarray  # [generator, eps] -> |dPhi| / (eps^2 |a|^2)

    @property
    def dim(self):
        return len(self.generators)

    def passes(self, K=SMALLNESS_K):
        return bool(np.all(self.smallness <= K))


def constraint_jacobian(norm, basis):
    """Jacobian of ``Phi((I + eps a) E)`` at ``eps = 0`` w.r.t. the entries of ``a``.

    Row ``(k, l)``, ``k <= l``, column ``r*n + s``:
    ``e_k^s [(g_k e_l)_r + 2 (C_k e_k e_l)_r] + (g_k e_k)_r e_l^s`` with
    ``g_k``, ``C_k`` the metric and Cartan tensor at ``e_k``.
    """
    E = basis.vectors
    n = basis.n
    rows = []
    for k in range(n):
        ek = E[k]
        g = metric_at(norm, ek).g
        C = cartan_at(norm, ek).c
        gek = g @ ek
        Cek = np.einsum("ijr,i->jr", C, ek)
        for l in range(k, n):
            el = E[l]
            u = g @ el + 2.0 * (el @ Cek)
            rows.append((np.outer(u, ek) + np.outer(gek, el)).ravel())
    return np.array(rows)


def generator_smallness(norm, basis, a, signs, eps=SMALLNESS_EPS):
    """``|Phi(E + eps a E) - Phi(E)| / (eps^2 |a|_F^2)`` for each ``eps``."""
    E = basis.vectors
    base = orthonormality_residual(norm, E, signs)
    scale = float(np.sum(a * a)) or 1.0
    out = []
    for e in eps:
        moved = E + e * (E @ a.T)
        d = orthonormality_residual(norm, moved, signs) - base
        out.append(float(np.max(np.abs(d))) / (e * e * scale))
    return np.array(out)


def infinitesimal_space(norm, b, rank_tol=RANK_TOL, ortho_tol=ORTHO_TOL) -> InfinitesimalSpace:
    """Generators ``a`` with ``(I + eps a) b`` orthonormal to first order in ``eps``.

    The null space of :func:`constraint_jacobian` is read off an SVD; a
    singular value within a factor 10 of ``rank_tol`` makes the rank
    ambiguous and raises :class:`RankDeficiencyAmbiguous`.
    """
    rep = _require_orthonormal(norm, b, "b", ortho_tol)
    n = b.n
    J = constraint_jacobian(norm, b)
    _, s, Vt = np.linalg.svd(J)
    sv = np.zeros(n * n)
    sv[: len(s)] = s
    close = (sv > rank_tol / 10) & (sv <= rank_tol * 10)
    if np.any(close):
        raise RankDeficiencyAmbiguous(
            f"singular value(s) {sv[close].tolist()} too close to rank_tol={rank_tol}",
            singular_values=sv.tolist(), rank_tol=rank_tol,
        )
    rank = int(np.sum(sv > rank_tol))
    gens = []
    for row in Vt[rank:]:
        a = row.reshape(n, n)
        a = a if a.flat[np.argmax(np.abs(a))] > 0 else -a
        gens.append(a)
    signs = rep.diag_signs
    small = np.array([generator_smallness(norm, b, a, signs) for a in gens]).reshape(len(gens), len(SMALLNESS_EPS))
    return InfinitesimalSpace(b, gens, sv, small)


def scalar_defect(norm, a, x, y, eps):
    """``<x', y'>_{x'} - <x, y>_x`` with ``x' = (I + eps a) x``, ``y' = (I + eps a) y``."""
    if not 0 < eps <= 1e-3:
        raise ValueError("eps must lie in (0, 1e-3]")
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xp = x + eps * (a @ x)
    yp = y + eps * (a @ y)
    return float(lowered(norm, xp) @ yp - lowered(norm, x) @ y)


@dataclass(frozen=True)
class DefectRate:
    rate: float        # Richardson limit of Delta / eps
    previous: float    # same estimate one halving earlier
    rel_change: float

    @property
    def converged(self):
        return self.rel_change <= 1e-4


def defect_rate(norm, a, x, y, eps=1e-4) -> DefectRate:
    """First-order coefficient of :func:`scalar_defect` by Richardson extrapolation."""
    d = [scalar_defect(norm, a, x, y, eps / 2**k) / (eps / 2**k) for k in range(3)]
    r1 = 2 * d[1] - d[0]
    r2 = 2 * d[2] - d[1]
    # a vanishing limit is measured against the size of the products involved
    natural = float(np.linalg.norm(a) * np.linalg.norm(x) * np.linalg.norm(y))
    scale = max(abs(r1), abs(r2), natural, np.finfo(float).tiny)
    return DefectRate(r2, r1, abs(r2 - r1) / scale)


# -- seeded closure search ---------------------------------------------------

COND_LIMIT = 1e4
PAIR_ATTEMPTS = 20


@dataclass(frozen=True, eq=False)
class ProbeSearch:
    """Outcome of :func:`probe_search`.

    ``skipped`` counts trials where no usable pair was found.  A pair is
    usable when both bases share their diagonal sign order (otherwise not
    even the quadratic case relates them by a motion).  The motion must also
    have condition number at most ``COND_LIMIT`` so roundoff stays below
    ``ortho_tol``.
    """

    results: list
    skipped: int
    first_not_closed: object  # (trial, ClosureProbeResult) or None

    @property
    def closed(self):
        return sum(r.verdict is Verdict.CLOSED for _, r in self.results)

    @property
    def not_closed(self):
        return sum(r.verdict is Verdict.NOT_CLOSED for _, r in self.results)

    @property
    def max_violation(self):
        return max((r.violation for _, r in self.results), default=0.0)


def probe_search(norm, seed, trials, ortho_tol=ORTHO_TOL, class_tol=None, spread=0.25) -> ProbeSearch:
    """Probe closure on ``trials`` seeded pairs of orthonormal bases.

    Trial ``t`` draws from stream ``probe-closure/t/attempt`` and uses the
    first attempt giving a usable pair.
    """
    from . import rng as _rng
    from .core import CLASS_TOL
    from .errors import FinslerError
    from .ortho import orthogonalize, random_seed_basis

    class_tol = CLASS_TOL if class_tol is None else class_tol
    results, skipped, first = [], 0, None
    for t in range(trials):
        found = None
        for attempt in range(PAIR_ATTEMPTS):
            gen = _rng.Stream(seed).child("probe-closure", t, attempt).generator()
            try:
                r1 = orthogonalize(norm, random_seed_basis(gen, norm.dim, spread), class_tol, ortho_tol)
                r2 = orthogonalize(norm, random_seed_basis(gen, norm.dim, spread), class_tol, ortho_tol)
            except FinslerError:
                continue
            if r1.diag_signs != r2.diag_signs:
                continue
            res = probe_closure(norm, r1.basis, r2.basis, ortho_tol)
            if np.linalg.cond(res.motion.matrix) > COND_LIMIT:
                continue
            found = res
            break
        if found is None:
            skipped += 1
            continue
        results.append((t, found))
        if first is None and found.verdict is Verdict.NOT_CLOSED:
            first = (t, found)
    return ProbeSearch(results, skipped, first)
