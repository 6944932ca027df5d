import numpy as np
import pytest
from hypothesis import given, strategies as st

from finsler.core import metric_at
from finsler.errors import NotOrthonormal, RankDeficiencyAmbiguous, SingularTransform
from finsler.motions import (
    COND_LIMIT,
    Verdict,
    active_check,
    constraint_jacobian,
    defect_rate,
    generator_smallness,
    infinitesimal_space,
    motion_between,
    passive_transform,
    probe_closure,
    probe_search,
    quasimotion_check,
    scalar_defect,
)
from finsler.norms import euclidean, pseudo, ratio3, spacetime4
from finsler.ortho import Basis, orthogonalize, random_seed_basis, triangular_report
from finsler.rng import stream

R3 = ratio3(1)
SEED_A = [[1, 0.2, 0.1], [0.3, 1, 0], [0, 0.4, 1]]
SEED_B = [[0.9, -0.3, 0.2], [0.1, 1, -0.2], [0.2, 0.1, 1.1]]


def _basis(norm, seed):
    return orthogonalize(norm, seed).basis


def _rotation(t):
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def test_motion_examples():
    b = _basis(R3, SEED_A)
    assert np.allclose(motion_between(R3, b, b).matrix, np.eye(3), atol=1e-14)
    R = _rotation(0.7)
    rot = Basis.from_columns(R)
    assert np.allclose(motion_between(euclidean(2), Basis.standard(2), rot).matrix, R, atol=1e-15)
    b2 = _basis(R3, SEED_B)
    m = motion_between(R3, b, b2)
    assert np.max(np.abs(m.matrix @ b.columns - b2.columns)) <= 1e-10


def test_not_orthonormal_reports_which():
    with pytest.raises(NotOrthonormal) as info:
        motion_between(euclidean(2), Basis.standard(2), Basis([[2, 0], [0, 1]]))
    assert info.value.witness["which"] == "b2" and info.value.witness["residual"] == pytest.approx(3.0)


def test_single_transitivity():
    b1, b2 = _basis(R3, SEED_A), _basis(R3, SEED_B)
    A = motion_between(R3, b1, b2).matrix
    # any M with M E1 = E2 (columns) is E2 E1^-1
    M = b2.columns @ np.linalg.inv(b1.columns)
    assert np.max(np.abs(M - A)) <= 1e-10


# -- closure ------------------------------------------------------------------

def test_identity_probe_closed():
    b = _basis(R3, SEED_A)
    res = probe_closure(R3, b, b)
    assert res.verdict is Verdict.CLOSED and res.violation <= 1e-8


@pytest.mark.parametrize("norm", [euclidean(3), pseudo(2, 1), pseudo(1, 1), pseudo(2, 2)], ids=lambda n: n.label())
def test_quadratic_closed(norm):
    search = probe_search(norm, 7, 20)
    assert search.not_closed == 0 and search.closed == len(search.results) > 0


def test_ratio3_not_closed_pinned():
    search = probe_search(R3, 42, 3)
    t, res = search.first_not_closed
    assert t == 0
    assert res.verdict is Verdict.NOT_CLOSED
    assert res.violation == pytest.approx(0.007196398400084876, rel=1e-9)
    assert res.violation > 1e-3
    assert np.linalg.cond(res.motion.matrix) <= COND_LIMIT
    # replay through the plain API
    again = probe_closure(R3, res.motion.source, res.motion.image)
    assert again.violation == res.violation


def test_chained_fails_orthonormality_directly():
    b1, b2 = _basis(R3, SEED_A), _basis(R3, SEED_B)
    res = probe_closure(R3, b1, b2)
    assert not triangular_report(R3, res.chained_basis).orthonormal


# -- passive transformations -------------------------------------------------

def test_passive_identity_and_orthogonal():
    v = np.array([0.3, 1.2, -0.7])
    P = passive_transform(R3, np.eye(3))
    assert np.array_equal(P.metric(v), metric_at(R3, v).g)
    Q, _ = np.linalg.qr(stream(0, "orth").standard_normal((4, 4)))
    P = passive_transform(euclidean(4), Q)
    assert np.allclose(P.metric(np.array([1.0, 2.0, 0.5, -1.0])), np.eye(4), atol=1e-14)


@given(seed=st.integers(0, 2**32))
def test_tensor_law(seed):
    gen = stream(seed, "tensor-law")
    A = np.eye(3) + 0.4 * gen.standard_normal((3, 3))
    if np.linalg.cond(A) > 1e4:
        return
    v = gen.standard_normal(3)
    P = passive_transform(R3, A)
    vp = P.to_new(v)
    g = metric_at(R3, v, singular_tol=0).g
    assert np.max(np.abs(P.metric(vp) - A.T @ g @ A)) <= 1e-8 * np.max(np.abs(A.T @ g @ A))
    assert P.f2(vp) == pytest.approx(R3(v), rel=1e-10)


def test_singular_transform():
    with pytest.raises(SingularTransform):
        passive_transform(R3, np.ones((3, 3)))
    with pytest.raises(SingularTransform):
        quasimotion_check(euclidean(2), [[1, 2], [2, 4]], Basis.standard(2))


def test_quasimotion_examples():
    assert quasimotion_check(R3, np.eye(3), _basis(R3, SEED_A))
    boost = np.array([[np.cosh(1), np.sinh(1)], [np.sinh(1), np.cosh(1)]])
    assert quasimotion_check(pseudo(1, 1), boost, Basis.standard(2))
    assert not quasimotion_check(euclidean(2), np.diag([2.0, 1.0]), Basis.standard(2))


def _orthonormal_pair(norm, seed):
    for attempt in range(50):
        gen = stream(seed, "pair", attempt)
        try:
            r1 = orthogonalize(norm, random_seed_basis(gen, norm.dim))
            r2 = orthogonalize(norm, random_seed_basis(gen, norm.dim))
        except Exception:
            continue
        if r1.diag_signs == r2.diag_signs:
            return r1.basis, r2.basis
    raise AssertionError("no pair")


@pytest.mark.parametrize("norm", [R3, ratio3(4), pseudo(2, 1), spacetime4(1, 1)], ids=lambda n: n.label())
@given(seed=st.integers(0, 2**32))
def test_motion_inverse(norm, seed):
    b1, b2 = _orthonormal_pair(norm, seed)
    m = motion_between(norm, b1, b2)
    inv = np.linalg.inv(m.relative_to(b2))
    assert quasimotion_check(norm, inv, b2)
    assert active_check(norm, inv, b2)


@pytest.mark.parametrize("norm", [R3, pseudo(2, 1)], ids=lambda n: n.label())
@given(seed=st.integers(0, 2**32))
def test_motion_product(norm, seed):
    b1, b2 = _orthonormal_pair(norm, seed)
    _, b3 = _orthonormal_pair(norm, seed + 1)
    if triangular_report(norm, b3).diag_signs != triangular_report(norm, b1).diag_signs:
        return
    A = motion_between(norm, b1, b2)
    B = motion_between(norm, b2, b3)
    BA = B.matrix @ A.matrix
    assert np.max(np.abs(BA @ b1.columns - b3.columns)) <= 1e-8
    rel = np.linalg.solve(b1.columns, BA @ b1.columns)
    assert quasimotion_check(norm, rel, b1)


@given(seed=st.integers(0, 2**32), which=st.sampled_from(["motion", "chained", "random"]))
def test_active_passive_coincide(seed, which):
    b1, b2 = _orthonormal_pair(R3, seed)
    m = motion_between(R3, b1, b2)
    if which == "motion":
        A, b = m.relative_to(b1), b1
    elif which == "chained":
        A, b = m.relative_to(b2), b2
    else:
        A, b = np.eye(3) + 0.1 * stream(seed, "rand").standard_normal((3, 3)), b1
    assert quasimotion_check(R3, A, b) == active_check(R3, A, b)


# -- infinitesimal motions -----------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_euclidean_generators_antisymmetric(n):
    space = infinitesimal_space(euclidean(n), Basis.standard(n))
    assert space.dim == n * (n - 1) // 2 and space.passes()
    G = np.array([a.ravel() for a in space.generators])
    for a in space.generators:
        assert np.allclose(a, -a.T, atol=1e-12)
    # they span all antisymmetric matrices
    assert np.linalg.matrix_rank(G, tol=1e-8) == n * (n - 1) // 2


def test_pseudo_boost_generator():
    space = infinitesimal_space(pseudo(1, 1), Basis.standard(2))
    assert space.dim == 1
    a = space.generators[0]
    assert np.allclose(a / a[0, 1], [[0, 1], [1, 0]], atol=1e-12)


def test_ratio3_generators():
    space = infinitesimal_space(R3, _basis(R3, SEED_A))
    assert space.dim == 3 and space.passes()
    assert space.smallness.shape == (3, 3)


def test_rank_ambiguity_reported():
    with pytest.raises(RankDeficiencyAmbiguous) as info:
        infinitesimal_space(R3, _basis(R3, SEED_A), rank_tol=1.0)
    assert info.value.witness["rank_tol"] == 1.0


@given(coef=st.lists(st.floats(-2, 2, allow_nan=False), min_size=3, max_size=3), scale=st.floats(0.1, 10))
def test_generator_span_is_linear(coef, scale):
    b = _basis(R3, SEED_A)
    space = infinitesimal_space(R3, b)
    a = sum(c * g for c, g in zip(coef, space.generators))
    if np.linalg.norm(a) < 1e-3:
        return
    J = constraint_jacobian(R3, b)
    for cand in (a, scale * a, a + space.generators[0]):
        assert np.max(np.abs(J @ cand.ravel())) <= 1e-10 * np.linalg.norm(cand)
        u = cand / np.linalg.norm(cand)
        assert np.all(generator_smallness(R3, b, u, signs=(1, 1, 1)) <= 100)


def test_not_orthonormal_base_rejected():
    with pytest.raises(NotOrthonormal):
        infinitesimal_space(R3, Basis([[2, 0, 0], [0, 1, 0], [0, 0, 1]]))


# -- scalar defect ---------------------------------------------------------------

def test_defect_zero_generator():
    assert scalar_defect(R3, np.zeros((3, 3)), [1, 2, 3], [0, 1, 0], 1e-4) == 0.0


def test_defect_eps_range():
    for eps in (0.0, 2e-3):
        with pytest.raises(ValueError):
            scalar_defect(R3, np.zeros((3, 3)), [1, 0, 0], [0, 1, 0], eps)


def test_euclidean_isometry_rate_vanishes():
    a = np.array([[0, 1, -2], [-1, 0, 0.5], [2, -0.5, 0]])
    gen = stream(0, "defect-e")
    for _ in range(10):
        r = defect_rate(euclidean(3), a, gen.standard_normal(3), gen.standard_normal(3))
        assert abs(r.rate) <= 1e-8 and r.converged


# pinned: largest rate over the generators at the SEED_A basis, x and y from stream "defect-r3"
def test_ratio3_defect_nonzero():
    space = infinitesimal_space(R3, _basis(R3, SEED_A))
    gen = stream(0, "defect-r3")
    x, y = gen.standard_normal(3), gen.standard_normal(3)
    rates = [defect_rate(R3, a, x, y) for a in space.generators]
    assert all(r.converged for r in rates)
    assert max(abs(r.rate) for r in rates) > 1e-6
    assert max(abs(r.rate) for r in rates) == pytest.approx(PINNED_RATE, rel=1e-6)


PINNED_RATE = 0.016485506193486543
