import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow import matcore as mc
from geoflow.checks import rand_gl, rand_spd, rand_sym
from geoflow.errors import DimensionError, DomainError, MagnitudeOverflowError, SingularError

# ---------------------------------------------------------------- validation


def test_as_square_rejects_non_square_and_non_finite():
    with pytest.raises(DimensionError):
        mc.as_square(np.ones((2, 3)))
    with pytest.raises(DomainError):
        mc.as_square(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_as_spd_names_the_invariant():
    with pytest.raises(DomainError) as info:
        mc.as_spd([[1.0, 2.0], [0.0, 1.0]], "W")
    assert info.value.invariant == "symmetric"
    with pytest.raises(DomainError) as info:
        mc.as_spd([[1.0, 0.0], [0.0, -1.0]], "W")
    assert info.value.invariant == "positive definite"


def test_as_invertible_raises_singular():
    with pytest.raises(SingularError):
        mc.as_invertible([[1.0, 2.0], [2.0, 4.0]])


def test_upper_tri_and_diag_validators():
    mc.as_upper_tri_pos([[1.0, 5.0], [0.0, 2.0]])
    with pytest.raises(DomainError):
        mc.as_upper_tri_pos([[1.0, 0.0], [1e-30, 2.0]])
    with pytest.raises(DomainError):
        mc.as_upper_tri_pos([[1.0, 0.0], [0.0, -2.0]])
    assert np.array_equal(mc.as_diag_pos(np.diag([1.0, 2.0])), [1.0, 2.0])
    with pytest.raises(DomainError):
        mc.as_diag_pos([1.0, 0.0])


# ---------------------------------------------------------------- expm / logm

def test_expm_examples():
    assert np.array_equal(mc.expm(np.zeros((2, 2))), np.eye(2))
    assert np.allclose(mc.expm(np.diag([1.0, -1.0])), np.diag([np.e, 1 / np.e]), rtol=1e-14)
    c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
    R = mc.expm(np.array([[0.0, np.pi / 3], [-np.pi / 3, 0.0]]))
    assert np.allclose(R, [[c, s], [-s, c]], atol=1e-14)


def test_expm_symmetric_input_gives_spd():
    rng = np.random.default_rng(1)
    E = mc.expm(rand_sym(rng, 4))
    assert mc.is_symmetric(E)
    assert np.linalg.eigvalsh(E).min() > 0


def test_expm_keeps_tiny_skew_part():
    # a nearly symmetric generator must not be routed through the symmetric path
    xi = 1e-11 * np.array([[0.0, 1.0], [-1.0, 0.0]])
    E = mc.expm(xi)
    assert E[0, 1] == pytest.approx(1e-11, rel=1e-6)
    assert E[1, 0] == pytest.approx(-1e-11, rel=1e-6)


def test_expm_overflow():
    with pytest.raises(MagnitudeOverflowError):
        mc.expm(np.diag([1000.0, 0.0]))


def test_logm_examples():
    assert np.array_equal(mc.logm_spd(np.eye(3)), np.zeros((3, 3)))
    assert np.allclose(mc.logm_spd(np.diag([np.e**2, 1.0])), np.diag([2.0, 0.0]), atol=1e-14)
    W = np.array([[10.0, -5.0], [-5.0, 5.0]])
    assert np.linalg.norm(mc.expm(mc.logm_spd(W)) - W) <= 1e-10 * np.linalg.norm(W)


def test_logm_rejects_non_spd():
    with pytest.raises(DomainError):
        mc.logm_spd(np.diag([1.0, -1.0]))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_expm_logm_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    M = rand_sym(rng, n)
    M *= 5.0 / max(np.linalg.norm(M), 5.0)
    assert np.linalg.norm(mc.logm_spd(mc.expm(M)) - M) <= 1e-8


def test_sqrtm_and_powm():
    W = np.array([[10.0, -5.0], [-5.0, 5.0]])
    S = mc.sqrtm_spd(W)
    assert np.allclose(S, [[3.0, -1.0], [-1.0, 2.0]], atol=1e-13)
    assert np.allclose(mc.powm_spd(W, -0.5) @ S, np.eye(2), atol=1e-13)


# ---------------------------------------------------------------- Lyapunov / Sylvester

def test_lyapunov_examples():
    RHS = np.array([[2.0, 4.0], [4.0, 6.0]])
    assert np.allclose(mc.solve_lyapunov(np.eye(2), RHS), [[1.0, 2.0], [2.0, 3.0]], atol=1e-14)
    assert np.allclose(mc.solve_lyapunov(np.diag([1.0, 3.0]), RHS), np.ones((2, 2)), atol=1e-14)
    assert np.array_equal(mc.solve_lyapunov(np.diag([1.0, 3.0]), np.zeros((2, 2))), np.zeros((2, 2)))


def test_lyapunov_rejects_indefinite_coefficient():
    with pytest.raises(DomainError):
        mc.solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
def test_lyapunov_residual(seed, n):
    rng = np.random.default_rng(seed)
    C, RHS = rand_spd(rng, n), rand_sym(rng, n)
    S = mc.solve_lyapunov(C, RHS)
    assert np.linalg.norm(S @ C + C @ S - RHS) <= 1e-10 * np.linalg.norm(RHS)
    assert mc.is_symmetric(S)


def test_sylvester_examples():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(3, 3))
    assert np.allclose(mc.solve_sylvester_commutator(np.eye(3), M), M / 2, atol=1e-15)
    V = mc.solve_sylvester_commutator(np.diag([1.0, 2.0]), np.array([[0.0, 3.0], [3.0, 0.0]]))
    assert np.allclose(V, [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)
    K = mc.skew(M)
    VK = mc.solve_sylvester_commutator(np.eye(3), K)
    assert np.allclose(VK, -VK.T, atol=1e-15)


def test_sylvester_residual_general_rhs():
    rng = np.random.default_rng(3)
    C, RHS = rand_spd(rng, 5), rng.normal(size=(5, 5))
    V = mc.solve_sylvester_commutator(C, RHS)
    assert np.linalg.norm(C @ V + V @ C - RHS) <= 1e-10 * np.linalg.norm(RHS)


# ---------------------------------------------------------------- polynomials

def test_charpoly_examples():
    assert mc.charpoly(np.diag([1.0, 2.0])).coeffs == pytest.approx((2.0, -3.0))
    assert mc.charpoly(np.array([[2.0, 1.0], [1.0, 2.0]])).coeffs == pytest.approx((3.0, -4.0))
    assert mc.charpoly(np.eye(3)).coeffs == pytest.approx((-1.0, 3.0, -3.0))


def test_monic_poly_roundtrip():
    p = mc.MonicPoly.from_roots([0.5, 1.0, 5.0])
    assert p.degree == 3
    assert np.allclose(p.roots(), [0.5, 1.0, 5.0])
    assert p(5.0) == pytest.approx(0.0, abs=1e-12)
    assert np.array_equal(p.full_coeffs()[-1:], [1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_charpoly_matches_elementary_symmetric_polynomials(seed, n):
    rng = np.random.default_rng(seed)
    W = rand_spd(rng, n)
    lam = mc.oracle_eigh(W)[1]
    # e_k by brute-force expansion of the subsets
    from itertools import combinations
    expected = []
    for k in range(n, 0, -1):
        e_k = sum(np.prod(c) for c in combinations(lam, k))
        expected.append((-1) ** k * e_k)
    got = np.array(mc.charpoly(W).coeffs)
    assert np.allclose(got, expected, rtol=1e-9, atol=1e-12)


# ---------------------------------------------------------------- oracles

def test_oracle_polar_examples():
    c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
    Q = np.array([[c, -s], [s, c]])
    P, Qo = mc.oracle_polar(Q)
    assert np.allclose(P, np.eye(2), atol=1e-14) and np.allclose(Qo, Q, atol=1e-14)
    Pinf = np.array([[3.0, -1.0], [-1.0, 2.0]])
    P, Qo = mc.oracle_polar(Pinf @ Q)
    assert np.allclose(P, Pinf, atol=1e-13) and np.allclose(Qo, Q, atol=1e-13)
    P, Qo = mc.oracle_polar(np.diag([2.0, 3.0]))
    assert np.allclose(P, np.diag([2.0, 3.0])) and np.allclose(Qo, np.eye(2))


def test_oracle_qr_cholesky_eigh_examples():
    Q, R = mc.oracle_qr(np.eye(3))
    assert np.allclose(Q, np.eye(3)) and np.allclose(R, np.eye(3))
    assert np.allclose(mc.oracle_cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    _, lam = mc.oracle_eigh(np.array([[10.0, -5.0], [-5.0, 5.0]]))
    r5 = np.sqrt(5.0)
    assert np.allclose(lam, [(15 - 5 * r5) / 2, (15 + 5 * r5) / 2], rtol=1e-14)


def test_oracle_residuals():
    rng = np.random.default_rng(4)
    for n in (2, 3, 5, 8):
        A, W = rand_gl(rng, n), rand_spd(rng, n)
        P, Q = mc.oracle_polar(A)
        assert np.linalg.norm(A - P @ Q) <= 1e-10 * np.linalg.norm(A)
        Q, R = mc.oracle_qr(A)
        assert np.all(np.diag(R) > 0) and np.allclose(np.tril(R, -1), 0.0)
        assert np.linalg.norm(A - Q @ R) <= 1e-10 * np.linalg.norm(A)
        L = mc.oracle_cholesky(W)
        assert np.linalg.norm(W - L @ L.T) <= 1e-10 * np.linalg.norm(W)
        Qe, lam = mc.oracle_eigh(W)
        assert np.all(np.diff(lam) >= 0)
        assert np.linalg.norm(W - Qe.T @ np.diag(lam) @ Qe) <= 1e-10 * np.linalg.norm(W)


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        mc.check_same_shape(np.eye(2), np.eye(3))
