import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow import flows as fl
from geoflow import geometry as geo
from geoflow import matcore as mc
from geoflow.checks import rand_gl, rand_orth, rand_spd, rand_spd_separated
from geoflow.errors import ConfigurationError, DomainError, FlowDivergenceError
from geoflow.fixtures import paper_polar, paper_qr

SIGMA1 = np.array([[10.0, -5.0], [-5.0, 5.0]])
P_INF = np.array([[3.0, -1.0], [-1.0, 2.0]])


# ---------------------------------------------------------------- configuration

def test_flow_config_validation():
    with pytest.raises(ConfigurationError):
        fl.FlowConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        fl.FlowConfig(max_steps=0)
    with pytest.raises(ConfigurationError):
        fl.FlowConfig(grad_tol=0.0)
    with pytest.raises(ConfigurationError):
        fl.FlowConfig(integrator="euler")
    assert fl.FlowConfig(integrator="lie-euler").integrator is fl.Integrator.LIE_EULER


# ---------------------------------------------------------------- right-hand sides

def test_vertical_generator_examples(rng):
    assert np.allclose(fl.vertical_generator(SIGMA1, P_INF), 0.0, atol=1e-14)
    B = rand_gl(rng, 3)
    Binv = np.linalg.inv(B)
    assert np.allclose(fl.vertical_generator(np.eye(3), B), Binv - Binv.T, atol=1e-13)
    S1 = rand_spd(rng, 3)
    Om = fl.vertical_generator(S1, B)
    assert np.linalg.norm(Om @ S1 + S1 @ Om.T) <= 1e-9
    assert np.allclose(fl.rhs_polar_vertical(S1, B), Om @ B)


def test_vertical_generator_nonzero_at_example_start():
    A = paper_polar()["A"]
    assert np.linalg.norm(fl.vertical_generator(SIGMA1, A)) > 0.1


def test_rhs_polar_lifted_examples(rng):
    assert np.allclose(fl.rhs_polar_lifted(np.eye(2), SIGMA1, P_INF), 0.0, atol=1e-14)
    assert np.allclose(fl.rhs_polar_lifted(np.eye(2), np.eye(2), 2 * np.eye(2)), -1.5 * np.eye(2))
    S0 = np.diag([1.0, 2.0])
    P = rand_spd(rng, 2)
    out = fl.rhs_polar_lifted(S0, rand_spd(rng, 2), P)
    assert np.abs(out - out.T).max() <= 1e-12
    S1 = rand_spd(rng, 2)
    P = geo.w_monge_ampere_solve(S0, S1)
    assert np.allclose(fl.rhs_polar_lifted(S0, S1, P), 0.0, atol=1e-12)


def test_rhs_polar_lifted_general_matches_gradient_projection(rng):
    # for Sigma0 = I the general path and the simple equation coincide
    S1, P = rand_spd(rng, 3), rand_spd(rng, 3)
    simple = np.linalg.inv(P) - 0.5 * (np.linalg.solve(S1, P) + P @ np.linalg.inv(S1))
    assert np.allclose(fl.rhs_polar_lifted(np.eye(3), S1, P), simple, atol=1e-13)


def test_rhs_entropy_sym_examples(rng):
    S1 = rand_spd(rng, 3)
    assert np.allclose(fl.rhs_entropy_sym(S1, S1), 0.0, atol=1e-14)
    assert np.allclose(fl.rhs_entropy_sym(0.5 * np.eye(2), np.eye(2)), -2 * np.eye(2))


def test_entropy_sym_flow_converges(rng):
    S1, S0 = rand_spd(rng, 3), rand_spd(rng, 3)
    traj = fl.integrate(fl.entropy_sym_flow(S1), S0, fl.FlowConfig(dt=0.05, grad_tol=1e-11))
    assert traj.converged
    assert np.linalg.norm(traj.final - S1) <= 1e-8


def test_rhs_entropy_fr_examples(rng):
    W1 = rand_spd(rng, 3)
    assert np.array_equal(fl.rhs_entropy_fr(W1, W1), np.zeros((3, 3)))
    for t in (0.5, 2.0):
        assert np.allclose(fl.entropy_fr_exact(W1, 3 * W1, t), (1 + 2 * np.exp(-t)) * W1)
    cfg = fl.FlowConfig(dt=0.01, max_steps=200, grad_tol=1e-300, record_every=200)
    traj = fl.integrate(fl.entropy_fr_flow(W1), 3 * W1, cfg)
    assert np.allclose(traj.final, (1 + 2 * np.exp(-2.0)) * W1, rtol=1e-10)


def test_rhs_qr_examples():
    assert np.array_equal(fl.rhs_qr_lifted(np.eye(2), np.eye(2)), np.zeros((2, 2)))
    R = np.array([[3.0, -1.0], [0.0, 2.0]])
    assert np.allclose(fl.rhs_qr_lifted(R.T @ R, R), 0.0, atol=1e-14)
    assert np.allclose(fl.rhs_qr_lifted(np.diag([4.0, 1.0]), np.eye(2)), np.diag([1.5, 0.0]))


def test_rhs_qr_is_upper_triangular(rng):
    W1 = rand_spd(rng, 4)
    R = np.triu(rng.normal(size=(4, 4)), 1) + np.diag(rng.uniform(0.5, 2.0, 4))
    assert np.array_equal(np.tril(fl.rhs_qr_lifted(W1, R), -1), np.zeros((4, 4)))
    with pytest.raises(DomainError):
        fl.rhs_qr_lifted(W1, np.zeros((4, 4)))


def test_rhs_brockett_examples(rng):
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(fl.rhs_brockett(M, [1.0, 2.0], np.eye(2)), [[0.0, 1.0], [-1.0, 0.0]])
    W = rand_spd(rng, 3)
    Qe, _ = mc.oracle_eigh(W)
    assert np.allclose(fl.rhs_brockett(W, [1.0, 2.0, 3.0], Qe.T), 0.0, atol=1e-13)
    Q = rand_orth(rng, 3)
    assert np.allclose(fl.rhs_brockett(W, [2.0, 2.0, 2.0], Q), 0.0, atol=1e-14)
    X = Q.T @ fl.rhs_brockett(W, [1.0, 2.0, 3.0], Q)
    assert np.allclose(X, -X.T, atol=1e-13)


def test_pullback_is_half_brockett(rng):
    for n in (2, 3, 5):
        M, Q = rand_spd(rng, n), rand_orth(rng, n)
        N = np.arange(1.0, n + 1.0)
        assert np.allclose(fl.rhs_pullback_entropy_on(np.linalg.inv(M), N, Q),
                           0.5 * fl.rhs_brockett(M, N, Q), atol=1e-13)
        assert np.allclose(fl.rhs_pullback_entropy_on(M, 3.0 * np.ones(n), Q), 0.0, atol=1e-14)


def test_brockett_and_pullback_trajectories_agree_after_reparametrisation(rng):
    M = rand_spd_separated(rng, 3)
    N = np.array([1.0, 2.0, 3.0])
    cfg = fl.FlowConfig(dt=0.01, max_steps=200, grad_tol=1e-300, integrator="lie-euler")
    a = fl.integrate(fl.brockett_flow(M, N), np.eye(3), cfg)
    cfg2 = fl.FlowConfig(dt=0.02, max_steps=200, grad_tol=1e-300, integrator="lie-euler")
    b = fl.integrate(fl.pullback_entropy_flow(np.linalg.inv(M), N), np.eye(3), cfg2)
    assert np.allclose(b.times, 2 * a.times)
    assert np.abs(a.states - b.states).max() <= 1e-10


def test_rhs_double_bracket_examples():
    assert np.array_equal(fl.rhs_double_bracket([1.0, 2.0], np.diag([3.0, 4.0])), np.zeros((2, 2)))
    out = fl.rhs_double_bracket([1.0, 2.0], np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(out, [[-1.0, 0.0], [0.0, 1.0]])


def test_diagonal_state_stays_diagonal():
    flow = fl.double_bracket_flow([1.0, 2.0, 3.0])
    traj = fl.integrate(flow, np.diag([3.0, 1.0, 2.0]), fl.FlowConfig(dt=0.01, max_steps=10))
    assert len(traj) == 1 and traj.converged
    assert np.array_equal(traj.final, np.diag([3.0, 1.0, 2.0]))


def test_rhs_orbit_entropy_is_symmetric_and_isospectral(rng):
    W = rand_spd(rng, 3)
    out = fl.rhs_orbit_entropy_fr([1.0, 2.0, 3.0], W)
    assert np.allclose(out, out.T)
    # tangent to the orbit: trace of every power of W is stationary
    assert abs(np.trace(out)) <= 1e-12
    assert abs(np.trace(W @ out)) <= 1e-12


def test_rhs_horizontal_diag_examples():
    p1 = mc.MonicPoly.from_roots([0.5, 1.0, 5.0])
    assert np.allclose(fl.rhs_horizontal_diag(p1, [0.5, 1.0, 5.0]), 0.0, atol=1e-12)
    # n = 1: lambda' = -lambda^2 (lambda - r)
    r, lam = 2.0, 3.0
    assert fl.rhs_horizontal_diag(mc.MonicPoly.from_roots([r]), [lam]) == pytest.approx([-lam**2 * (lam - r)])
    out = fl.rhs_horizontal_diag(p1, [1.5, 1.5, 2.0])
    assert out[0] == out[1]


def test_geometric_initial_diag():
    p1 = mc.MonicPoly.from_roots([0.5, 1.0, 5.0])
    lam0 = fl.geometric_initial_diag(p1)
    assert np.allclose(lam0, 2.5 ** (np.arange(3) / 3))
    assert np.prod(lam0) == pytest.approx(2.5 ** (1.0))  # matches det only for n = 3
    tm = fl.geometric_initial_diag(p1, match_trace=True)
    assert np.prod(tm) == pytest.approx(2.5) and np.sum(tm) == pytest.approx(6.5)
    assert np.all(np.diff(tm) > 0)


# ---------------------------------------------------------------- integrate

def test_integrate_zero_rhs_stops_immediately():
    traj = fl.integrate(lambda x: np.zeros_like(x), np.eye(2), fl.FlowConfig())
    assert len(traj) == 1 and traj.steps == 0 and traj.converged


def test_rk4_single_step_value():
    # the classical tableau applied to x' = -x, h = 0.1 gives 72387/80000
    cfg = fl.FlowConfig(dt=0.1, max_steps=1, grad_tol=1e-300)
    traj = fl.integrate(lambda x: -x, np.array([[1.0]]), cfg)
    assert traj.final[0, 0] == pytest.approx(72387 / 80000, rel=1e-15)
    assert abs(traj.final[0, 0] - np.exp(-0.1)) < 1e-7


def test_lie_euler_zero_generator_is_identity_step():
    flow = fl.polar_vertical_flow(SIGMA1)
    cfg = fl.FlowConfig(dt=0.1, max_steps=1, grad_tol=1e-300, integrator="lie-euler")
    traj = fl.integrate(flow, P_INF, cfg)
    assert np.allclose(traj.final, P_INF, atol=1e-15)


def test_lie_euler_requires_generator():
    cfg = fl.FlowConfig(integrator="lie-euler")
    with pytest.raises(ConfigurationError):
        fl.integrate(lambda x: -x, np.eye(2), cfg)


def test_divergence_names_the_step():
    flow = fl.qr_flow(np.array([[9.0, -3.0], [-3.0, 5.0]]))
    with pytest.raises(FlowDivergenceError) as info:
        fl.integrate(flow, np.eye(2), fl.FlowConfig(dt=50.0, max_steps=10))
    assert info.value.step >= 1
    assert "step" in str(info.value)


def test_trajectory_bookkeeping():
    flow = fl.qr_flow(paper_qr()["W1"])
    traj = fl.integrate(flow, np.eye(2), fl.FlowConfig(dt=0.1, record_every=7))
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[-1] == pytest.approx(traj.steps * 0.1)
    assert len(traj.functional) == len(traj.dist2) == len(traj.rhs_norm) == len(traj)
    assert traj.rhs_norm[-1] <= 1e-10
    assert np.all(np.tril(traj.states, -1) == 0.0)
    assert np.all(np.diagonal(traj.states, axis1=1, axis2=2) > 0)


def test_vertical_flow_preserves_the_fibre():
    fx = paper_polar()
    cfg = fl.FlowConfig(dt=0.1, integrator="lie-euler", max_steps=2000)
    traj = fl.integrate(fl.polar_vertical_flow(SIGMA1), fx["A"], cfg)
    drift = max(np.linalg.norm(B @ B.T - SIGMA1) for B in traj.states)
    assert drift <= 1e-6 * np.linalg.norm(SIGMA1)
    assert traj.extra["max_drift"] <= 1e-6


def test_lifted_flow_general_sigma0_converges(rng):
    S0, S1 = rand_spd(rng, 3), rand_spd(rng, 3)
    traj = fl.integrate(fl.polar_lifted_flow(S1, S0), np.eye(3), fl.FlowConfig(dt=0.05, grad_tol=1e-11))
    assert traj.converged
    P = traj.final
    assert np.linalg.norm(P @ S0 @ P - S1) <= 1e-8 * np.linalg.norm(S1)
    assert np.abs(P - P.T).max() <= 1e-9


def test_orthogonal_flows_stay_orthogonal_under_rk4(rng):
    M = rand_spd_separated(rng, 4)
    cfg = fl.FlowConfig(dt=0.05, max_steps=300, grad_tol=1e-300, record_every=50)
    traj = fl.integrate(fl.brockett_flow(M, [1.0, 2.0, 3.0, 4.0]), np.eye(4), cfg)
    for Q in traj.states:
        assert np.linalg.norm(Q.T @ Q - np.eye(4)) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_double_bracket_isospectral_short_run(seed):
    rng = np.random.default_rng(seed)
    S = rand_spd(rng, 4)
    cfg = fl.FlowConfig(dt=1e-3, max_steps=200, grad_tol=1e-300, record_every=50)
    traj = fl.integrate(fl.double_bracket_flow([1.0, 2.0, 3.0, 4.0]), S, cfg)
    c0 = np.array(mc.charpoly(S).coeffs)
    c1 = np.array(mc.charpoly(traj.final).coeffs)
    assert np.all(np.abs(c1 - c0) <= 1e-8 * np.abs(c0))
