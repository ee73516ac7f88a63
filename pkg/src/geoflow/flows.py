"""Gradient-flow right-hand sides, fixed-step integrators and trajectories.

Each flow is described by a :class:`Flow`: a right-hand side, the kind of
state it evolves (symmetric, upper triangular, orthogonal, positive diagonal
or general), an optional monitored functional and distance to a known limit,
and, for flows that live on a group orbit, the Lie-algebra generator used by
the Lie-Euler method.

:func:`integrate` advances a state with classical RK4 or Lie-Euler, stopping
as soon as the Frobenius norm of the right-hand side drops below
``FlowConfig.grad_tol``.

Examples
--------
>>> import numpy as np
>>> from geoflow import flows
>>> f = flows.entropy_fr_flow(np.eye(2))
>>> traj = flows.integrate(f, 3 * np.eye(2), flows.FlowConfig(dt=0.01, max_steps=10))
>>> traj.steps
10
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import entropy as ent
from . import matcore as mc
from .errors import (
    ConfigurationError,
    DimensionError,
    FlowDivergenceError,
    GeoflowError,
)
from .geometry import fr_distance2_unchecked, w_monge_ampere_solve


class Integrator(str, enum.Enum):
    RK4 = "rk4"
    LIE_EULER = "lie-euler"


@dataclass(frozen=True)
class FlowConfig:
    """Fixed-step integration settings.

    Parameters
    ----------
    dt : float
        Time step.
    max_steps : int
        Step budget.
    grad_tol : float
        Stop once ``||rhs||_F <= grad_tol``.
    integrator : Integrator or str
        ``"rk4"`` or ``"lie-euler"``.
    record_every : int
        Sampling stride for the stored trajectory; the first and last states
        are always stored.
    drift_tol : float
        Allowed violation of the state-space invariants before the run is
        aborted with :class:`~geoflow.errors.FlowDivergenceError`.
    """

    dt: float = 0.1
    max_steps: int = 100_000
    grad_tol: float = 1e-10
    integrator: Integrator = Integrator.RK4
    record_every: int = 1
    drift_tol: float = 1e-6

    def __post_init__(self):
        try:
            object.__setattr__(self, "integrator", Integrator(self.integrator))
        except ValueError:
            raise ConfigurationError(f"unknown integrator {self.integrator!r}") from None
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("dt must be positive")
        if int(self.max_steps) < 1:
            raise ConfigurationError("max_steps must be >= 1")
        if not self.grad_tol > 0:
            raise ConfigurationError("grad_tol must be positive")
        if int(self.record_every) < 1:
            raise ConfigurationError("record_every must be >= 1")
        if not self.drift_tol > 0:
            raise ConfigurationError("drift_tol must be positive")
        object.__setattr__(self, "max_steps", int(self.max_steps))
        object.__setattr__(self, "record_every", int(self.record_every))


STATE_KINDS = ("sym", "triu", "orth", "diag", "general")


@dataclass
class Flow:
    """A gradient flow together with what is monitored along it.

    ``generator(x)`` returns the Lie-algebra element used by Lie-Euler and
    ``lie_action`` says how it acts: ``"left"`` (``x <- exp(dt g) x``),
    ``"right"`` (``x <- x exp(dt g)``) or ``"conj"``
    (``x <- exp(-dt g) x exp(dt g)``).
    """

    name: str
    rhs: Callable[[np.ndarray], np.ndarray]
    kind: str = "general"
    functional: Optional[Callable[[np.ndarray], float]] = None
    dist2: Optional[Callable[[np.ndarray], float]] = None
    limit: Optional[np.ndarray] = None
    invariant: Optional[Callable[[np.ndarray], float]] = None
    generator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lie_action: str = "left"

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ConfigurationError(f"unknown state kind {self.kind!r}")


@dataclass
class Trajectory:
    """Sampled states of an integrated flow with per-sample diagnostics."""

    flow: str
    times: np.ndarray
    states: np.ndarray
    functional: np.ndarray
    dist2: np.ndarray
    rhs_norm: np.ndarray
    converged: bool
    steps: int
    dt: float
    integrator: str
    extra: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return len(self.times)


# --------------------------------------------------------------------------
# right-hand sides (validated public forms)
# --------------------------------------------------------------------------

def _vertical_generator(S1, B):
    Bi = np.linalg.inv(B)
    return mc._anticommutator_solve(S1, 2.0 * S1 @ (Bi - Bi.T))


def vertical_generator(Sigma1, B) -> np.ndarray:
    """Reduced velocity ``Omega = B_dot B^-1`` of the vertical polar flow.

    Solves ``Sigma1 Omega + Omega Sigma1 = 2 Sigma1 (B^-1 - B^-T)``; the
    solution satisfies ``Omega Sigma1 + Sigma1 Omega^T = 0``, so the flow stays
    on the fibre ``{B : B Sigma0 B^T = Sigma1}``.
    """
    S1 = mc.as_spd(Sigma1, "Sigma1")
    B = mc.as_invertible(B, "B")
    mc.check_same_shape(S1, B)
    return _vertical_generator(S1, B)


def rhs_polar_vertical(Sigma1, B) -> np.ndarray:
    """``B_dot = Omega B``; see :func:`vertical_generator`."""
    B = mc.as_invertible(B, "B")
    return vertical_generator(Sigma1, B) @ B


def _polar_lifted_identity(S1i, P):
    X = S1i @ P
    return mc.sym(np.linalg.inv(P) - 0.5 * (X + X.T))


def _polar_lifted_general(S0, S0i, S1i, P):
    Pi = np.linalg.inv(P)
    rhs = S0 @ (S0i @ Pi - Pi @ S0i + S1i @ P - P @ S1i)
    V = mc._anticommutator_solve(S0, rhs)
    return mc.sym(Pi @ S0i - S1i @ P + V)


def rhs_polar_lifted(Sigma0, Sigma1, P) -> np.ndarray:
    """Lifted entropy flow on the SPD cone, converging to ``P Sigma0 P = Sigma1``.

    For ``Sigma0 = I`` this is ``P^-1 - (Sigma1^-1 P + P Sigma1^-1)/2``.
    Otherwise ``P^-1 Sigma0^-1 - Sigma1^-1 P + V`` with the correction ``V``
    solving ``Sigma0 V + V Sigma0 = Sigma0 (Sigma0^-1 P^-1 - P^-1 Sigma0^-1
    + Sigma1^-1 P - P Sigma1^-1)``, which makes the velocity symmetric.
    """
    S0 = mc.as_spd(Sigma0, "Sigma0")
    S1 = mc.as_spd(Sigma1, "Sigma1")
    P = mc.as_invertible(mc.as_symmetric(P, "P"), "P")
    mc.check_same_shape(S0, S1, P)
    S1i = mc.inv(S1)
    if np.array_equal(S0, np.eye(S0.shape[0])):
        return _polar_lifted_identity(S1i, P)
    return _polar_lifted_general(S0, mc.inv(S0), S1i, P)


def rhs_entropy_sym(Sigma1, Sigma) -> np.ndarray:
    """``2I - Sigma1^-1 Sigma - Sigma Sigma1^-1``."""
    return ent.grad_entropy_sym_wasserstein(Sigma, Sigma1)


def rhs_entropy_fr(W1, W) -> np.ndarray:
    """``W1 - W``; exact solution ``W1 + exp(-t) (W(0) - W1)``."""
    return ent.grad_entropy_w_fisherrao(W, W1)


def entropy_fr_exact(W1, W0, t) -> np.ndarray:
    return W1 + np.exp(-t) * (np.asarray(W0, dtype=float) - W1)


def _qr_rhs(W1, R):
    n = R.shape[0]
    Ri = np.linalg.inv(R)
    X = Ri.T @ W1 @ Ri - np.eye(n)
    Y = np.triu(X)
    Y[np.diag_indices(n)] *= 0.5
    return np.triu(Y @ R)


def rhs_qr_lifted(W1, R) -> np.ndarray:
    """``(u - d/2)(R^-T W1 R^-1 - I) R``; strictly lower part exactly zero."""
    R = mc.as_upper_tri_pos(R, "R")
    W1 = mc.as_spd(W1, "W1")
    mc.check_same_shape(R, W1)
    return _qr_rhs(W1, R)


def rhs_brockett(M, N, Q) -> np.ndarray:
    """``-Q (N Q^T M Q - Q^T M Q N)``."""
    return -ent.grad_brockett(M, N, Q)


def rhs_pullback_entropy_on(W1, N, Q) -> np.ndarray:
    """``-(1/2) Q [N, Gamma(Q)^-1]`` with ``Gamma(Q) = Q^T W1 Q``."""
    return ent.grad_pullback_entropy_on(W1, N, Q)


def _double_bracket(Nd, S):
    C = S @ Nd - Nd @ S
    return mc.sym(0.5 * (S @ C - C @ S))


def rhs_double_bracket(N, Sigma) -> np.ndarray:
    """``(1/2) [Sigma, [Sigma, N]]``."""
    Nd = np.diag(mc.as_diag_pos(N, "N"))
    S = mc.as_symmetric(Sigma, "Sigma")
    mc.check_same_shape(Nd, S)
    return _double_bracket(Nd, S)


def rhs_orbit_entropy_fr(N, W) -> np.ndarray:
    """Entropy flow restricted to an orbit, ``(1/2) [W, [W^-1, N]]``."""
    Nd = np.diag(mc.as_diag_pos(N, "N"))
    W = mc.as_spd(W, "W")
    C = mc.commutator(mc.inv(W), Nd)
    return mc.sym(0.5 * mc.commutator(W, C))


def rhs_horizontal_diag(p1, Lambda) -> np.ndarray:
    """``-Lambda^2 Y(Lambda)`` on the diagonal entries."""
    lam = mc.as_diag_pos(Lambda, "Lambda")
    return -lam**2 * ent.poly_misfit_y(p1, lam)


# --------------------------------------------------------------------------
# flow constructors
# --------------------------------------------------------------------------

_H = ent.relative_entropy_unchecked


def _orth_defect(Q):
    return float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))))


def polar_vertical_flow(Sigma1, Sigma0=None, limit=None) -> Flow:
    """Vertical flow on the fibre over ``Sigma1``; Lie-Euler keeps it there exactly."""
    S1 = mc.as_spd(Sigma1, "Sigma1")
    n = S1.shape[0]
    S0 = np.eye(n) if Sigma0 is None else mc.as_spd(Sigma0, "Sigma0")
    mc.check_same_shape(S0, S1)
    Pinf = w_monge_ampere_solve(S0, S1) if limit is None else np.asarray(limit, float)
    nrm = np.linalg.norm(S1)

    def dist2(B):
        D = B - Pinf
        return float(np.trace(S0 @ D.T @ D))

    return Flow(
        name="polar-vertical",
        rhs=lambda B: _vertical_generator(S1, B) @ B,
        kind="general",
        functional=lambda B: float(np.trace(S0 @ (B - np.eye(n)).T @ (B - np.eye(n)))),
        dist2=dist2,
        limit=Pinf,
        invariant=lambda B: float(np.linalg.norm(B @ S0 @ B.T - S1)) / nrm,
        generator=lambda B: _vertical_generator(S1, B),
        lie_action="left",
    )


def polar_lifted_flow(Sigma1, Sigma0=None) -> Flow:
    S1 = mc.as_spd(Sigma1, "Sigma1")
    n = S1.shape[0]
    S0 = np.eye(n) if Sigma0 is None else mc.as_spd(Sigma0, "Sigma0")
    mc.check_same_shape(S0, S1)
    S1i = mc.inv(S1)
    if np.array_equal(S0, np.eye(n)):
        rhs = lambda P: _polar_lifted_identity(S1i, P)  # noqa: E731
    else:
        S0i = mc.inv(S0)
        rhs = lambda P: _polar_lifted_general(S0, S0i, S1i, P)  # noqa: E731
    Pinf = w_monge_ampere_solve(S0, S1)

    def dist2(P):
        D = P - Pinf
        return float(np.trace(S0 @ D.T @ D))

    return Flow(
        name="polar-lifted",
        rhs=rhs,
        kind="sym",
        functional=lambda P: _H(mc.sym(P @ S0 @ P), S1),
        dist2=dist2,
        limit=Pinf,
    )


def entropy_sym_flow(Sigma1) -> Flow:
    S1 = mc.as_spd(Sigma1, "Sigma1")
    S1i = mc.inv(S1)
    I2 = 2.0 * np.eye(S1.shape[0])

    def rhs(S):
        X = S1i @ S
        return I2 - X - X.T

    return Flow(
        name="entropy-sym",
        rhs=rhs,
        kind="sym",
        functional=lambda S: _H(S, S1),
        dist2=lambda S: float(np.sum((S - S1) ** 2)),
        limit=S1,
    )


def entropy_fr_flow(W1) -> Flow:
    W1 = mc.as_spd(W1, "W1")
    return Flow(
        name="entropy-fr",
        rhs=lambda W: W1 - W,
        kind="sym",
        functional=lambda W: _H(W1, W),
        dist2=lambda W: fr_distance2_unchecked(W, W1),
        limit=W1,
    )


def qr_flow(W1) -> Flow:
    """Lifted entropy flow on the upper-triangular cone; limit is the Cholesky factor."""
    W1 = mc.as_spd(W1, "W1")
    Rinf = np.linalg.cholesky(W1).T
    return Flow(
        name="qr",
        rhs=lambda R: _qr_rhs(W1, R),
        kind="triu",
        functional=lambda R: _H(W1, mc.sym(R.T @ R)),
        dist2=lambda R: fr_distance2_unchecked(mc.sym(R.T @ R), W1),
        limit=Rinf,
    )


def brockett_flow(M, N) -> Flow:
    M = mc.as_symmetric(M, "M")
    Nd = np.diag(mc.as_diag_pos(N, "N"))
    mc.check_same_shape(M, Nd)

    def xi(Q):
        G = Q.T @ M @ Q
        return -(Nd @ G - G @ Nd)

    return Flow(
        name="brockett",
        rhs=lambda Q: Q @ xi(Q),
        kind="orth",
        functional=lambda Q: float(np.trace(Nd @ Q.T @ M @ Q)),
        invariant=_orth_defect,
        generator=xi,
        lie_action="right",
    )


def pullback_entropy_flow(W1, N) -> Flow:
    W1 = mc.as_spd(W1, "W1")
    Nd = np.diag(mc.as_diag_pos(N, "N"))
    mc.check_same_shape(W1, Nd)
    W1i = mc.inv(W1)

    def xi(Q):
        Gi = Q.T @ W1i @ Q
        return -0.5 * (Nd @ Gi - Gi @ Nd)

    return Flow(
        name="spectral",
        rhs=lambda Q: Q @ xi(Q),
        kind="orth",
        functional=lambda Q: _H(Nd, mc.sym(Q.T @ W1 @ Q)),
        invariant=_orth_defect,
        generator=xi,
        lie_action="right",
    )


def double_bracket_flow(N, Sigma1=None) -> Flow:
    Nd = np.diag(mc.as_diag_pos(N, "N"))

    def eta(S):
        # Sigma_dot = [Sigma, eta] with eta = [Sigma, N] / 2
        return 0.5 * (S @ Nd - Nd @ S)

    return Flow(
        name="double-bracket",
        rhs=lambda S: _double_bracket(Nd, S),
        kind="sym",
        functional=lambda S: _H(Nd, mc.sym(np.linalg.inv(S))),
        dist2=lambda S: float(np.sum(S**2) - np.sum(np.diag(S) ** 2)),
        generator=eta,
        lie_action="conj",
    )


def horizontal_diag_flow(p1, limit=None) -> Flow:
    target = ent.poly_target(p1)

    def rhs(lam):
        return -lam**2 * _y(target, lam)

    return Flow(
        name="eigen-horizontal",
        rhs=rhs,
        kind="diag",
        functional=lambda lam: ent.poly_misfit(target, lam),
        dist2=None if limit is None else (lambda lam: float(np.sum((lam - limit) ** 2))),
        limit=None if limit is None else np.asarray(limit, float),
    )


def _y(target, lam):
    r = target - mc.poly_from_roots(lam)[:-1]
    return np.array([mc.poly_from_roots(np.delete(lam, k)) @ r for k in range(lam.size)])


def geometric_initial_diag(p1, match_trace=False, trace=None) -> np.ndarray:
    """Ordered initial data for the horizontal eigenvalue flow.

    The default is the geometric sequence ``det^(k/n)``, ``k = 0..n-1``, with
    ``det = (-1)^n a_0``.  With ``match_trace`` the sequence ``c r^k`` is
    chosen instead so that both the determinant and the trace (``-a_{n-1}``
    unless given) agree with the target.
    """
    a = ent.poly_target(p1)
    n = a.size
    det = (-1) ** n * a[0]
    if det <= 0:
        raise ConfigurationError("target polynomial must have positive roots")
    k = np.arange(n, dtype=float)
    if not match_trace:
        return det ** (k / n)
    tr = -a[-1] if trace is None else float(trace)
    if n == 1:
        return np.array([det])

    def c_of(r):
        return np.exp((np.log(det) - np.log(r) * n * (n - 1) / 2) / n)

    def mismatch(logr):
        r = np.exp(logr)
        return np.log(c_of(r) * np.sum(r**k)) - np.log(tr)

    # AM-GM: the trace of the equal sequence r = 1 never exceeds the target
    if mismatch(0.0) >= 0:
        return np.full(n, det ** (1.0 / n))
    hi = 1.0
    while mismatch(hi) < 0:
        hi *= 2.0
    r = np.exp(brentq(mismatch, 0.0, hi, xtol=1e-15))
    return c_of(r) * r**k


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------

def _rk4_step(rhs, x, k1, dt):
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _lie_euler_step(flow, x, dt):
    g = flow.generator(x)
    if flow.lie_action == "left":
        return mc.expm(dt * g) @ x
    if flow.lie_action == "right":
        return x @ mc.expm(dt * g)
    E = mc.expm(dt * g)
    return E.T @ x @ E if np.allclose(g, -g.T) else np.linalg.solve(E, x @ E)


def _qr_retract(Q):
    q, r = np.linalg.qr(Q)
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def _project_state(kind, x):
    if kind == "sym":
        return mc.sym(x)
    if kind == "triu":
        return np.triu(x)
    return x


def _state_drift(kind, x):
    """Return a description of the violated invariant, or ``None``."""
    if not np.all(np.isfinite(x)):
        return "finite entries"
    if kind == "sym":
        try:
            np.linalg.cholesky(x)
        except np.linalg.LinAlgError:
            return "positive definiteness"
    elif kind == "triu":
        if np.any(np.diag(x) <= 0):
            return "positive diagonal"
    elif kind == "diag":
        if np.any(x <= 0):
            return "positive entries"
    return None


def _as_flow(flow):
    if isinstance(flow, Flow):
        return flow
    if callable(flow):
        return Flow(name="custom", rhs=flow)
    raise ConfigurationError("flow must be a Flow or a callable")


def integrate(flow, state0, config: FlowConfig | None = None) -> Trajectory:
    """Integrate ``flow`` from ``state0``.

    Stops at the first check where ``||rhs||_F <= config.grad_tol`` (the
    initial state is checked before any step, so an equilibrium gives a
    trajectory of length 1) or after ``config.max_steps`` steps.

    Raises
    ------
    FlowDivergenceError
        If the state leaves its state space (loses definiteness, positivity,
        orthogonality or a flow-specific invariant beyond ``drift_tol``).
    ConfigurationError
        If Lie-Euler is requested for a flow without a group generator.
    """
    flow = _as_flow(flow)
    cfg = FlowConfig() if config is None else config
    lie = cfg.integrator is Integrator.LIE_EULER
    if lie and flow.generator is None:
        raise ConfigurationError(f"flow {flow.name!r} has no Lie-Euler form; use rk4")
    x = np.array(state0, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    x0_shape = x.shape
    dt = float(cfg.dt)

    times, states, fvals, dvals, gnorms = [], [], [], [], []
    max_drift = 0.0

    def record(k, x, g):
        times.append(k * dt)
        states.append(x.copy())
        fvals.append(flow.functional(x) if flow.functional else np.nan)
        dvals.append(flow.dist2(x) if flow.dist2 else np.nan)
        gnorms.append(g)

    converged = False
    k = 0
    while True:
        try:
            f = flow.rhs(x)
        except (GeoflowError, np.linalg.LinAlgError) as exc:
            raise FlowDivergenceError(f"{flow.name}: right-hand side failed at step {k}: {exc}",
                                      step=k) from None
        if f.shape != x0_shape:
            raise DimensionError(f"rhs shape {f.shape} != state shape {x0_shape}")
        g = float(np.linalg.norm(f))
        if not np.isfinite(g):
            raise FlowDivergenceError(f"{flow.name}: non-finite velocity at step {k}", step=k)
        done = g <= cfg.grad_tol or k >= cfg.max_steps
        if k % cfg.record_every == 0 or done:
            record(k, x, g)
        if g <= cfg.grad_tol:
            converged = True
            break
        if k >= cfg.max_steps:
            break
        try:
            if lie:
                x_new = _lie_euler_step(flow, x, dt)
            else:
                x_new = _rk4_step(flow.rhs, x, f, dt)
        except (GeoflowError, np.linalg.LinAlgError) as exc:
            raise FlowDivergenceError(f"{flow.name}: step {k + 1} failed: {exc}",
                                      step=k + 1) from None
        if flow.kind == "orth" and not lie:
            x_new = _qr_retract(x_new)
        x = _project_state(flow.kind, x_new)
        k += 1
        bad = _state_drift(flow.kind, x)
        if bad:
            raise FlowDivergenceError(f"{flow.name}: state lost {bad} at step {k}", step=k)
        if flow.invariant is not None:
            d = flow.invariant(x)
            max_drift = max(max_drift, d)
            if d > cfg.drift_tol:
                raise FlowDivergenceError(
                    f"{flow.name}: invariant drift {d:.3e} exceeds {cfg.drift_tol:.1e} at step {k}",
                    step=k, drift=d)

    return Trajectory(
        flow=flow.name,
        times=np.asarray(times),
        states=np.asarray(states),
        functional=np.asarray(fvals, dtype=float),
        dist2=np.asarray(dvals, dtype=float),
        rhs_norm=np.asarray(gnorms),
        converged=converged,
        steps=k,
        dt=dt,
        integrator=cfg.integrator.value,
        extra={"max_drift": max_drift},
    )
