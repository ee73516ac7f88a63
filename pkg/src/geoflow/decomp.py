"""Matrix decompositions obtained as limits of gradient flows.

Every function integrates the corresponding flow to convergence, assembles
the factors from the limit and returns them together with the trajectory.
If the flow has not converged within the step budget a
:class:`~geoflow.errors.ConvergenceError` is raised carrying the final
gradient norm and the partial trajectory.

When ``config`` is omitted a step size is chosen from cheap norm bounds on
the stiffness of the flow and every tenth state is recorded; an explicit
config is used as is.

Ordering conventions
--------------------
``spectral_by_flow`` returns eigenvalues in the order selected by ``N``
(the flow sorts them against the diagonal of ``N``);
``eigenvalues_by_horizontal_flow`` returns them ascending.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple, Optional

import numpy as np

from . import flows as fl
from . import matcore as mc
from .errors import ConvergenceError, DomainError

AUTO_RECORD_EVERY = 10


class PolarResult(NamedTuple):
    P: np.ndarray
    Q: np.ndarray
    trajectory: fl.Trajectory


class QRResult(NamedTuple):
    Q: np.ndarray
    R: np.ndarray
    trajectory: fl.Trajectory


class CholeskyResult(NamedTuple):
    L: np.ndarray
    trajectory: fl.Trajectory


class SpectralResult(NamedTuple):
    Q: np.ndarray
    Lambda: np.ndarray
    trajectory: fl.Trajectory
    warning: Optional[str] = None


class EigenResult(NamedTuple):
    Lambda: np.ndarray
    trajectory: fl.Trajectory


class SVDResult(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    trajectory: fl.Trajectory


def _norm2(M):
    return float(np.linalg.norm(M, 2))


# --------------------------------------------------------------------------
# step-size heuristics
# --------------------------------------------------------------------------

def auto_config_polar(Sigma0, Sigma1, vertical=False) -> fl.FlowConfig:
    s0i = _norm2(mc.inv(Sigma0))
    s1i = _norm2(mc.inv(Sigma1))
    if vertical:
        stiff = 2.0 * s1i * _norm2(Sigma1) ** 0.5
        return fl.FlowConfig(dt=min(0.1, 1.0 / stiff), integrator="lie-euler",
                             record_every=AUTO_RECORD_EVERY)
    stiff = s0i * max(1.0, s1i * _norm2(Sigma0)) + s1i
    return fl.FlowConfig(dt=min(0.1, 1.0 / stiff), record_every=AUTO_RECORD_EVERY)


def auto_config_qr(W1) -> fl.FlowConfig:
    stiff = _norm2(W1) * max(1.0, _norm2(mc.inv(W1)))
    return fl.FlowConfig(dt=min(0.1, 2.0 / stiff), record_every=AUTO_RECORD_EVERY)


def auto_config_spectral(W, N) -> fl.FlowConfig:
    # linearised rates are (n_i - n_j)(mu_i - mu_j) / 2 with mu the spectrum of W^-1
    Ni = np.asarray(N, dtype=float)
    spread_n = float(Ni.max() - Ni.min()) or 1.0
    stiff = 0.5 * spread_n * _norm2(mc.inv(W))
    return fl.FlowConfig(dt=min(1.0, 1.0 / stiff), integrator="lie-euler",
                         record_every=AUTO_RECORD_EVERY)


def auto_config_brockett(M, N) -> fl.FlowConfig:
    # linearised rates are (n_i - n_j)(m_i - m_j) with m the spectrum of M
    Ni = np.asarray(N, dtype=float)
    spread_n = float(Ni.max() - Ni.min()) or 1.0
    m = np.linalg.eigvalsh(mc.sym(np.asarray(M, dtype=float)))
    spread_m = float(m[-1] - m[0]) or 1.0
    return fl.FlowConfig(dt=min(1.0, 1.0 / (spread_n * spread_m)), integrator="lie-euler",
                         record_every=AUTO_RECORD_EVERY)


def auto_config_horizontal(lam0) -> fl.FlowConfig:
    # no cheap stiffness bound is known for this flow; use the example step
    return fl.FlowConfig(dt=0.01, record_every=AUTO_RECORD_EVERY)


def _run(flow, state0, config):
    traj = fl.integrate(flow, state0, config)
    if not traj.converged:
        raise ConvergenceError(
            f"{flow.name} flow did not converge in {traj.steps} steps "
            f"(|rhs| = {traj.rhs_norm[-1]:.3e} > {config.grad_tol:.1e})",
            grad_norm=float(traj.rhs_norm[-1]), trajectory=traj)
    return traj


# --------------------------------------------------------------------------
# decompositions
# --------------------------------------------------------------------------

def polar_by_flow(A, Sigma0=None, config: fl.FlowConfig | None = None,
                  method: str = "lifted") -> PolarResult:
    """``A = P Q`` with ``P`` SPD and ``Q Sigma0 Q^T = Sigma0``.

    Parameters
    ----------
    A : array_like
        Invertible matrix.
    Sigma0 : array_like, optional
        Reference covariance (identity by default).
    config : FlowConfig, optional
    method : {"lifted", "vertical"}
        ``"lifted"`` integrates the lifted entropy flow from ``P(0) = I``.
        ``"vertical"`` integrates the vertical flow from ``B(0) = A`` along
        the fibre; it needs ``det A > 0``.

    Returns
    -------
    PolarResult
        ``(P, Q, trajectory)`` with ``Q = P^-1 A``.
    """
    A = mc.as_invertible(A, "A")
    n = A.shape[0]
    S0 = np.eye(n) if Sigma0 is None else mc.as_spd(Sigma0, "Sigma0")
    mc.check_same_shape(A, S0)
    S1 = mc.sym(A @ S0 @ A.T)
    if method == "lifted":
        cfg = config or auto_config_polar(S0, S1)
        traj = _run(fl.polar_lifted_flow(S1, S0), np.eye(n), cfg)
    elif method == "vertical":
        if np.linalg.det(A) <= 0:
            raise DomainError("the vertical flow needs det(A) > 0 (identity component)",
                              invariant="positive determinant")
        cfg = config or auto_config_polar(S0, S1, vertical=True)
        traj = _run(fl.polar_vertical_flow(S1, S0), A, cfg)
    else:
        raise ValueError(f"unknown polar method {method!r}")
    P = mc.sym(traj.final)
    return PolarResult(P, np.linalg.solve(P, A), traj)


def cholesky_by_flow(W, config: fl.FlowConfig | None = None) -> CholeskyResult:
    """``W = L L^T`` with ``L = R^T`` the limit of the upper-triangular flow."""
    W = mc.as_spd(W, "W")
    cfg = config or auto_config_qr(W)
    traj = _run(fl.qr_flow(W), np.eye(W.shape[0]), cfg)
    return CholeskyResult(traj.final.T.copy(), traj)


def qr_by_flow(A, config: fl.FlowConfig | None = None) -> QRResult:
    """``A = Q R`` with ``R`` upper triangular with positive diagonal.

    ``R`` is the limit of the upper-triangular flow targeting ``W1 = A^T A``;
    ``Q = A R^-1``.
    """
    A = mc.as_invertible(A, "A")
    W1 = mc.sym(A.T @ A)
    cfg = config or auto_config_qr(W1)
    traj = _run(fl.qr_flow(W1), np.eye(A.shape[0]), cfg)
    R = np.triu(traj.final)
    Q = np.linalg.solve(R.T, A.T).T
    return QRResult(Q, R, traj)


def _min_gap(W):
    # smallest spacing between the roots of the characteristic polynomial
    roots = np.sort(mc.charpoly(W).roots())
    return float(np.min(np.diff(roots))) if roots.size > 1 else np.inf


def spectral_by_flow(W, N=None, config: fl.FlowConfig | None = None) -> SpectralResult:
    """Diagonalise ``W`` with the pullback entropy flow on O(n).

    Integrates ``Q_dot = -(1/2) Q [N, (Q^T W Q)^-1]`` from ``Q(0) = I`` and
    returns ``(Q, Lambda)`` with ``Q^T W Q = diag(Lambda)``.

    Parameters
    ----------
    W : array_like
        SPD matrix.
    N : array_like, optional
        Distinct positive diagonal entries; ``1..n`` by default.
    """
    W = mc.as_spd(W, "W")
    n = W.shape[0]
    Nv = np.arange(1.0, n + 1.0) if N is None else mc.as_diag_pos(N, "N")
    mc.check_same_shape(W, np.diag(Nv))
    if n > 1 and np.min(np.diff(np.sort(Nv))) <= 0:
        raise DomainError("N must have distinct entries", invariant="generic N")
    note = None
    gap = _min_gap(W)
    if gap < 1e-8 * _norm2(W):
        note = (f"near-degenerate spectrum (eigenvalue gap {gap:.2e}); "
                "convergence of the orbit flow may be slow")
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    cfg = config or auto_config_spectral(W, Nv)
    traj = _run(fl.pullback_entropy_flow(W, Nv), np.eye(n), cfg)
    Q = traj.final
    Lambda = np.diag(Q.T @ W @ Q).copy()
    return SpectralResult(Q, Lambda, traj, note)


def eigenvalues_by_horizontal_flow(W, config: fl.FlowConfig | None = None,
                                   match_trace: bool | None = None) -> EigenResult:
    """Ascending eigenvalues of ``W`` from the horizontal flow on diagonals.

    The flow matches the characteristic polynomial of ``diag(Lambda)`` to
    that of ``W``, starting from an ordered geometric sequence with the right
    determinant.  If that sequence is degenerate (``det W`` close to 1 makes
    all entries coincide, which the flow can never separate) the
    trace-matched variant is used instead.

    Raises
    ------
    DomainError
        If ``W`` has (numerically) repeated eigenvalues.
    """
    W = mc.as_spd(W, "W")
    p1 = mc.charpoly(W)
    n = W.shape[0]
    if n > 1 and _min_gap(W) <= 1e-8 * _norm2(W):
        raise DomainError("the horizontal flow needs distinct eigenvalues",
                          invariant="distinct eigenvalues")
    if match_trace is None:
        lam0 = fl.geometric_initial_diag(p1)
        if n > 1 and np.min(np.diff(lam0)) < 1e-3 * lam0[-1]:
            lam0 = fl.geometric_initial_diag(p1, match_trace=True)
    else:
        lam0 = fl.geometric_initial_diag(p1, match_trace=match_trace)
    cfg = config or auto_config_horizontal(lam0)
    traj = _run(fl.horizontal_diag_flow(p1), lam0, cfg)
    return EigenResult(np.sort(traj.final), traj)


def svd_by_flow(A, config: fl.FlowConfig | None = None, N=None) -> SVDResult:
    """``A = U diag(S) V^T`` via the spectral flow on ``W = A^T A``.

    With ``W = Q2^T Lambda Q2`` (``Q2 = Q_inf^T``), ``sqrt(W) = Q2^T sqrt(Lambda) Q2``
    and ``Q1 = A sqrt(W)^-1``, the factors are ``U = Q1 Q2^T``,
    ``S = sqrt(Lambda)`` and ``V = Q2^T``.
    """
    A = mc.as_invertible(A, "A")
    W = mc.sym(A.T @ A)
    sres = spectral_by_flow(W, N, config)
    Q2 = sres.Q.T
    lam = sres.Lambda
    if np.any(lam <= 0):
        raise DomainError("spectral flow produced non-positive eigenvalues")
    sqrtW = Q2.T @ np.diag(np.sqrt(lam)) @ Q2
    Q1 = np.linalg.solve(sqrtW.T, A.T).T
    return SVDResult(Q1 @ Q2.T, np.sqrt(lam), Q2.T, sres.trajectory)


