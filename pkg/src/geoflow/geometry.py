"""Riemannian structures on GL(n) and on SPD matrices.

Two bundle structures are modelled.

Wasserstein (push-forward)
    ``pi(A) = A Sigma0 A^T`` with the flat metric ``tr(Sigma0 U^T V)`` on GL(n).
    The descended metric on SPD matrices is ``tr(Sigma S S)`` where ``S`` solves
    the Lyapunov equation ``S Sigma + Sigma S = Sigma_dot``.

Fisher-Rao (pull-back)
    ``pi(A) = A^T W0 A`` with the right-invariant metric :func:`gl_metric` on
    GL(n), descending to ``(1/2) tr(W^-1 U W^-1 V)`` on SPD matrices.

Positive diagonal matrices are kept as 1-D arrays of their entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore as mc
from .errors import DimensionError, DomainError

VERTICAL_TOL = 1e-8


@dataclass(frozen=True)
class WassersteinStructure:
    """Reference covariance ``sigma0`` of the push-forward bundle."""

    sigma0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma0", mc.as_spd(self.sigma0, "sigma0"))

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def n(self):
        return self.sigma0.shape[0]


@dataclass(frozen=True)
class FisherRaoStructure:
    """Reference precision ``w0`` of the pull-back bundle."""

    w0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w0", mc.as_spd(self.w0, "w0"))

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))


def _check_dims(*mats):
    n = {np.shape(m) for m in mats}
    if len(n) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(n)}")


# --------------------------------------------------------------------------
# Wasserstein geometry
# --------------------------------------------------------------------------

def w_metric_gl(ws: WassersteinStructure, A, U, V) -> float:
    """``tr(Sigma0 U^T V)``; independent of the base point ``A``."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    _check_dims(ws.sigma0, np.asarray(A), U, V)
    return float(np.trace(ws.sigma0 @ U.T @ V))


def w_distance_gl(ws: WassersteinStructure, A0, A1) -> float:
    D = np.asarray(A1, dtype=float) - np.asarray(A0, dtype=float)
    _check_dims(ws.sigma0, D)
    return float(np.sqrt(max(np.trace(ws.sigma0 @ D.T @ D), 0.0)))


def w_project(ws: WassersteinStructure, A) -> np.ndarray:
    A = mc.as_invertible(A, "A")
    _check_dims(ws.sigma0, A)
    return mc.sym(A @ ws.sigma0 @ A.T)


def w_dpi(ws: WassersteinStructure, A, Adot) -> np.ndarray:
    """Derivative of the projection: ``V Sigma + Sigma V^T`` with ``V = Adot A^-1``."""
    A = mc.as_invertible(A, "A")
    Adot = mc.as_square(Adot, "Adot")
    _check_dims(ws.sigma0, A, Adot)
    V = Adot @ mc.inv(A)
    Sigma = A @ ws.sigma0 @ A.T
    return mc.sym(V @ Sigma + Sigma @ V.T)


def w_is_horizontal(A, Adot) -> bool:
    A = mc.as_invertible(A, "A")
    return mc.is_symmetric(np.asarray(Adot, dtype=float) @ mc.inv(A))


def w_is_vertical(ws: WassersteinStructure, A, Adot) -> bool:
    A = mc.as_invertible(A, "A")
    V = np.asarray(Adot, dtype=float) @ mc.inv(A)
    Sigma = A @ ws.sigma0 @ A.T
    defect = V @ Sigma + Sigma @ V.T
    scale = 1.0 + np.max(np.abs(V)) * np.max(np.abs(Sigma))
    return bool(np.max(np.abs(defect)) <= mc.SYM_TOL * scale)


def w_metric_sym(Sigma, U, V=None) -> float:
    """Descended Wasserstein metric ``tr(Sigma S_U S_V)`` on SPD matrices."""
    Sigma = mc.as_spd(Sigma, "Sigma")
    S_u = mc.solve_lyapunov(Sigma, U)
    S_v = S_u if V is None else mc.solve_lyapunov(Sigma, V)
    return float(np.trace(Sigma @ S_u @ S_v))


def w_monge_ampere_solve(Sigma0, Sigma1) -> np.ndarray:
    """SPD ``P`` with ``P Sigma0 P = Sigma1``."""
    Sigma0 = mc.as_spd(Sigma0, "Sigma0")
    Sigma1 = mc.as_spd(Sigma1, "Sigma1")
    _check_dims(Sigma0, Sigma1)
    r = mc.sqrtm_spd(Sigma0)
    r_inv = mc.powm_spd(Sigma0, -0.5)
    middle = mc.sqrtm_spd(mc.sym(r @ Sigma1 @ r))
    return mc.sym(r_inv @ middle @ r_inv)


# --------------------------------------------------------------------------
# Fisher-Rao geometry on SPD matrices
# --------------------------------------------------------------------------

def fr_metric(W, U, V) -> float:
    """``(1/2) tr(W^-1 U W^-1 V)``."""
    W = mc.as_spd(W, "W")
    U = mc.as_symmetric(U, "U")
    V = mc.as_symmetric(V, "V")
    _check_dims(W, U, V)
    Wi = mc.inv(W)
    return 0.5 * float(np.trace(Wi @ U @ Wi @ V))


def _upper_factor(W):
    # W = L0^T L0 with L0 upper triangular
    return np.linalg.cholesky(W).T


def fr_geodesic(W0, W1, t, factor=None) -> np.ndarray:
    """Point at time ``t`` on the Fisher-Rao geodesic from ``W0`` to ``W1``.

    The curve from the identity is ``exp(t log W1)``; general endpoints are
    reached by the congruence ``W -> L0^T W L0`` with ``W0 = L0^T L0``.

    Parameters
    ----------
    W0, W1 : array_like
        SPD endpoints.
    t : float
        Curve parameter; ``t`` outside ``[0, 1]`` extrapolates.
    factor : array_like, optional
        Any ``L0`` with ``L0^T L0 = W0``.  Defaults to the upper Cholesky
        factor; the curve does not depend on this choice.
    """
    W0 = mc.as_spd(W0, "W0")
    W1 = mc.as_spd(W1, "W1")
    _check_dims(W0, W1)
    L0 = _upper_factor(W0) if factor is None else mc.as_invertible(factor, "factor")
    L0i = mc.inv(L0)
    X = mc.logm_spd(mc.sym(L0i.T @ W1 @ L0i))
    return mc.sym(L0.T @ mc.expm(t * X) @ L0)


def fr_distance2_unchecked(W0, W1) -> float:
    """Squared Fisher-Rao distance without input validation."""
    L0i = np.linalg.inv(_upper_factor(W0))
    mu = np.linalg.eigvalsh(mc.sym(L0i.T @ W1 @ L0i))
    return 0.5 * float(np.sum(np.log(mu) ** 2))


def fr_distance(W0, W1) -> float:
    """``sqrt((1/2) sum log(mu_i)^2)`` with ``mu`` the spectrum of ``W1 W0^-1``."""
    W0 = mc.as_spd(W0, "W0")
    W1 = mc.as_spd(W1, "W1")
    _check_dims(W0, W1)
    return float(np.sqrt(fr_distance2_unchecked(W0, W1)))


def fr_geodesic_residual(samples, h) -> float:
    """Max Frobenius norm of ``W'' - W' W^-1 W'`` over interior samples.

    ``samples`` are equispaced with spacing ``h``; derivatives are central
    differences.
    """
    W = np.asarray(samples, dtype=float)
    if W.ndim != 3 or W.shape[0] < 3:
        raise DimensionError("need at least 3 samples of shape (n, n)")
    worst = 0.0
    for k in range(1, W.shape[0] - 1):
        Wd = (W[k + 1] - W[k - 1]) / (2 * h)
        Wdd = (W[k + 1] - 2 * W[k] + W[k - 1]) / h**2
        r = Wdd - Wd @ mc.inv(W[k]) @ Wd
        worst = max(worst, float(np.linalg.norm(r)))
    return worst


# --------------------------------------------------------------------------
# Fisher-Rao bundle over GL(n)
# --------------------------------------------------------------------------

def strict_lower(M):
    return np.tril(M, -1)


def gl_metric(A, U, V) -> float:
    """Right-invariant metric on GL(n) whose projection gives Fisher-Rao."""
    A = mc.as_invertible(A, "A")
    Ai = mc.inv(A)
    u = np.asarray(U, dtype=float) @ Ai
    v = np.asarray(V, dtype=float) @ Ai
    _check_dims(A, u, v)
    su, sv = u + u.T, v + v.T
    return 0.5 * float(np.trace(strict_lower(u).T @ strict_lower(v) + su @ sv))


def fr_project(fs: FisherRaoStructure, A) -> np.ndarray:
    A = mc.as_invertible(A, "A")
    _check_dims(fs.w0, A)
    return mc.sym(A.T @ fs.w0 @ A)


def fr_dpi(fs: FisherRaoStructure, A, Adot) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    Adot = np.asarray(Adot, dtype=float)
    return mc.sym(Adot.T @ fs.w0 @ A + A.T @ fs.w0 @ Adot)


def k_tri_distance(R0, R1) -> float:
    """Distance in the upper-triangular cone, via the isometry onto SPD."""
    R0 = mc.as_upper_tri_pos(R0, "R0")
    R1 = mc.as_upper_tri_pos(R1, "R1")
    return fr_distance(R0.T @ R0, R1.T @ R1)


# --------------------------------------------------------------------------
# positive diagonal matrices
# --------------------------------------------------------------------------

def diag_metric(L, a, b) -> float:
    L = mc.as_diag_pos(L, "L")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_dims(L, a, b)
    return 0.5 * float(np.sum(a * b / L**2))


def diag_geodesic(L0, L1, t) -> np.ndarray:
    L0 = mc.as_diag_pos(L0, "L0")
    L1 = mc.as_diag_pos(L1, "L1")
    _check_dims(L0, L1)
    return L0 * (L1 / L0) ** t


def diag_distance(L0, L1) -> float:
    L0 = mc.as_diag_pos(L0, "L0")
    L1 = mc.as_diag_pos(L1, "L1")
    _check_dims(L0, L1)
    return float(np.sqrt(0.5 * np.sum((np.log(L1) - np.log(L0)) ** 2)))


def diag_to_euclid(L) -> np.ndarray:
    return np.log(mc.as_diag_pos(L, "L")) / np.sqrt(2.0)


# --------------------------------------------------------------------------
# orbits of the O(n) action on SPD matrices
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitClassification:
    horizontal: bool
    vertical: bool
    commutator_norm: float
    vertical_residual: float


def _skew_basis(n):
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j], E[j, i] = 1.0, -1.0
            basis.append(E)
    return basis


def fr_hor_ver_orbit(W, S, tol=VERTICAL_TOL) -> OrbitClassification:
    """Classify a symmetric direction at ``W`` relative to the orbit ``Q^T W Q``.

    Horizontal means ``[S, W^-1] = 0``; vertical means ``S = -xi W + W xi``
    for some skew ``xi`` (tested by least squares).
    """
    W = mc.as_spd(W, "W")
    S = mc.as_symmetric(S, "S")
    _check_dims(W, S)
    n = W.shape[0]
    scale = max(float(np.linalg.norm(S)), 1e-300)
    comm = float(np.linalg.norm(mc.commutator(S, mc.inv(W))))
    basis = _skew_basis(n)
    if basis:
        cols = np.column_stack([(-E @ W + W @ E).ravel() for E in basis])
        coef, *_ = np.linalg.lstsq(cols, S.ravel(), rcond=None)
        resid = float(np.linalg.norm(cols @ coef - S.ravel()))
    else:
        resid = float(np.linalg.norm(S))
    horizontal = comm <= tol * max(scale, 1.0) * max(1.0, float(np.linalg.norm(mc.inv(W))))
    vertical = resid <= tol * scale if scale > 1e-300 else True
    if scale <= 1e-300:
        horizontal = vertical = True
    return OrbitClassification(horizontal, vertical, comm, resid)


def check_dims(*mats):
    """Public alias used by other modules for shape agreement."""
    _check_dims(*mats)


__all__ = [
    "WassersteinStructure", "FisherRaoStructure", "OrbitClassification",
    "w_metric_gl", "w_distance_gl", "w_project", "w_dpi", "w_is_horizontal",
    "w_is_vertical", "w_metric_sym", "w_monge_ampere_solve",
    "fr_metric", "fr_geodesic", "fr_distance", "fr_geodesic_residual",
    "gl_metric", "fr_project", "fr_dpi", "k_tri_distance",
    "diag_metric", "diag_geodesic", "diag_distance", "diag_to_euclid",
    "fr_hor_ver_orbit", "DomainError",
]
