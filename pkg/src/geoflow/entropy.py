"""Relative entropy functionals and their Riemannian gradients.

Sign convention: relative entropy is non-positive and vanishes only at the
target, so every gradient here points *uphill* towards the maximum.

The functionals come in three families:

* on covariances ``Sigma`` / precisions ``W`` directly;
* lifted to GL(n) (or to a cone inside it) through a bundle projection;
* pulled back to O(n) through the orbit map ``Q -> Q^T W1 Q``.

A polynomial-misfit functional on positive diagonal matrices is included for
the horizontal eigenvalue flow.
"""

from __future__ import annotations

import numpy as np

from . import matcore as mc
from .errors import DimensionError, DomainError
from .geometry import WassersteinStructure, check_dims


def logdet_spd(W) -> float:
    """``log det W`` from the Cholesky factor."""
    L = np.linalg.cholesky(W)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


# --------------------------------------------------------------------------
# entropy on SPD matrices
# --------------------------------------------------------------------------

def _log1p_minus(d):
    """``log(1 + d) - d`` without cancellation for small ``|d|``."""
    d = np.asarray(d, dtype=float)
    out = np.log1p(d) - d
    small = np.abs(d) < 1e-2
    if np.any(small):
        x = d[small]
        # alternating series -x^2/2 + x^3/3 - ...; 8 terms reach double precision
        acc = np.zeros_like(x)
        for k in range(9, 1, -1):
            acc = x * ((-1) ** (k + 1) / k + acc)
        out[small] = x * acc
    return out


def relative_entropy_unchecked(X, Y) -> float:
    """``n/2 - tr(Y^-1 X)/2 + log det(Y^-1 X)/2`` for SPD ``X``, ``Y``.

    Evaluated as ``(1/2) sum(log(1 + d) - d)`` over the eigenvalues ``d`` of
    ``L^-1 (X - Y) L^-T`` (``Y = L L^T``), which keeps full relative accuracy
    near the maximum ``X = Y`` where the three-term formula cancels.
    """
    L = np.linalg.cholesky(Y)
    Li = np.linalg.inv(L)
    d = np.linalg.eigvalsh(mc.sym(Li @ (X - Y) @ Li.T))
    if np.any(d <= -1.0):
        raise DomainError("relative entropy needs positive-definite arguments",
                             invariant="positive definite")
    return 0.5 * float(np.sum(_log1p_minus(d)))


def rel_entropy_sigma(Sigma, Sigma1) -> float:
    """``n/2 - tr(Sigma1^-1 Sigma)/2 + log det(Sigma1^-1 Sigma)/2``."""
    Sigma = mc.as_spd(Sigma, "Sigma")
    Sigma1 = mc.as_spd(Sigma1, "Sigma1")
    check_dims(Sigma, Sigma1)
    return relative_entropy_unchecked(Sigma, Sigma1)


def rel_entropy_w(W, W1) -> float:
    """Entropy in the precision variable: ``n/2 - tr(W1 W^-1)/2 + log det(W1 W^-1)/2``."""
    W = mc.as_spd(W, "W")
    W1 = mc.as_spd(W1, "W1")
    check_dims(W, W1)
    return relative_entropy_unchecked(W1, W)


def grad_entropy_sym_wasserstein(Sigma, Sigma1) -> np.ndarray:
    """Wasserstein gradient ``2I - Sigma1^-1 Sigma - Sigma Sigma1^-1``."""
    Sigma = mc.as_spd(Sigma, "Sigma")
    Sigma1 = mc.as_spd(Sigma1, "Sigma1")
    check_dims(Sigma, Sigma1)
    X = mc.inv(Sigma1) @ Sigma
    return mc.sym(2.0 * np.eye(Sigma.shape[0]) - X - X.T)


def grad_entropy_w_fisherrao(W, W1) -> np.ndarray:
    """Fisher-Rao gradient ``W1 - W``."""
    W = mc.as_spd(W, "W")
    W1 = mc.as_spd(W1, "W1")
    check_dims(W, W1)
    return W1 - W


def hessian_entropy_fr(W, Wdot) -> float:
    """Hessian form of the entropy in the precision variable.

    It equals ``-fr_metric(W, Wdot, Wdot)``: the Fisher-Rao metric is the
    Hessian metric of minus the entropy.  The second derivative here is taken
    along the dual-affine line ``t -> (W^-1 + t Sdot)^-1`` with
    ``Sdot = -W^-1 Wdot W^-1``, where the identity is exact; along Fisher-Rao
    geodesics it holds at the maximiser ``W = W1``.
    """
    W = mc.as_spd(W, "W")
    Wdot = mc.as_symmetric(Wdot, "Wdot")
    Wi = mc.inv(W)
    return -0.5 * float(np.trace(Wi @ Wdot @ Wi @ Wdot))


# --------------------------------------------------------------------------
# lifts to GL(n) (Wasserstein)
# --------------------------------------------------------------------------

def lifted_entropy_gl(ws: WassersteinStructure, Sigma1, A) -> float:
    """``F(A) = H(A Sigma0 A^T)``; constant along fibres."""
    A = mc.as_invertible(A, "A")
    check_dims(ws.sigma0, A)
    return rel_entropy_sigma(mc.sym(A @ ws.sigma0 @ A.T), Sigma1)


def grad_lifted_entropy_gl(ws: WassersteinStructure, Sigma1, A) -> np.ndarray:
    """Gradient ``A^-T Sigma0^-1 - Sigma1^-1 A`` for the metric ``tr(Sigma0 U^T V)``."""
    A = mc.as_invertible(A, "A")
    Sigma1 = mc.as_spd(Sigma1, "Sigma1")
    check_dims(ws.sigma0, A, Sigma1)
    return mc.inv(A).T @ mc.inv(ws.sigma0) - mc.inv(Sigma1) @ A


def hessian_lifted_omt(ws: WassersteinStructure, Sigma1, A, Adot) -> float:
    """Second derivative of the lifted entropy along ``A + t Adot``:

    ``-tr(Adot A^-1 Adot A^-1) - tr(Sigma0 Adot^T Sigma1^-1 Adot)``.
    """
    A = mc.as_invertible(A, "A")
    Adot = mc.as_square(Adot, "Adot")
    Sigma1 = mc.as_spd(Sigma1, "Sigma1")
    check_dims(ws.sigma0, A, Adot, Sigma1)
    V = Adot @ mc.inv(A)
    return float(-np.trace(V @ V) - np.trace(ws.sigma0 @ Adot.T @ mc.inv(Sigma1) @ Adot))


def polar_lifted_functional(Sigma0, Sigma1, P) -> float:
    """Lifted entropy restricted to the SPD cone, ``H(P Sigma0 P)``."""
    P = mc.as_spd(P, "P")
    return rel_entropy_sigma(mc.sym(P @ Sigma0 @ P), Sigma1)


# --------------------------------------------------------------------------
# lift to the upper-triangular cone (Fisher-Rao)
# --------------------------------------------------------------------------

def qr_lifted_functional(W1, R) -> float:
    """``F(R) = H(R^T R)`` with the entropy taken in the precision variable."""
    R = np.asarray(R, dtype=float)
    return rel_entropy_w(mc.sym(R.T @ R), W1)


def grad_qr_lifted(W1, R) -> np.ndarray:
    """Gradient of :func:`qr_lifted_functional` for :func:`~geoflow.geometry.gl_metric`.

    ``(u - d/2)(R^-T W1 R^-1 - I) R`` where ``u`` keeps the upper triangle and
    ``d`` the diagonal.  The result is upper triangular, so the cone of
    positive upper-triangular matrices is invariant under the flow.
    """
    R = mc.as_invertible(R, "R")
    W1 = mc.as_spd(W1, "W1")
    check_dims(R, W1)
    Ri = mc.inv(R)
    X = Ri.T @ W1 @ Ri - np.eye(R.shape[0])
    Y = np.triu(X) - 0.5 * np.diag(np.diag(X))
    return np.triu(Y @ R)


# --------------------------------------------------------------------------
# O(n): canonical metric, Brockett and pullback entropy
# --------------------------------------------------------------------------

def canonical_metric_on(Q, U, V) -> float:
    """``tr(Q^T U Q^T V)`` on ``T_Q O(n)``.

    For tangent vectors ``U = Q xi`` with skew ``xi`` this equals
    ``tr(xi eta) = -<xi, eta>_F``, i.e. the form is negative definite; it is
    implemented literally because the O(n) gradients below are defined
    against it.
    """
    Q = np.asarray(Q, dtype=float)
    return float(np.trace(Q.T @ U @ Q.T @ V))


def brockett_functional(M, N, Q) -> float:
    """``E(Q) = tr(N Q^T M Q)``."""
    N = np.diag(mc.as_diag_pos(N, "N"))
    Q = np.asarray(Q, dtype=float)
    return float(np.trace(N @ Q.T @ M @ Q))


def grad_brockett(M, N, Q) -> np.ndarray:
    """Gradient of :func:`brockett_functional` for :func:`canonical_metric_on`."""
    N = np.diag(mc.as_diag_pos(N, "N"))
    Q = np.asarray(Q, dtype=float)
    G = Q.T @ M @ Q
    return Q @ mc.commutator(N, G)


def pullback_entropy_on(W1, N, Q) -> float:
    """Entropy of ``Gamma(Q) = Q^T W1 Q`` relative to the diagonal ``N``."""
    N = np.diag(mc.as_diag_pos(N, "N"))
    Q = np.asarray(Q, dtype=float)
    return rel_entropy_w(mc.sym(Q.T @ W1 @ Q), N)


def grad_pullback_entropy_on(W1, N, Q) -> np.ndarray:
    """``-(1/2) Q [N, Gamma(Q)^-1]`` with ``Gamma(Q) = Q^T W1 Q``."""
    N = np.diag(mc.as_diag_pos(N, "N"))
    Q = np.asarray(Q, dtype=float)
    W1 = mc.as_spd(W1, "W1")
    check_dims(N, Q, W1)
    Gi = Q.T @ mc.inv(W1) @ Q
    return -0.5 * Q @ mc.commutator(N, Gi)


# --------------------------------------------------------------------------
# characteristic-polynomial misfit on positive diagonal matrices
# --------------------------------------------------------------------------

def _lower_coeffs(lam):
    # ascending coefficients of prod(x - lam_i), dropping the leading 1
    return mc.poly_from_roots(lam)[:-1]


def poly_target(p1) -> np.ndarray:
    """Lower coefficients ``a_0..a_{n-1}`` of a monic target polynomial."""
    if isinstance(p1, mc.MonicPoly):
        return np.asarray(p1.coeffs, dtype=float)
    return np.asarray(p1, dtype=float)


def poly_misfit(p1, lam) -> float:
    """``(1/2) |p1 - charpoly(diag(lam))|^2`` on monomial coefficients."""
    lam = mc.as_diag_pos(lam, "Lambda")
    r = poly_target(p1) - _lower_coeffs(lam)
    return 0.5 * float(r @ r)


def poly_misfit_y(p1, lam) -> np.ndarray:
    """``y_k = <prod_{i != k}(x - lam_i), p1 - charpoly(Lambda)>``."""
    lam = mc.as_diag_pos(lam, "Lambda")
    target = poly_target(p1)
    if target.size != lam.size:
        raise DimensionError(f"polynomial degree {target.size} != dimension {lam.size}")
    r = target - _lower_coeffs(lam)
    y = np.empty_like(lam)
    for k in range(lam.size):
        y[k] = mc.poly_from_roots(np.delete(lam, k)) @ r
    return y


def grad_poly_misfit_diag(p1, lam) -> np.ndarray:
    """Gradient of :func:`poly_misfit` for :func:`~geoflow.geometry.diag_metric`.

    With the metric ``(1/2) sum a_i b_i / lam_i^2`` the gradient is
    ``2 lam^2 y``; the horizontal eigenvalue flow uses ``-lam^2 y``, i.e. it
    runs at half speed.
    """
    lam = mc.as_diag_pos(lam, "Lambda")
    return 2.0 * lam**2 * poly_misfit_y(p1, lam)
