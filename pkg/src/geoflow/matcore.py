"""Dense matrix kernels and classical decomposition oracles.

Everything here works on plain ``numpy`` float arrays.  The ``as_*`` helpers
validate and normalise inputs into the carriers used throughout the package:

* square matrix      -- finite ``(n, n)`` array
* SPD matrix         -- symmetric within ``SYM_TOL`` and positive definite
* upper-triangular   -- strictly lower part zero, positive diagonal
* positive diagonal  -- 1-D array of strictly positive entries

The oracles (``oracle_*``) are classical LAPACK-backed factorizations.  They
exist only to cross-check the flow-based decompositions in :mod:`geoflow.decomp`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, DomainError, MagnitudeOverflowError, SingularError

SYM_TOL = 1e-10
PD_TOL = 1e-12
DET_TOL = 1e-12


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def as_square(M, name="matrix") -> np.ndarray:
    """Return ``M`` as a finite square float array (a copy)."""
    A = np.array(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries", invariant="finite")
    return A


def symmetry_defect(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M - M.T)))


def is_symmetric(M, tol=SYM_TOL) -> bool:
    M = np.asarray(M)
    return symmetry_defect(M) <= tol * (1.0 + float(np.max(np.abs(M))))


def as_symmetric(M, name="matrix", tol=SYM_TOL) -> np.ndarray:
    """Validate symmetry and return the exactly symmetrised matrix."""
    A = as_square(M, name)
    if not is_symmetric(A, tol):
        raise DomainError(f"{name} is not symmetric (defect {symmetry_defect(A):.3e})",
                          invariant="symmetric")
    return 0.5 * (A + A.T)


def as_spd(M, name="matrix") -> np.ndarray:
    """Validate an SPD matrix; smallest eigenvalue must exceed ``PD_TOL * ||M||_2``."""
    A = as_symmetric(M, name)
    lam = np.linalg.eigvalsh(A)
    if not lam[0] > PD_TOL * max(abs(lam[-1]), abs(lam[0])):
        raise DomainError(f"{name} is not positive definite (min eigenvalue {lam[0]:.3e})",
                          invariant="positive definite")
    return A


def as_invertible(M, name="matrix") -> np.ndarray:
    A = as_square(M, name)
    s = np.linalg.svd(A, compute_uv=False)
    # relative determinant test, scale-free: |det| / ||A||^n
    if s[-1] <= DET_TOL * s[0] or s[0] == 0.0:
        raise SingularError(f"{name} is singular (smallest singular value {s[-1]:.3e})")
    return A


def as_upper_tri_pos(M, name="R") -> np.ndarray:
    R = as_square(M, name)
    if np.any(np.tril(R, -1) != 0.0):
        raise DomainError(f"{name} has non-zero strictly-lower entries", invariant="upper triangular")
    if np.any(np.diag(R) <= 0.0):
        raise DomainError(f"{name} has non-positive diagonal entries", invariant="positive diagonal")
    return R


def as_diag_pos(entries, name="diagonal") -> np.ndarray:
    """Accept a vector or a diagonal matrix and return the positive entries."""
    d = np.array(entries, dtype=float)
    if d.ndim == 2:
        if d.shape[0] != d.shape[1] or np.any(d - np.diag(np.diag(d)) != 0.0):
            raise DomainError(f"{name} is not a diagonal matrix", invariant="diagonal")
        d = np.diag(d).copy()
    if d.ndim == 0:
        d = d.reshape(1)
    if d.ndim != 1 or d.size < 1:
        raise DimensionError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
        raise DomainError(f"{name} must have strictly positive entries", invariant="positive")
    return d


def check_same_shape(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise DimensionError(f"shape mismatch: {sorted(shapes)}")


def sym(M) -> np.ndarray:
    return 0.5 * (M + M.T)


def skew(M) -> np.ndarray:
    return 0.5 * (M - M.T)


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


# --------------------------------------------------------------------------
# matrix functions
# --------------------------------------------------------------------------

def _spd_function(W, f):
    lam, U = np.linalg.eigh(W)
    with np.errstate(over="ignore", invalid="ignore"):
        return (U * f(lam)) @ U.T


def expm(M) -> np.ndarray:
    """Matrix exponential.

    Exactly symmetric inputs go through the eigendecomposition (result is
    exactly symmetric); everything else uses scaling-and-squaring with a
    degree-13 Pade approximant.  The symmetric shortcut deliberately uses an
    exact test: a tolerance with an absolute floor would classify small
    skew generators as symmetric and discard them.
    """
    A = as_square(M)
    if np.array_equal(A, A.T):
        with np.errstate(over="ignore"):
            E = _spd_function(A, np.exp)
    else:
        E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise MagnitudeOverflowError("matrix exponential overflowed")
    return E


def logm_spd(W) -> np.ndarray:
    """Symmetric logarithm of an SPD matrix."""
    return _spd_function(as_spd(W, "W"), np.log)


def sqrtm_spd(W) -> np.ndarray:
    return _spd_function(as_spd(W, "W"), np.sqrt)


def powm_spd(W, p) -> np.ndarray:
    return _spd_function(as_spd(W, "W"), lambda lam: lam ** p)


def inv(M) -> np.ndarray:
    try:
        return np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularError(str(exc)) from None


# --------------------------------------------------------------------------
# Lyapunov / Sylvester
# --------------------------------------------------------------------------

def _anticommutator_solve(C, RHS):
    # Bartels-Stewart with a symmetric coefficient: the Schur form is the
    # eigendecomposition, and the triangular solve becomes a division.
    lam, U = np.linalg.eigh(C)
    denom = lam[:, None] + lam[None, :]
    if not np.all(denom > 0.0):
        raise DomainError("coefficient is not positive definite; equation is singular",
                          invariant="positive definite")
    return U @ ((U.T @ RHS @ U) / denom) @ U.T


def solve_lyapunov(C, RHS) -> np.ndarray:
    """Solve ``S C + C S = RHS`` for symmetric ``S`` (``C`` SPD, ``RHS`` symmetric)."""
    C = as_spd(C, "C")
    RHS = as_symmetric(RHS, "RHS")
    check_same_shape(C, RHS)
    return sym(_anticommutator_solve(C, RHS))


def solve_sylvester_commutator(C, RHS) -> np.ndarray:
    """Solve ``C V + V C = RHS`` for general (possibly non-symmetric) ``RHS``."""
    C = as_spd(C, "C")
    RHS = as_square(RHS, "RHS")
    check_same_shape(C, RHS)
    return _anticommutator_solve(C, RHS)


# --------------------------------------------------------------------------
# characteristic polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MonicPoly:
    """Monic polynomial ``x^n + a_{n-1} x^{n-1} + ... + a_0``.

    ``coeffs`` holds ``a_0 ... a_{n-1}`` in ascending degree; the leading 1 is
    implicit.
    """

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def full_coeffs(self) -> np.ndarray:
        """Ascending coefficients including the leading 1 (length ``n + 1``)."""
        return np.append(np.asarray(self.coeffs), 1.0)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.full_coeffs())

    def roots(self) -> np.ndarray:
        return np.sort(np.polynomial.polynomial.polyroots(self.full_coeffs()).real)

    @classmethod
    def from_roots(cls, roots) -> "MonicPoly":
        return cls(poly_from_roots(roots)[:-1])


def poly_from_roots(roots) -> np.ndarray:
    """Ascending coefficients of ``prod (x - r)``, leading 1 included."""
    c = np.array([1.0 + 0j])
    for r in np.atleast_1d(roots):
        nxt = np.zeros(c.size + 1, dtype=complex)
        nxt[1:] += c
        nxt[:-1] -= r * c
        c = nxt
    return c.real.copy()


def charpoly(W) -> MonicPoly:
    """Characteristic polynomial ``det(x I - W)`` from the eigenvalues of ``W``."""
    A = as_square(W, "W")
    if is_symmetric(A):
        lam = np.linalg.eigvalsh(sym(A))
    else:
        lam = np.linalg.eigvals(A)
    return MonicPoly(poly_from_roots(lam)[:-1])


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------

def oracle_polar(A):
    """Classical polar factors ``A = P Q`` from the SVD."""
    A = as_invertible(A, "A")
    U, s, Vt = np.linalg.svd(A)
    P = sym((U * s) @ U.T)
    return P, U @ Vt


def oracle_qr(A):
    """``A = Q R`` with ``R`` upper triangular and positive diagonal."""
    A = as_invertible(A, "A")
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs, np.triu(signs[:, None] * R)


def oracle_cholesky(W) -> np.ndarray:
    """Lower-triangular ``L`` with positive diagonal and ``W = L L^T``."""
    W = as_spd(W, "W")
    return np.linalg.cholesky(W)


def oracle_eigh(W):
    """Return ``(Q, lam)`` with ``W = Q^T diag(lam) Q`` and ``lam`` ascending."""
    W = as_spd(W, "W")
    lam, V = np.linalg.eigh(W)
    return V.T, lam
