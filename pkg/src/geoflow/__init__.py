"""Matrix decompositions computed as Riemannian gradient flows.

Polar, QR, Cholesky, spectral and singular value decompositions arise as the
limits of gradient flows of relative entropy on matrix groups carrying the
Wasserstein (Gaussian covariance) and Fisher-Rao (Gaussian precision)
geometries.  Submodules:

``matcore``
    validation, matrix functions, Lyapunov solves, polynomials, oracles.
``geometry``
    metrics, projections, geodesics and distances.
``entropy``
    relative entropy, its lifts and their Riemannian gradients.
``flows``
    flow right-hand sides, integrators and trajectories.
``decomp``
    decompositions obtained by running the flows to convergence.
``cli``
    the ``geoflow`` command.
"""

from . import decomp, entropy, flows, geometry, matcore
from .decomp import (
    cholesky_by_flow,
    eigenvalues_by_horizontal_flow,
    polar_by_flow,
    qr_by_flow,
    spectral_by_flow,
    svd_by_flow,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DimensionError,
    DomainError,
    FlowDivergenceError,
    GeoflowError,
    MagnitudeOverflowError,
    SingularError,
)
from .flows import FlowConfig, Integrator, Trajectory, integrate

__version__ = "0.1.0"

__all__ = [
    "matcore", "geometry", "entropy", "flows", "decomp",
    "polar_by_flow", "qr_by_flow", "cholesky_by_flow", "spectral_by_flow",
    "eigenvalues_by_horizontal_flow", "svd_by_flow",
    "FlowConfig", "Integrator", "Trajectory", "integrate",
    "GeoflowError", "DimensionError", "DomainError", "SingularError",
    "MagnitudeOverflowError", "ConvergenceError", "FlowDivergenceError", "ConfigurationError",
]
