"""Randomised self-check suites behind ``geoflow check``.

Each suite returns a list of :class:`CheckResult` rows with the worst
observed residual and the tolerance it is held to.  Randomness is seeded
from the ``GEOFLOW_SEED`` environment variable (default 0).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import decomp as dc
from . import entropy as ent
from . import flows as fl
from . import geometry as geo
from . import matcore as mc


@dataclass
class CheckResult:
    suite: str
    name: str
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst <= self.tol)


def seed_from_env(default=0) -> int:
    raw = os.environ.get("GEOFLOW_SEED", "")
    try:
        return int(raw) if raw.strip() else default
    except ValueError:
        return default


# --------------------------------------------------------------------------
# random instances
# --------------------------------------------------------------------------

def rand_orth(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def rand_gl(rng, n, lo=0.5, hi=2.0):
    return rand_orth(rng, n) @ np.diag(rng.uniform(lo, hi, n)) @ rand_orth(rng, n)


def rand_gl_separated(rng, n):
    """Invertible matrix whose singular values are spaced at least 0.25 apart."""
    s = 0.6 + 0.35 * np.arange(n) + rng.uniform(0.0, 0.1, n)
    return rand_orth(rng, n) @ np.diag(rng.permutation(s)) @ rand_orth(rng, n)


def rand_spd(rng, n, lo=0.5, hi=3.0):
    Q = rand_orth(rng, n)
    return mc.sym(Q.T @ np.diag(rng.uniform(lo, hi, n)) @ Q)


def rand_spd_separated(rng, n):
    lam = 1.0 + np.cumsum(rng.uniform(0.3, 0.8, n))
    Q = rand_orth(rng, n)
    return mc.sym(Q.T @ np.diag(rng.permutation(lam)) @ Q)


def rand_sym(rng, n):
    return mc.sym(rng.normal(size=(n, n)))


def rel_err(a, b):
    return abs(a - b) / (1.0 + abs(b))


def central_diff(f, h=1e-5):
    return (f(h) - f(-h)) / (2 * h)


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------

def gradient_cases(rng, count, dims=(2, 3, 5)):
    """Yield ``(name, fd_value, pairing_value)`` for every implemented gradient."""
    for k in range(count):
        n = dims[k % len(dims)]
        S0, S1 = rand_spd(rng, n), rand_spd(rng, n)
        ws = geo.WassersteinStructure(S0)
        A = rand_gl(rng, n)
        E = rng.normal(size=(n, n))
        yield ("lifted-gl", central_diff(lambda t: ent.lifted_entropy_gl(ws, S1, A + t * E)),
               geo.w_metric_gl(ws, A, ent.grad_lifted_entropy_gl(ws, S1, A), E))
        Sig, U = rand_spd(rng, n), rand_sym(rng, n)
        yield ("sym-wasserstein", central_diff(lambda t: ent.rel_entropy_sigma(Sig + t * U, S1)),
               geo.w_metric_sym(Sig, ent.grad_entropy_sym_wasserstein(Sig, S1), U))
        yield ("fisher-rao", central_diff(lambda t: ent.rel_entropy_w(Sig + t * U, S1)),
               geo.fr_metric(Sig, ent.grad_entropy_w_fisherrao(Sig, S1), U))
        R = np.triu(rng.normal(size=(n, n)), 1) + np.diag(rng.uniform(0.8, 2.0, n))
        yield ("qr-cone", central_diff(lambda t: ent.qr_lifted_functional(S1, R + t * E)),
               geo.gl_metric(R, ent.grad_qr_lifted(S1, R), E))
        Q, xi = rand_orth(rng, n), mc.skew(rng.normal(size=(n, n)))
        Nd = np.sort(rng.uniform(0.5, 3.0, n))
        yield ("pullback-on", central_diff(lambda t: ent.pullback_entropy_on(S1, Nd, Q @ mc.expm(t * xi))),
               ent.canonical_metric_on(Q, ent.grad_pullback_entropy_on(S1, Nd, Q), Q @ xi))
        yield ("brockett", central_diff(lambda t: ent.brockett_functional(S1, Nd, Q @ mc.expm(t * xi))),
               ent.canonical_metric_on(Q, ent.grad_brockett(S1, Nd, Q), Q @ xi))
        lam = np.sort(rng.uniform(0.5, 2.0, n))
        p1 = mc.charpoly(np.diag(rng.uniform(0.5, 2.0, n)))
        a = rng.normal(size=n)
        yield ("poly-diag", central_diff(lambda t: ent.poly_misfit(p1, lam + t * a)),
               geo.diag_metric(lam, ent.grad_poly_misfit_diag(p1, lam), a))


def suite_gradients(rng, count=30):
    worst = {}
    for name, fd, pair in gradient_cases(rng, count):
        worst[name] = max(worst.get(name, 0.0), rel_err(fd, pair))
    return [CheckResult("gradients", k, v, 1e-6) for k, v in sorted(worst.items())]


def charpoly_drift(traj) -> float:
    c0 = np.asarray(mc.charpoly(traj.states[0]).coeffs)
    drift = 0.0
    for S in traj.states[1:]:
        c = np.asarray(mc.charpoly(S).coeffs)
        drift = max(drift, float(np.max(np.abs(c - c0) / np.maximum(np.abs(c0), 1e-300))))
    return drift


def suite_isospectral(rng, count=3):
    worst = 0.0
    for _ in range(count):
        S = rand_spd(rng, 5)
        N = np.arange(1.0, 6.0)
        cfg = fl.FlowConfig(dt=1e-3, max_steps=1000, grad_tol=1e-300, record_every=50)
        traj = fl.integrate(fl.double_bracket_flow(N), S, cfg)
        worst = max(worst, charpoly_drift(traj))
    return [CheckResult("isospectral", "double-bracket charpoly drift", worst, 1e-8)]


def suite_oracles(rng, count=5):
    rows = {"polar": 0.0, "qr": 0.0, "cholesky": 0.0, "spectral": 0.0, "svd": 0.0}
    for k in range(count):
        n = 2 + k % 4
        A = rand_gl_separated(rng, n)
        W = rand_spd_separated(rng, n)
        P, Q = mc.oracle_polar(A)
        r = dc.polar_by_flow(A)
        rows["polar"] = max(rows["polar"], np.abs(r.P - P).max(), np.abs(r.Q - Q).max(),
                            np.linalg.norm(A - r.P @ r.Q) / np.linalg.norm(A))
        Qo, Ro = mc.oracle_qr(A)
        r = dc.qr_by_flow(A)
        rows["qr"] = max(rows["qr"], np.abs(r.R - Ro).max(), np.abs(r.Q - Qo).max(),
                         np.linalg.norm(A - r.Q @ r.R) / np.linalg.norm(A))
        r = dc.cholesky_by_flow(W)
        rows["cholesky"] = max(rows["cholesky"], np.abs(r.L - mc.oracle_cholesky(W)).max())
        r = dc.spectral_by_flow(W)
        lam = mc.oracle_eigh(W)[1]
        rows["spectral"] = max(rows["spectral"], np.abs(np.sort(r.Lambda) - lam).max(),
                               np.linalg.norm(r.Q.T @ W @ r.Q - np.diag(r.Lambda)) / np.linalg.norm(W))
        r = dc.svd_by_flow(A)
        sv = np.sqrt(mc.oracle_eigh(A.T @ A)[1])
        rows["svd"] = max(rows["svd"], np.abs(np.sort(r.S) - sv).max(),
                          np.linalg.norm(A - r.U @ np.diag(r.S) @ r.V.T) / np.linalg.norm(A))
    return [CheckResult("oracles", k, float(v), 1e-5) for k, v in rows.items()]


def suite_geometry(rng, count=20):
    worst = {"fr-invariance": 0.0, "gl-right-invariance": 0.0, "submersion": 0.0,
             "geodesic-residual": 0.0, "diag-isometry": 0.0, "geodesic-commutation": 0.0}
    fs = geo.FisherRaoStructure.identity
    for k in range(count):
        n = 2 + k % 4
        W, U, V, A = rand_spd(rng, n), rand_sym(rng, n), rand_sym(rng, n), rand_gl(rng, n)
        worst["fr-invariance"] = max(worst["fr-invariance"], rel_err(
            geo.fr_metric(A.T @ W @ A, A.T @ U @ A, A.T @ V @ A), geo.fr_metric(W, U, V)))
        B, X, Y = rand_gl(rng, n), rng.normal(size=(n, n)), rng.normal(size=(n, n))
        worst["gl-right-invariance"] = max(worst["gl-right-invariance"], rel_err(
            geo.gl_metric(A @ B, X @ B, Y @ B), geo.gl_metric(A, X, Y)))
        Uh = np.triu(rng.normal(size=(n, n))) @ A
        s = fs(n)
        d = geo.fr_dpi(s, A, Uh)
        worst["submersion"] = max(worst["submersion"], rel_err(
            geo.gl_metric(A, Uh, Uh), geo.fr_metric(geo.fr_project(s, A), d, d)))
        W0, W1 = rand_spd(rng, n), rand_spd(rng, n)
        h = 1e-3
        res = 0.0
        for c in np.linspace(0.0, 1.0, 6):
            triple = [geo.fr_geodesic(W0, W1, t) for t in (c - h, c, c + h)]
            res = max(res, geo.fr_geodesic_residual(np.array(triple), h))
        worst["geodesic-residual"] = max(worst["geodesic-residual"], res / np.linalg.norm(W1))
        L0, L1 = rng.uniform(0.2, 5.0, n), rng.uniform(0.2, 5.0, n)
        worst["diag-isometry"] = max(worst["diag-isometry"], abs(
            geo.diag_distance(L0, L1) - np.linalg.norm(geo.diag_to_euclid(L0) - geo.diag_to_euclid(L1))))
        comm = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            Wt = geo.fr_geodesic(np.eye(n), W1, t)
            Wd = (geo.fr_geodesic(np.eye(n), W1, t + h) - geo.fr_geodesic(np.eye(n), W1, t - h)) / (2 * h)
            comm = max(comm, float(np.linalg.norm(mc.commutator(np.linalg.inv(Wt), Wd))))
        worst["geodesic-commutation"] = max(worst["geodesic-commutation"], comm)
    tols = {"fr-invariance": 1e-10, "gl-right-invariance": 1e-10, "submersion": 1e-10,
            "geodesic-residual": 1e-5, "diag-isometry": 1e-12, "geodesic-commutation": 1e-6}
    return [CheckResult("geometry", k, v, tols[k]) for k, v in worst.items()]


SUITES = {
    "gradients": suite_gradients,
    "isospectral": suite_isospectral,
    "oracles": suite_oracles,
    "geometry": suite_geometry,
}


def run_suite(name, seed=None, threads=1):
    """Run one suite (or ``"all"``) and return its rows."""
    seed = seed_from_env() if seed is None else seed
    if name == "all":
        names = list(SUITES)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = pool.map(lambda s: SUITES[s](np.random.default_rng([seed, names.index(s)])), names)
                return [row for part in parts for row in part]
        return [row for s in names for row in SUITES[s](np.random.default_rng([seed, names.index(s)]))]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(list(SUITES) + ['all'])}")
    return SUITES[name](np.random.default_rng([seed, list(SUITES).index(name)]))
