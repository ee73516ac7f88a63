"""Command-line interface: ``geoflow run | repro | check``.

Exit status of ``run``: 0 when the flow converged, 2 when it did not (step
budget exhausted or the state left its domain), 1 on input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import checks
from . import decomp as dc
from . import fileio
from . import fixtures
from . import flows as fl
from . import matcore as mc
from .errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    FlowDivergenceError,
    GeoflowError,
)
from .svgplot import Series, line_plot

FLOWS = (
    "polar-vertical", "polar-lifted", "entropy-sym", "entropy-fr", "qr", "cholesky",
    "brockett", "double-bracket", "spectral", "eigen-horizontal", "svd",
)
FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


class InputError(GeoflowError, ValueError):
    pass


# --------------------------------------------------------------------------
# input resolution
# --------------------------------------------------------------------------

def _load(path):
    return fileio.read_matrix(path)


def _parse_diag(text, n):
    if text is None:
        return np.arange(1.0, n + 1.0)
    if Path(text).exists():
        return mc.as_diag_pos(_load(text), "N")
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"--n-diag: expected a file or comma-separated numbers, got {text!r}") from None
    return mc.as_diag_pos(vals, "N")


def _matrix_arg(args, attr, fixture, key):
    path = getattr(args, attr)
    if path is not None:
        return _load(path)
    if fixture is not None and key in fixture:
        return fixture[key]
    return None


def _require(value, what):
    if value is None:
        raise InputError(f"missing input: {what}")
    return value


def _config(args, default: fl.FlowConfig) -> fl.FlowConfig:
    return fl.FlowConfig(
        dt=args.dt if args.dt is not None else default.dt,
        max_steps=args.steps if args.steps is not None else default.max_steps,
        grad_tol=args.tol if args.tol is not None else default.grad_tol,
        integrator=args.integrator if args.integrator is not None else default.integrator,
        record_every=args.record_every if args.record_every is not None else default.record_every,
    )


def build_run(args):
    """Return ``(flow, state0, config, finish)`` for the requested flow.

    ``finish(final_state)`` assembles the result factors and residuals.
    """
    fx = fixtures.load(args.fixture) if args.fixture else None
    wants_a = args.flow in ("polar-vertical", "polar-lifted", "qr", "svd")
    X = _matrix_arg(args, "input", fx, "A" if wants_a else "spd")
    name = args.flow

    if name in ("polar-vertical", "polar-lifted"):
        A = mc.as_invertible(_require(X, "--input A"), "A")
        n = A.shape[0]
        S0 = _matrix_arg(args, "sigma0", fx, "Sigma0")
        S0 = np.eye(n) if S0 is None else mc.as_spd(S0, "Sigma0")
        mc.check_same_shape(A, S0)
        S1 = mc.sym(A @ S0 @ A.T) if args.sigma1 is None else mc.as_spd(_load(args.sigma1), "Sigma1")
        if name == "polar-vertical":
            if np.linalg.det(A) <= 0:
                raise DomainError("the vertical flow needs det(A) > 0", invariant="positive determinant")
            flow = fl.polar_vertical_flow(S1, S0)
            state0 = A
            default = fl.FlowConfig(dt=0.1, integrator="lie-euler")
        else:
            flow = fl.polar_lifted_flow(S1, S0)
            state0 = np.eye(n)
            default = dc.auto_config_polar(S0, S1)
            default = fl.FlowConfig(dt=default.dt)

        def finish(P):
            P = mc.sym(P)
            Q = np.linalg.solve(P, A)
            return {"P": P, "Q": Q}, {
                "factor": float(np.linalg.norm(A - P @ Q) / np.linalg.norm(A)),
                "sigma0_preserved": float(np.linalg.norm(Q @ S0 @ Q.T - S0) / np.linalg.norm(S0)),
                "fibre": float(np.linalg.norm(P @ S0 @ P.T - S1) / np.linalg.norm(S1)),
            }
        return flow, state0, _config(args, default), finish

    if name == "entropy-sym":
        S1 = _matrix_arg(args, "sigma1", fx, "Sigma1" if fx and "Sigma1" in fx else "spd")
        S1 = mc.as_spd(_require(S1, "--sigma1"), "Sigma1")
        S = mc.as_spd(_load(args.input) if args.input else np.eye(S1.shape[0]), "Sigma")
        mc.check_same_shape(S, S1)

        def finish(S):
            return {"Sigma": S}, {"target": float(np.linalg.norm(S - S1) / np.linalg.norm(S1))}
        return fl.entropy_sym_flow(S1), S, _config(args, fl.FlowConfig(dt=0.1)), finish

    if name == "entropy-fr":
        W1 = mc.as_spd(_require(_matrix_arg(args, "w1", fx, "spd"), "--w1"), "W1")
        W = mc.as_spd(_load(args.input) if args.input else np.eye(W1.shape[0]), "W")
        mc.check_same_shape(W, W1)

        def finish(W):
            return {"W": W}, {"target": float(np.linalg.norm(W - W1) / np.linalg.norm(W1))}
        return fl.entropy_fr_flow(W1), W, _config(args, fl.FlowConfig(dt=0.1)), finish

    if name in ("qr", "cholesky"):
        if name == "qr":
            A = mc.as_invertible(_require(X, "--input A"), "A")
            W1 = mc.sym(A.T @ A)
        else:
            W1 = mc.as_spd(_require(_load(args.w1) if args.w1 else X, "--input W"), "W")
        default = dc.auto_config_qr(W1)

        def finish(R):
            R = np.triu(R)
            if name == "qr":
                Q = np.linalg.solve(R.T, A.T).T
                return {"Q": Q, "R": R}, {
                    "factor": float(np.linalg.norm(A - Q @ R) / np.linalg.norm(A)),
                    "orthogonality": float(np.linalg.norm(Q.T @ Q - np.eye(len(Q))))}
            L = R.T
            return {"L": L}, {"factor": float(np.linalg.norm(L @ L.T - W1) / np.linalg.norm(W1))}
        return fl.qr_flow(W1), np.eye(W1.shape[0]), _config(args, fl.FlowConfig(dt=default.dt)), finish

    if name in ("brockett", "spectral", "svd"):
        if name == "svd":
            A = mc.as_invertible(_require(X, "--input A"), "A")
            W = mc.sym(A.T @ A)
        else:
            W = mc.as_spd(_require(X, "--input W"), "W")
        n = W.shape[0]
        N = _parse_diag(args.n_diag, n)
        mc.check_same_shape(W, np.diag(N))
        if name == "brockett":
            flow = fl.brockett_flow(W, N)
        else:
            flow = fl.pullback_entropy_flow(W, N)
        default = dc.auto_config_brockett(W, N) if name == "brockett" else dc.auto_config_spectral(W, N)
        default = fl.FlowConfig(dt=default.dt, integrator="lie-euler")

        def finish(Q):
            lam = np.diag(Q.T @ W @ Q).copy()
            res = {"diagonalisation": float(np.linalg.norm(Q.T @ W @ Q - np.diag(lam)) / np.linalg.norm(W)),
                   "orthogonality": float(np.linalg.norm(Q.T @ Q - np.eye(n)))}
            if name != "svd":
                return {"Q": Q, "Lambda": lam}, res
            Q2 = Q.T
            sqrtW = Q2.T @ np.diag(np.sqrt(lam)) @ Q2
            Q1 = np.linalg.solve(sqrtW.T, A.T).T
            U, S, V = Q1 @ Q2.T, np.sqrt(lam), Q2.T
            res["factor"] = float(np.linalg.norm(A - U @ np.diag(S) @ V.T) / np.linalg.norm(A))
            return {"U": U, "S": S, "V": V}, res
        return flow, np.eye(n), _config(args, default), finish

    if name == "double-bracket":
        S = mc.as_spd(_require(X, "--input Sigma"), "Sigma")
        N = _parse_diag(args.n_diag, S.shape[0])
        mc.check_same_shape(S, np.diag(N))
        c0 = np.asarray(mc.charpoly(S).coeffs)

        def finish(Sf):
            c = np.asarray(mc.charpoly(Sf).coeffs)
            off = Sf - np.diag(np.diag(Sf))
            return {"Sigma": Sf, "diagonal": np.diag(Sf).copy()}, {
                "charpoly_drift": float(np.max(np.abs(c - c0) / np.maximum(np.abs(c0), 1e-300))),
                "off_diagonal": float(np.linalg.norm(off))}
        return fl.double_bracket_flow(N), S, _config(args, fl.FlowConfig(dt=0.01)), finish

    if name == "eigen-horizontal":
        W = mc.as_spd(_require(X, "--input W"), "W")
        p1 = mc.charpoly(W)
        lam0 = fl.geometric_initial_diag(p1)
        if lam0.size > 1 and np.min(np.diff(lam0)) < 1e-3 * lam0[-1]:
            lam0 = fl.geometric_initial_diag(p1, match_trace=True)
        limit = fx.get("limit") if fx else None

        def finish(lam):
            return {"Lambda": np.sort(lam)}, {
                "charpoly": float(np.linalg.norm(np.asarray(p1.coeffs) - np.asarray(mc.charpoly(np.diag(lam)).coeffs)))}
        return (fl.horizontal_diag_flow(p1, limit=limit), lam0,
                _config(args, fl.FlowConfig(dt=0.01)), finish)

    raise InputError(f"unknown flow {name!r}")


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _state_columns(shape):
    if len(shape) == 1:
        return [f"x{i + 1}" for i in range(shape[0])]
    return [f"x{i + 1}{j + 1}" for i in range(shape[0]) for j in range(shape[1])]


def write_trajectory(traj, outdir: Path, fmt="csv"):
    cols = _state_columns(traj.states.shape[1:])
    flat = traj.states.reshape(len(traj.times), -1)
    metric_cols = ["t", "functional", "dist2_to_limit", "rhs_norm"]
    metric_rows = np.column_stack([traj.times, traj.functional, traj.dist2, traj.rhs_norm])
    if fmt == "json":
        fileio.write_json(outdir / "trajectory.json",
                          {"columns": ["t"] + cols, "rows": np.column_stack([traj.times, flat])})
        fileio.write_json(outdir / "metrics.json", {"columns": metric_cols, "rows": metric_rows})
    else:
        fileio.write_table_csv(outdir / "trajectory.csv", ["t"] + cols, np.column_stack([traj.times, flat]))
        fileio.write_table_csv(outdir / "metrics.csv", metric_cols, metric_rows)


def cmd_run(args) -> int:
    try:
        flow, state0, cfg, finish = build_run(args)
    except (GeoflowError, KeyError, ValueError) as exc:
        return _input_error(exc)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    status, message = "converged", None
    try:
        traj = fl.integrate(flow, state0, cfg)
    except FlowDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        fileio.write_json(outdir / "result.json", {
            "flow": args.flow, "converged": False, "status": "diverged", "message": str(exc),
            "step": exc.step})
        return EXIT_NOT_CONVERGED
    except ConfigurationError as exc:
        return _input_error(exc)
    if not traj.converged:
        status = "max_steps"
        message = f"not converged after {traj.steps} steps (|rhs| = {traj.rhs_norm[-1]:.3e})"
    factors, residuals = finish(traj.final)
    write_trajectory(traj, outdir, args.format)
    fileio.write_json(outdir / "result.json", {
        "flow": args.flow,
        "converged": traj.converged,
        "status": status,
        "steps": traj.steps,
        "final_time": float(traj.times[-1]),
        "rhs_norm": float(traj.rhs_norm[-1]),
        "functional": float(traj.functional[-1]),
        "config": {"dt": cfg.dt, "max_steps": cfg.max_steps, "grad_tol": cfg.grad_tol,
                   "integrator": cfg.integrator.value, "record_every": cfg.record_every},
        "factors": factors,
        "residuals": residuals,
    })
    if message:
        print(message, file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"{args.flow}: converged in {traj.steps} steps (t = {traj.times[-1]:g})")
    return EXIT_OK


def _input_error(exc) -> int:
    inv = getattr(exc, "invariant", None)
    extra = f" [violated invariant: {inv}]" if inv else ""
    msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    print(f"error: {msg}{extra}", file=sys.stderr)
    return EXIT_INPUT


# --------------------------------------------------------------------------
# figure reproduction
# --------------------------------------------------------------------------

def _element_series(traj, labels):
    flat = traj.states.reshape(len(traj.times), -1)
    return [Series(lab, traj.times, flat[:, k]) for k, lab in labels]


def repro(fig, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    if fig in ("fig2", "fig3"):
        fx = fixtures.paper_polar()
        traj = fl.integrate(fl.polar_vertical_flow(fx["Sigma1"]), fx["A"],
                            fl.FlowConfig(dt=0.1, integrator="lie-euler", max_steps=2000))
        if fig == "fig2":
            cols = ["b11", "b12", "b21", "b22"]
            data = np.column_stack([traj.times, traj.states.reshape(len(traj.times), -1)])
            series = _element_series(traj, list(enumerate(cols)))
            title, ylabel, logy = "Vertical flow: elements of B(t)", "B(t)", False
        else:
            cols = ["dist2_to_limit"]
            data = np.column_stack([traj.times, traj.dist2])
            series = [Series("d^2(B(t), P_inf)", traj.times, traj.dist2)]
            title, ylabel, logy = "Vertical flow: convergence", "squared distance", True
    elif fig in ("fig4", "fig5"):
        fx = fixtures.paper_polar()
        traj = fl.integrate(fl.polar_lifted_flow(fx["Sigma1"]), np.eye(2),
                            fl.FlowConfig(dt=0.1, max_steps=2000))
        if fig == "fig4":
            cols = ["p11", "p12", "p22"]
            flat = traj.states.reshape(len(traj.times), -1)
            data = np.column_stack([traj.times, flat[:, [0, 1, 3]]])
            series = _element_series(traj, [(0, "p11"), (1, "p12"), (3, "p22")])
            title, ylabel, logy = "Lifted flow: elements of P(t)", "P(t)", False
        else:
            cols = ["minus_functional", "dist2_to_limit"]
            data = np.column_stack([traj.times, -traj.functional, traj.dist2])
            series = [Series("-F(P(t))", traj.times, -traj.functional),
                      Series("d^2(P(t), P_inf)", traj.times, traj.dist2)]
            title, ylabel, logy = "Lifted flow: convergence", "value", True
    elif fig in ("fig6", "fig7"):
        fx = fixtures.paper_qr()
        traj = fl.integrate(fl.qr_flow(fx["W1"]), np.eye(2), fl.FlowConfig(dt=0.1, max_steps=2000))
        if fig == "fig6":
            cols = ["r11", "r12", "r22"]
            flat = traj.states.reshape(len(traj.times), -1)
            data = np.column_stack([traj.times, flat[:, [0, 1, 3]]])
            series = _element_series(traj, [(0, "r11"), (1, "r12"), (3, "r22")])
            title, ylabel, logy = "QR flow: elements of R(t)", "R(t)", False
        else:
            decay = np.exp(-2.0 * traj.times)
            ref_f, ref_d = -traj.functional[0] * decay, traj.dist2[0] * decay
            cols = ["minus_functional", "dist2_to_limit", "bound_functional", "bound_dist2"]
            data = np.column_stack([traj.times, -traj.functional, traj.dist2, ref_f, ref_d])
            series = [Series("-F(R(t))", traj.times, -traj.functional),
                      Series("d^2(R(t), R_inf)", traj.times, traj.dist2),
                      Series("-F(R(0)) exp(-2t)", traj.times, ref_f, dashed=True),
                      Series("d^2(R(0), R_inf) exp(-2t)", traj.times, ref_d, dashed=True)]
            title, ylabel, logy = "QR flow: convergence and exp(-2t) bounds", "value", True
    elif fig in ("fig8", "fig9"):
        fx = fixtures.paper_eigen()
        p1 = mc.charpoly(fx["W1"])
        traj = fl.integrate(fl.horizontal_diag_flow(p1, limit=fx["limit"]), fl.geometric_initial_diag(p1),
                            fl.FlowConfig(dt=0.01, record_every=10))
        if fig == "fig8":
            cols = ["lambda1", "lambda2", "lambda3"]
            data = np.column_stack([traj.times, traj.states])
            series = _element_series(traj, list(enumerate(cols)))
            title, ylabel, logy = "Horizontal flow: diagonal entries", "lambda(t)", False
        else:
            cols = ["functional"]
            data = np.column_stack([traj.times, traj.functional])
            series = [Series("F(Lambda(t))", traj.times, traj.functional)]
            title, ylabel, logy = "Horizontal flow: convergence", "F", True
    else:
        raise InputError(f"unknown figure {fig!r}; choose from {', '.join(FIGURES)}")
    fileio.write_table_csv(outdir / f"{fig}.csv", ["t"] + cols, data)
    line_plot(series, outdir / f"{fig}.svg", title=title, ylabel=ylabel, logy=logy)
    return outdir / f"{fig}.csv", outdir / f"{fig}.svg"


def cmd_repro(args) -> int:
    figs = FIGURES if args.figure == "all" else (args.figure,)
    for fig in figs:
        if fig not in FIGURES:
            print(f"error: unknown figure {fig!r}; choose from {', '.join(FIGURES)} or all",
                  file=sys.stderr)
            return EXIT_INPUT
    for fig in figs:
        csv_path, svg_path = repro(fig, Path(args.output_dir))
        print(f"{fig}: {csv_path} {svg_path}")
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        rows = checks.run_suite(args.suite, seed=args.seed, threads=args.threads)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_INPUT
    width = max(len(r.name) for r in rows)
    for r in rows:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.suite:<12} {r.name:<{width}}  worst={r.worst:.3e}  tol={r.tol:.0e}")
    ok = all(r.passed for r in rows)
    print("all checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geoflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a flow and write trajectory, metrics and result files")
    r.add_argument("flow", choices=FLOWS)
    src = r.add_mutually_exclusive_group()
    src.add_argument("--fixture", choices=sorted(fixtures.FIXTURES), help="built-in example data")
    r.add_argument("--input", help="primary matrix file (.json or .csv); overrides the fixture")
    r.add_argument("--w1", help="target precision W1 (entropy-fr, cholesky)")
    r.add_argument("--sigma0", help="reference covariance Sigma0 (polar flows)")
    r.add_argument("--sigma1", help="target covariance Sigma1 (entropy-sym, polar flows)")
    r.add_argument("--n-diag", dest="n_diag", help="diagonal N as a matrix file or 'n1,n2,...'")
    r.add_argument("--dt", type=float)
    r.add_argument("--steps", type=int, help="maximum number of steps")
    r.add_argument("--tol", type=float, help="stop when |rhs|_F <= tol")
    r.add_argument("--integrator", choices=[i.value for i in fl.Integrator])
    r.add_argument("--record-every", dest="record_every", type=int)
    r.add_argument("--output-dir", dest="output_dir", default="geoflow-out")
    r.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="format of the trajectory and metrics tables")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("repro", help="regenerate the data and plot of a worked-example figure")
    f.add_argument("figure", help=f"one of {', '.join(FIGURES)} or all")
    f.add_argument("--output-dir", dest="output_dir", default="geoflow-figures")
    f.set_defaults(func=cmd_repro)

    c = sub.add_parser("check", help="run randomised invariant suites")
    c.add_argument("suite", choices=list(checks.SUITES) + ["all"])
    c.add_argument("--seed", type=int, default=None, help="overrides GEOFLOW_SEED")
    c.add_argument("--threads", type=int, default=1)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
