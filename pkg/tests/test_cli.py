import csv
import json

import numpy as np
import pytest

from geoflow import cli, fileio


def _run(tmp_path, *args, out="out"):
    code = cli.main(["run", *args, "--output-dir", str(tmp_path / out)])
    return code, tmp_path / out


def _result(outdir):
    return json.loads((outdir / "result.json").read_text())


@pytest.mark.parametrize("flow, fixture", [
    ("polar-vertical", "paper-polar"),
    ("polar-lifted", "paper-polar"),
    ("entropy-sym", "paper-polar"),
    ("entropy-fr", "paper-qr"),
    ("qr", "paper-qr"),
    ("cholesky", "paper-qr"),
    ("brockett", "paper-polar"),
    ("spectral", "paper-polar"),
    ("svd", "paper-polar"),
    ("double-bracket", "paper-eigen"),
    ("eigen-horizontal", "paper-eigen"),
])
def test_run_every_flow_on_fixture(tmp_path, flow, fixture):
    code, out = _run(tmp_path, flow, "--fixture", fixture)
    assert code == cli.EXIT_OK
    res = _result(out)
    assert res["converged"] and res["status"] == "converged"
    for name in ("trajectory.csv", "metrics.csv"):
        with open(out / name) as fh:
            rows = list(csv.reader(fh))
        assert len(rows) >= 2
        assert rows[0][0] == "t"
    assert all(v <= 1e-6 for v in res["residuals"].values())


def test_run_polar_lifted_factors(tmp_path):
    code, out = _run(tmp_path, "polar-lifted", "--fixture", "paper-polar")
    P = np.array(_result(out)["factors"]["P"])
    assert np.allclose(P, [[3.0, -1.0], [-1.0, 2.0]], atol=1e-8)


def test_run_qr_factors(tmp_path):
    code, out = _run(tmp_path, "qr", "--fixture", "paper-qr")
    R = np.array(_result(out)["factors"]["R"])
    assert np.allclose(R, [[3.0, -1.0], [0.0, 2.0]], atol=1e-8)


def test_run_eigen_horizontal_values(tmp_path):
    code, out = _run(tmp_path, "eigen-horizontal", "--fixture", "paper-eigen")
    lam = np.array(_result(out)["factors"]["Lambda"])
    assert np.allclose(np.sort(lam), [0.5, 1.0, 5.0], atol=1e-5)


def test_entropy_fr_at_the_target_is_a_single_row(tmp_path):
    W1 = np.array([[2.0, 0.5], [0.5, 1.0]])
    fileio.write_matrix_json(tmp_path / "w1.json", W1)
    code, out = _run(tmp_path, "entropy-fr", "--w1", str(tmp_path / "w1.json"),
                     "--input", str(tmp_path / "w1.json"))
    assert code == cli.EXIT_OK
    assert _result(out)["steps"] == 0
    assert len((out / "trajectory.csv").read_text().splitlines()) == 2


def test_reruns_are_byte_identical(tmp_path):
    _run(tmp_path, "qr", "--fixture", "paper-qr", out="a")
    _run(tmp_path, "qr", "--fixture", "paper-qr", out="b")
    for name in ("trajectory.csv", "metrics.csv", "result.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_json_output_format(tmp_path):
    code, out = _run(tmp_path, "qr", "--fixture", "paper-qr", "--format", "json")
    assert code == cli.EXIT_OK
    traj = json.loads((out / "trajectory.json").read_text())
    assert traj["columns"][:2] == ["t", "x11"]
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["columns"] == ["t", "functional", "dist2_to_limit", "rhs_norm"]


def test_csv_matrix_input(tmp_path):
    fileio.write_matrix_csv(tmp_path / "a.csv", np.array([[2.0, 1.0], [0.0, 3.0]]))
    code, out = _run(tmp_path, "polar-lifted", "--input", str(tmp_path / "a.csv"))
    assert code == cli.EXIT_OK


def test_input_errors_exit_1(tmp_path, capsys):
    code, _ = _run(tmp_path, "qr", "--input", str(tmp_path / "missing.json"))
    assert code == cli.EXIT_INPUT
    fileio.write_matrix_json(tmp_path / "sing.json", np.array([[1.0, 2.0], [2.0, 4.0]]))
    code, _ = _run(tmp_path, "polar-lifted", "--input", str(tmp_path / "sing.json"))
    assert code == cli.EXIT_INPUT
    assert "violated invariant: invertible" in capsys.readouterr().err
    fileio.write_matrix_json(tmp_path / "ind.json", np.diag([1.0, -1.0]))
    code, _ = _run(tmp_path, "cholesky", "--w1", str(tmp_path / "ind.json"))
    assert code == cli.EXIT_INPUT
    assert "positive definite" in capsys.readouterr().err
    assert cli.main(["run", "no-such-flow"]) == cli.EXIT_INPUT
    assert cli.main([]) == cli.EXIT_INPUT


def test_not_converged_exits_2(tmp_path):
    code, out = _run(tmp_path, "qr", "--fixture", "paper-qr", "--steps", "5")
    assert code == cli.EXIT_NOT_CONVERGED
    assert _result(out)["status"] == "max_steps"


def test_divergence_exits_2(tmp_path):
    code, out = _run(tmp_path, "qr", "--fixture", "paper-qr", "--dt", "50")
    assert code == cli.EXIT_NOT_CONVERGED
    res = _result(out)
    assert res["status"] == "diverged" and res["step"] >= 1


def test_repro_fig7_bounds(tmp_path):
    assert cli.main(["repro", "fig7", "--output-dir", str(tmp_path)]) == cli.EXIT_OK
    with open(tmp_path / "fig7.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "minus_functional", "dist2_to_limit", "bound_functional", "bound_dist2"]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    assert np.all(data[:, 1] <= data[:, 3] + 1e-6)
    assert np.all(data[:, 2] <= data[:, 4] + 1e-6)
    svg = (tmp_path / "fig7.svg").read_text()
    assert svg.startswith("<svg") or "<svg" in svg[:200]
    assert "stroke-dasharray" in svg


def test_repro_all_and_unknown(tmp_path):
    assert cli.main(["repro", "all", "--output-dir", str(tmp_path)]) == cli.EXIT_OK
    for fig in cli.FIGURES:
        assert (tmp_path / f"{fig}.csv").exists() and (tmp_path / f"{fig}.svg").exists()
    assert cli.main(["repro", "fig1", "--output-dir", str(tmp_path)]) == cli.EXIT_INPUT


@pytest.mark.parametrize("suite", ["gradients", "isospectral"])
def test_check_suites_pass(suite, capsys):
    assert cli.main(["check", suite, "--seed", "7"]) == cli.EXIT_OK
    assert "all checks passed" in capsys.readouterr().out


def test_check_unknown_suite():
    assert cli.main(["check", "nonsense"]) == cli.EXIT_INPUT
