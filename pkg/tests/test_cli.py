"""End-to-end tests of the command-line interface, run in process through
main(argv). Success paths check output files and exit code 0; error paths
check exit codes 1 (runtime) and 2 (usage) and the message text.
"""

import json
import math

import numpy as np
import pytest

from privdens.cli import main
from privdens.densities import density_from_json_dict
from privdens.estimator import ProjectionEstimate
from privdens.fourier import CoefficientGrid


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def test_fit_single_point(tmp_path, capsys):
    data = _write(tmp_path / "pts.csv", "0.5\n")
    out = tmp_path / "est.json"
    assert main(["fit", data, "--M", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    est = ProjectionEstimate.from_json_dict(doc)
    assert est.cutoff == 1 and est.n == 1 and est.sigma == 0.0
    # phi_k(0.5) = e^{i pi k}, so the conjugate empirical coefficients are
    # exactly (-1, 1, -1)
    assert np.allclose(est.coefficients.values, [-1.0, 1.0, -1.0], atol=1e-15)
    text = capsys.readouterr().out
    assert "budget ledger" in text and "no privacy mechanism" in text


def test_fit_deterministic_bytes(tmp_path):
    rows = "\n".join(f"{x:.6f}" for x in np.random.default_rng(0).random(50))
    data = _write(tmp_path / "pts.csv", rows + "\n")
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["fit", data, "--M", "3", "--rho", "1.0", "--seed", "9",
                 "--out", str(out1)]) == 0
    assert main(["fit", data, "--M", "3", "--rho", "1.0", "--seed", "9",
                 "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_fit_records_sigma(tmp_path):
    rows = "\n".join(f"{x:.8f}" for x in np.random.default_rng(1).random(1000))
    data = _write(tmp_path / "pts.csv", rows + "\n")
    out = tmp_path / "est.json"
    assert main(["fit", data, "--rho", "1.0", "--M", "7", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    # sigma = 2 sqrt((2M+1)^d) / (n sqrt(rho)) = 2 sqrt(15) / 1000
    assert doc["sigma"] == pytest.approx(2.0 * math.sqrt(15.0) / 1000.0, rel=1e-12)
    assert doc["sigma"] == pytest.approx(0.0077460, rel=1e-4)
    assert doc["rho_spent"] == 1.0


def test_fit_beta_cutoff_without_privacy(tmp_path):
    rows = "\n".join(f"{x:.8f}" for x in np.random.default_rng(2).random(1024))
    data = _write(tmp_path / "pts.csv", rows + "\n")
    out = tmp_path / "est.json"
    assert main(["fit", data, "--beta", "1.0", "--out", str(out)]) == 0
    est = ProjectionEstimate.from_json_dict(json.loads(out.read_text()))
    # floor(1024^(1/3)) = 10
    assert est.cutoff == 10 and est.sigma == 0.0


def test_fit_adaptive_writes_trace_and_ledger(tmp_path, capsys):
    rows = "\n".join(f"{x:.8f}" for x in np.random.default_rng(3).random(300))
    data = _write(tmp_path / "pts.csv", rows + "\n")
    out, trace = tmp_path / "est.json", tmp_path / "trace.json"
    code = main(["fit", data, "--adaptive", "lepskii", "--rho", "2.0",
                 "--seed", "4", "--out", str(out), "--trace", str(trace)])
    assert code == 0
    tdoc = json.loads(trace.read_text())
    assert tdoc["method"] == "lepskii" and "candidates" not in tdoc
    edoc = json.loads(out.read_text())
    assert edoc["rho_spent"] <= 2.0 + 1e-12
    text = capsys.readouterr().out
    assert "selected M=" in text and "total spent" in text


def test_fit_malformed_row_names_line(tmp_path, capsys):
    data = _write(tmp_path / "pts.csv", "0.5\nnot-a-number\n0.25\n")
    code = main(["fit", data, "--M", "1", "--out", str(tmp_path / "e.json")])
    assert code == 1
    err = capsys.readouterr().err
    assert ":2:" in err and "malformed" in err


def test_fit_out_of_range_coordinate(tmp_path, capsys):
    data = _write(tmp_path / "pts.csv", "0.5\n1.5\n")
    assert main(["fit", data, "--M", "1", "--out", str(tmp_path / "e.json")]) == 1
    assert "[0,1]" in capsys.readouterr().err


def test_fit_ragged_columns_rejected(tmp_path, capsys):
    data = _write(tmp_path / "pts.csv", "0.5,0.5\n0.25\n")
    assert main(["fit", data, "--M", "1", "--out", str(tmp_path / "e.json")]) == 1
    assert ":2:" in capsys.readouterr().err


def test_fit_usage_errors(tmp_path, capsys):
    data = _write(tmp_path / "pts.csv", "0.5\n")
    # no cut-off choice at all
    assert main(["fit", data, "--out", str(tmp_path / "e.json")]) == 2
    assert "usage error" in capsys.readouterr().err
    # adaptive selection without a budget
    assert main(["fit", data, "--adaptive", "lepskii",
                 "--out", str(tmp_path / "e.json")]) == 2
    assert "--rho" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def test_sample_uniform_deterministic(tmp_path):
    dens = tmp_path / "u.json"
    assert main(["generate-density", "--kind", "uniform", "--d", "1",
                 "--out", str(dens)]) == 0
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    assert main(["sample", str(dens), "--n", "3", "--seed", "7",
                 "--out", str(out1)]) == 0
    assert main(["sample", str(dens), "--n", "3", "--seed", "7",
                 "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = out1.read_text().strip().splitlines()
    assert len(rows) == 3
    raw = np.random.default_rng(7).random((3, 1))
    assert np.allclose([float(r) for r in rows], raw[:, 0], rtol=0, atol=1e-16)


def test_sample_from_noisy_estimate(tmp_path):
    rows = "\n".join(f"{x:.8f}" for x in np.random.default_rng(5).random(400))
    data = _write(tmp_path / "pts.csv", rows + "\n")
    est = tmp_path / "est.json"
    assert main(["fit", data, "--M", "2", "--rho", "0.5", "--seed", "1",
                 "--out", str(est)]) == 0
    out = tmp_path / "resampled.csv"
    assert main(["sample", str(est), "--n", "50", "--seed", "2",
                 "--out", str(out)]) == 0
    pts = np.array([float(r) for r in out.read_text().strip().splitlines()])
    assert len(pts) == 50 and pts.min() >= 0.0 and pts.max() <= 1.0


def test_sample_degenerate_estimate_rejected(tmp_path, capsys):
    est = ProjectionEstimate(
        CoefficientGrid(1, 0, np.array([-1.0 + 0.0j])), n=10
    )
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(est.to_json_dict()), encoding="utf-8")
    assert main(["sample", str(path), "--n", "5", "--out",
                 str(tmp_path / "s.csv")]) == 1
    assert "degenerate" in capsys.readouterr().err


def test_generate_sample_fit_roundtrip(tmp_path):
    dens = tmp_path / "truth.json"
    assert main(["generate-density", "--kind", "trig", "--beta", "2.0",
                 "--M-truth", "6", "--seed", "21", "--out", str(dens)]) == 0
    truth = density_from_json_dict(json.loads(dens.read_text()))
    n = 100_000
    pts = tmp_path / "pts.csv"
    assert main(["sample", str(dens), "--n", str(n), "--seed", "22",
                 "--out", str(pts)]) == 0
    est_path = tmp_path / "est.json"
    assert main(["fit", str(pts), "--M", "6", "--out", str(est_path)]) == 0
    est = ProjectionEstimate.from_json_dict(json.loads(est_path.read_text()))
    err = np.abs(est.coefficients.values - truth.coefficients.values)
    assert err.max() <= 4.0 / math.sqrt(n)


def test_generate_packing_density(tmp_path):
    dens = tmp_path / "pack.json"
    assert main(["generate-density", "--kind", "packing", "--m", "4",
                 "--beta", "1.0", "--theta", "1010", "--out", str(dens)]) == 0
    doc = json.loads(dens.read_text())
    assert doc["kind"] == "packing"
    back = density_from_json_dict(doc)
    assert list(back.theta) == [1, 0, 1, 0]


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def test_experiment_minimal_config(tmp_path):
    dens = tmp_path / "truth.json"
    assert main(["generate-density", "--kind", "trig", "--beta", "1.0",
                 "--M-truth", "3", "--seed", "5", "--out", str(dens)]) == 0
    cfg = {
        "density": json.loads(dens.read_text()),
        "n": 128,
        "rho": 1.0,
        "mode": "oracle",
        "beta": 1.0,
        "replicates": 1,
        "seed": 0,
        "d": 1,
    }
    cfg_path = _write(tmp_path / "cfg.json", json.dumps(cfg))
    out_dir = tmp_path / "runs"
    assert main(["experiment", cfg_path, "--out-dir", str(out_dir)]) == 0
    csv_lines = (out_dir / "sweep.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 2  # header + one data row
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["sweep"]["slope"] is None
    assert len(summary["sweep"]["cells"]) == 1


def test_experiment_unknown_key_rejected(tmp_path, capsys):
    cfg_path = _write(tmp_path / "cfg.json", json.dumps({"zap": 1}))
    assert main(["experiment", cfg_path, "--out-dir", str(tmp_path / "r")]) == 1
    err = capsys.readouterr().err
    assert "zap" in err


# ---------------------------------------------------------------------------
# rate-table and print-config
# ---------------------------------------------------------------------------


def test_rate_table_stdout(capsys):
    assert main(["rate-table", "--n", "1000", "--rho", "0.1", "--beta",
                 "1.0", "--d", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,rho,beta,d,rate,regime"
    cols = lines[1].split(",")
    expected = max(1000.0 ** (-2.0 / 3.0), (1000.0 * math.sqrt(0.1)) ** (-1.0))
    assert float(cols[4]) == pytest.approx(expected, rel=1e-12)
    assert cols[5] in ("sampling", "privacy")


def test_rate_table_grid_size(tmp_path):
    out = tmp_path / "rates.csv"
    assert main(["rate-table", "--n", "100", "1000", "--rho", "0.1", "1.0",
                 "--beta", "1.0", "2.0", "--out", str(out)]) == 0
    assert len(out.read_text().strip().splitlines()) == 1 + 8


def test_print_config_is_valid(capsys):
    assert main(["print-config"]) == 0
    doc = json.loads(capsys.readouterr().out)
    from privdens.experiments import ExperimentConfig

    cfg = ExperimentConfig.from_dict(doc)
    assert cfg.mode == "oracle"


# ---------------------------------------------------------------------------
# parser-level usage errors
# ---------------------------------------------------------------------------


def test_no_arguments_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
