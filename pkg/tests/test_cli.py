import subprocess
import sys

import numpy as np
import pytest

from phasetopo.cli import main, read_config, UsageError
from phasetopo.io import parse_edges, read_panel_csv


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def consensus_panel(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--fixture", "consensus-5", "--samples", 1_000_000, "--seed", 0,
               "--output-dir", out, "--quiet") == 0
    return out


def test_simulate_outputs(consensus_panel):
    panel = read_panel_csv(consensus_panel / "panel.csv")
    assert panel.T == 1_000_000 and panel.n == 5 and panel.dt == 1.0
    assert (consensus_panel / "truth.txt").read_text() == "1 2\n2 3\n3 4\n4 5\n"
    meta = (consensus_panel / "simulate.meta").read_text()
    assert "fixture = consensus-5" in meta and "# model_hash:" in meta


def test_infer_edge_list_matches_truth(consensus_panel, tmp_path):
    assert run("infer", "--input", consensus_panel / "panel.csv", "--rho", 0.05,
               "--output-dir", tmp_path, "--quiet") == 0
    assert (tmp_path / "edges.txt").read_bytes() == (consensus_panel / "truth.txt").read_bytes()
    assert {"report.txt", "filters.txt", "infer.meta"} <= {p.name for p in tmp_path.iterdir()}


@pytest.mark.xfail(strict=True, reason="at rho = 1e-3 the sampling floor of non-kin filter "
                                       "magnitudes at T = 1e6 exceeds the threshold")
def test_infer_edge_list_matches_truth_at_default_threshold(consensus_panel, tmp_path):
    assert run("infer", "--input", consensus_panel / "panel.csv", "--output-dir", tmp_path,
               "--quiet") == 0
    assert (tmp_path / "edges.txt").read_bytes() == (consensus_panel / "truth.txt").read_bytes()


def test_oracle_spouse_pair(tmp_path):
    assert run("oracle", "--fixture", "consensus-5", "--output-dir", tmp_path, "--quiet") == 0
    rows = (tmp_path / "oracle-pairs.csv").read_text().splitlines()
    row = [r for r in rows if r.startswith("2,4,")][0].split(",")
    assert row[2] == "strict-spouse-pi"
    assert float(row[4]) >= np.pi - 1e-9
    assert parse_edges((tmp_path / "oracle-topology-edges.txt").read_text()) == \
        parse_edges((tmp_path / "truth.txt").read_text())
    assert (tmp_path / "oracle-moral-edges.txt").read_text() == \
        (tmp_path / "true-moral-edges.txt").read_text()


def test_baseline_rc_has_error(tmp_path):
    assert run("baseline", "--fixture", "rc-5zone", "--samples", 1_000_000, "--output-dir",
               tmp_path, "--quiet") == 0
    lines = (tmp_path / "summary.txt").read_text().splitlines()
    assert lines[0] == "method,edges,relative_error"
    errors = {r.split(",")[0]: float(r.split(",")[2]) for r in lines[1:]}
    assert errors["glasso"] > 0 and errors["glasso-sign"] > 0
    assert (tmp_path / "edges-glasso-sign.txt").exists()


def test_sweep_and_sidecar_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("sweep", "--fixture", "consensus-path-3", "--samples", "2000,4000", "--lag-F", 4,
               "--output-dir", a, "--quiet") == 0
    text = (a / "sweep.csv").read_text()
    assert text.splitlines()[0] == "method,T,relative_error,pruning_effectiveness"
    assert len(text.splitlines()) == 1 + 2 * 4
    cfg = (a / "sweep.meta").read_text().replace(f"output_dir = {a}", f"output_dir = {b}")
    (tmp_path / "rerun.cfg").write_text(cfg)
    assert run("sweep", "--config", tmp_path / "rerun.cfg") == 0
    assert (b / "sweep.csv").read_bytes() == (a / "sweep.csv").read_bytes()


def test_simulate_is_deterministic(tmp_path):
    for d in ("x", "y"):
        assert run("simulate", "--fixture", "rc-5zone", "--samples", 3000, "--seed", 4,
                   "--output-dir", tmp_path / d, "--quiet") == 0
    assert (tmp_path / "x" / "panel.csv").read_bytes() == (tmp_path / "y" / "panel.csv").read_bytes()


def test_explicit_model_from_config(tmp_path):
    (tmp_path / "b.csv").write_text("0,2\n2,0\n")
    (tmp_path / "run.cfg").write_text(
        "family = swing\ncoupling = {}\ninertia = 1.0\ndamping = 1.0\nground = 0.2\n"
        "dt = 0.1\nsamples = 500\n".format(tmp_path / "b.csv"))
    assert run("simulate", "--config", tmp_path / "run.cfg", "--output-dir", tmp_path / "o",
               "--quiet") == 0
    assert read_panel_csv(tmp_path / "o" / "panel.csv").dt == pytest.approx(0.1)
    assert run("oracle", "--config", tmp_path / "run.cfg", "--output-dir", tmp_path / "p",
               "--quiet") == 0


def test_exit_codes(tmp_path):
    out = tmp_path / "never"
    assert run("infer", "--input", tmp_path / "missing.csv", "--output-dir", out) == 2
    assert not out.exists()
    assert run("frobnicate", "--output-dir", out) == 1
    assert run("infer", "--bogus", "--output-dir", out) == 1
    assert run("sweep", "--fixture", "nope", "--samples", 10, "--output-dir", out) == 1
    assert run("sweep", "--fixture", "consensus-5", "--samples", "100,10", "--output-dir", out) == 1
    assert run("infer", "--fixture", "consensus-5", "--samples", 50, "--output-dir", out) == 2
    (tmp_path / "bad.csv").write_text("t,x1,x2\n0,1,2\n1,2\n")
    assert run("infer", "--input", tmp_path / "bad.csv", "--output-dir", out) == 2
    b = tmp_path / "b.csv"
    b.write_text("0,1\n1,0\n")
    (tmp_path / "u.cfg").write_text(f"family = swing\ncoupling = {b}\ninertia = 1\ndamping = 0\n"
                                    "samples = 100\n")
    assert run("simulate", "--config", tmp_path / "u.cfg", "--output-dir", out) == 3
    assert not out.exists()


def test_config_errors(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("rho = 0.1\n\nbanana = 3\n")
    with pytest.raises(UsageError, match=":3:"):
        read_config(cfg)
    cfg.write_text("rho 0.1\n")
    with pytest.raises(UsageError):
        read_config(cfg)
    cfg.write_text("rho = abc\n")
    assert run("oracle", "--config", cfg, "--fixture", "consensus-5", "--output-dir", tmp_path) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "phasetopo", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("phasetopo ")
