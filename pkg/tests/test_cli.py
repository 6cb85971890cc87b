import csv
import subprocess
import sys

import numpy as np
import pytest

from chebfit.cli import main
from chebfit.designs import GaussianDesign, HalfOnes, UniformNoise, make_dataset
from chebfit.estimators import fit_chebyshev_lp
from chebfit.model import Dataset, write_dataset

RATE = """[experiment]
kind = rate
design = gaussian
n_grid = 30, 50
p_grid = 4
reps = 3
seed = 9
"""


def _write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_rate_command_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["rate", "--config", _write(tmp_path, RATE), "--out-dir", str(out)]) == 0
    for f in ("records.csv", "timings.csv", "summary.csv", "manifest.txt", "rate.svg"):
        assert (out / f).exists()
    assert len(_rows(out / "records.csv")) == 6
    man = (out / "manifest.txt").read_text()
    assert "config_sha256 = " in man and "seed = 9" in man and "numpy = " in man
    assert "slope=" in capsys.readouterr().out


def test_global_flags_before_or_after_command(tmp_path):
    cfg = _write(tmp_path, RATE)
    assert main(["--seed", "3", "--out-dir", str(tmp_path / "a"), "rate", "--config", cfg]) == 0
    assert main(["rate", "--config", cfg, "--seed", "3", "--out-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "records.csv").read_bytes() == (tmp_path / "b" / "records.csv").read_bytes()
    assert "seed = 3" in (tmp_path / "a" / "manifest.txt").read_text()


def test_jobs_do_not_change_records(tmp_path):
    cfg = _write(tmp_path, RATE)
    assert main(["rate", "--config", cfg, "--jobs", "1", "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["rate", "--config", cfg, "--jobs", "4", "--out-dir", str(tmp_path / "b")]) == 0
    for f in ("records.csv", "summary.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


@pytest.mark.parametrize("text", [RATE.replace("reps = 3", "reps = -1"), RATE + "bogus = 1\n",
                                  RATE.replace("kind = rate", "kind = containment")])
def test_config_errors_exit_2(tmp_path, text, capsys):
    assert main(["rate", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["rate", "--config", str(tmp_path / "absent.ini")]) == 2


def test_all_cells_aborted_exit_3(tmp_path, capsys):
    text = RATE + "cell_budget_s = 0\n"
    assert main(["rate", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path / "o")]) == 3
    assert "aborted" in capsys.readouterr().err


def test_containment_command(tmp_path):
    text = "[experiment]\nkind = containment\ndesign = rademacher\np_grid = 2\n[containment]\nm_grid = 20, 600\ntrials = 30\n"
    assert main(["containment", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "containment.csv")
    assert [r["m"] for r in rows] == ["20", "600"] and float(rows[0]["bound"]) == 1.0


def test_bounds_command(tmp_path, capsys):
    assert main(["bounds", "--design", "orthonormal", "--n", "100", "1000", "--p", "2", "--format", "csv",
                 "--out-dir", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("design,p,n,bound_value")
    assert len(lines) == 3
    b100, b1000 = (float(line.split(",")[3]) for line in lines[1:])
    assert b100 == pytest.approx(10 * b1000)
    assert (tmp_path / "bounds.csv").exists()
    assert main(["bounds", "--design", "general_moment", "--n", "100", "--p", "2"]) == 2
    assert main(["bounds", "--design", "general_moment", "--n", "100", "--p", "2", "--C", "3",
                 "--lambda-min", "1"]) == 0
    assert main(["bounds", "--design", "density", "--n", "100", "--p", "2", "--xi", "0.1", "--upsilon", "3"]) == 0


def _data(tmp_path):
    ds = make_dataset(GaussianDesign.identity(4), HalfOnes(), UniformNoise(1.0), 40, seed=7)
    path = tmp_path / "d.csv"
    write_dataset(ds, path)
    return ds, path


@pytest.mark.parametrize("method,extra", [("linf", []), ("irls", []), ("cls", ["--a", "1.0"]),
                                          ("cheb-lasso", ["--lambda", "0.01"]), ("lasso", ["--lambda", "0.01"]),
                                          ("ols", [])])
def test_fit_each_method(tmp_path, method, extra):
    ds, path = _data(tmp_path)
    out = tmp_path / "fit.csv"
    assert main(["fit", "--data", str(path), "--method", method, "--out", str(out), *extra]) == 0
    rows = _rows(out)
    assert [r["term"] for r in rows] == ["x1", "x2", "x3", "x4", "a_hat"]
    est = np.array([float(r["estimate"]) for r in rows[:4]])
    assert np.linalg.norm(est - ds.truth.beta_star) < 1.0
    if method == "linf":
        np.testing.assert_array_equal(est, fit_chebyshev_lp(ds).beta_hat)


def test_fit_errors(tmp_path):
    _, path = _data(tmp_path)
    out = str(tmp_path / "f.csv")
    assert main(["fit", "--data", str(path), "--method", "lasso", "--out", out]) == 2
    assert main(["fit", "--data", str(path), "--method", "cls", "--out", out]) == 2
    assert main(["fit", "--data", str(tmp_path / "nope.csv"), "--method", "ols", "--out", out]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["fit", "--data", str(bad), "--method", "ols", "--out", out]) == 2
    # an infeasible slab is a solver failure
    assert main(["fit", "--data", str(path), "--method", "cls", "--a", "1e-6", "--out", out]) == 3
    # so is a rank-deficient design
    rd = tmp_path / "rd.csv"
    write_dataset(Dataset(np.column_stack([np.ones(6), np.ones(6)]), np.arange(6.0)), rd)
    assert main(["fit", "--data", str(rd), "--method", "linf", "--out", out]) == 3


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "chebfit.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "lasso-compare" in r.stdout
    r = subprocess.run([sys.executable, "-m", "chebfit.cli", "nosuch"], capture_output=True, text=True)
    assert r.returncode == 2
