import json
import os
import subprocess
import sys

import pytest

from edabench.cli import main
from edabench.harness import read_csv


def test_expected_ea(capsys):
    assert main(["expected-ea", "--n", "2"]) == 0
    assert capsys.readouterr().out.strip() == "3"
    assert main(["expected-ea", "--n", "4", "6", "--detail"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and out[0].startswith("n=4 ") and "recurrence=" in out[0]


def test_expected_ea_rejects_odd(capsys):
    assert main(["expected-ea", "--n", "3"]) == 2


def test_advise(capsys):
    assert main(["advise", "--n", "100", "--mode", "experiment"]) == 0
    assert capsys.readouterr().out.strip() == "μ=1382 λ=16584 budget=10000000"
    assert main(["advise", "--n", "100", "--mode", "theorem", "--eps", "2"]) == 2


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["advise", "--n", "100", "--bogus"]) == 2
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_verify_bounds(capsys):
    assert main(["verify-bounds", "--kmax", "40"]) == 0
    assert "0 violations" in capsys.readouterr().out


def test_run_to_stdout(capsys):
    assert main(["run", "--algorithm", "umda", "--n", "10", "--mu", "10", "--lambda", "30",
                 "--runs", "2", "--seed", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("algorithm,n,mu,lambda") and len(lines) == 3


def test_run_with_trace(tmp_path, capsys):
    out, trace = tmp_path / "r.csv", tmp_path / "t.csv"
    assert main(["run", "--algorithm", "mimic", "--n", "10", "--mu", "10", "--lambda", "30",
                 "--out", str(out), "--trace", str(trace)]) == 0
    assert len(read_csv(out)) == 1
    assert trace.read_text().startswith("algorithm,n,mu,run_index,iteration")


def test_sweep_then_analyze_and_plot(tmp_path, capsys):
    csv = tmp_path / "s.csv"
    assert main(["sweep", "--runs", "5", "--n", "10", "20", "--algorithms", "opo_ea", "umda",
                 "--out", str(csv)]) == 0
    capsys.readouterr()
    assert main(["analyze", str(csv)]) == 0
    out = capsys.readouterr().out
    assert "algorithm,exponent,scale,residual,points" in out
    assert out.count("\nopo_ea,") == 1 and "\numda," in out
    svg = tmp_path / "s.svg"
    assert main(["plot", str(csv), "--out", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")


def test_sweep_single_size_pipeline(tmp_path, capsys):
    csv = tmp_path / "s.csv"
    assert main(["sweep", "--runs", "5", "--n", "50", "--desk", "--out", str(csv)]) == 0
    capsys.readouterr()
    assert main(["analyze", str(csv)]) == 0
    assert "fewer than two sizes" in capsys.readouterr().out


def test_mu_sweep_and_config(tmp_path, capsys):
    csv = tmp_path / "m.csv"
    assert main(["mu-sweep", "--n", "10", "--exponents", "1", "2", "--runs", "2",
                 "--out", str(csv), "--threads", "2"]) == 0
    assert {r.mu for r in read_csv(csv)} == {2, 4}
    plan = {"name": "p", "master_seed": 4,
            "cells": [{"algorithm": "comma_ga", "fitness": "dlb", "n": 12, "mu": 2,
                       "lambda": 8, "runs": 2, "budget": 5000}]}
    cfg = tmp_path / "plan.json"
    cfg.write_text(json.dumps(plan))
    csv2 = tmp_path / "c.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(csv2)]) == 0
    recs = read_csv(csv2)
    assert [(r.algorithm, r.lam, r.budget) for r in recs] == [("comma_ga", 8, 5000)] * 2
    cfg.write_text("{not json")
    assert main(["sweep", "--config", str(cfg)]) == 2


def test_analyze_bad_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n")
    assert main(["analyze", str(bad)]) == 2
    assert main(["analyze", str(tmp_path / "missing.csv")]) == 1


def test_failed_runs_exit_one(tmp_path, capsys):
    plan = {"cells": [{"algorithm": "opo_ea", "n": 10, "chi": 20, "runs": 1, "budget": 10}]}
    cfg = tmp_path / "plan.json"
    cfg.write_text(json.dumps(plan))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 1
    assert "run failed" in capsys.readouterr().err


def test_module_entry_point_and_pure_backend():
    env = dict(os.environ, EDABENCH_BACKEND="pure")
    out = subprocess.run([sys.executable, "-m", "edabench", "run", "--algorithm", "comma_ga",
                          "--n", "12", "--runs", "2", "--seed", "5"],
                         capture_output=True, text=True, env=env, check=True).stdout
    native = subprocess.run([sys.executable, "-m", "edabench", "run", "--algorithm", "comma_ga",
                             "--n", "12", "--runs", "2", "--seed", "5"],
                            capture_output=True, text=True, check=True).stdout
    assert out == native
    check = subprocess.run([sys.executable, "-c", "import edabench; print(edabench.DEFAULT_BACKEND)"],
                           capture_output=True, text=True, env=env, check=True).stdout
    assert check.strip() == "pure"
