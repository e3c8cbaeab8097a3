import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from inertial_prox.cli import main
from inertial_prox.config import OUT_DIR_ENV, ConfigError, RunConfig
from inertial_prox.traceio import HEADER, read_trace

EG_1D = {"problem": "vi1d", "method": "extragradient", "sigma": 0.9, "alpha": 0.0,
         "beta_rule": "zero", "rho": 1e-10, "max_iter": 100}


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def summary(out: str) -> dict:
    line = out.strip().splitlines()[-1]
    return dict(item.split("=", 1) for item in line.split())


def run_cli(tmp_path, cfg, *extra):
    c = write_config(tmp_path, cfg)
    out = tmp_path / "trace.csv"
    return main(["run", "--config", c, "--out", str(out), *extra]), c, out


def test_run_1d_hand_trace(tmp_path, capsys):
    code, _, out = run_cli(tmp_path, EG_1D)
    assert code == 0
    s = summary(capsys.readouterr().out)
    assert s["status"] == "Converged"
    lines = out.read_text().splitlines()
    assert lines[0] == "k,lambda,alpha,beta,norm_v,eps,dist_x0,step_norm,sigma_slack,bound_v,bound_eps,solution_dist"
    cols = read_trace(out)
    assert cols["norm_v"][0] == pytest.approx(0.1, abs=1e-12)
    assert cols["eps"][0] == 0
    assert cols["dist_x0"][0] == pytest.approx(0.9, abs=1e-12)


def test_csv_round_trips_doubles(tmp_path):
    _, _, out = run_cli(tmp_path, EG_1D)
    with open(out) as fh:
        rows = list(csv.reader(fh))[1:]
    for field in rows[3][1:]:
        x = float(field)
        assert format(x, ".17g") == field


def test_max_iter_zero_exits_2(tmp_path, capsys):
    code, c, out = run_cli(tmp_path, {**EG_1D, "max_iter": 0})
    assert code == 2
    assert summary(capsys.readouterr().out)["iterations"] == "0"
    assert out.read_text().strip() == HEADER
    # a header-only trace cannot be verified
    assert main(["verify", "--config", c, str(out)]) == 1


def test_fb_on_skew_problem_exits_1(tmp_path, capsys):
    code, _, _ = run_cli(tmp_path, {"problem": "rps", "method": "fb"})
    assert code == 1
    assert "cocoercive" in capsys.readouterr().err


def test_fault_exits_3(tmp_path, capsys, monkeypatch):
    # force a sigma violation by handing the solver a tighter sigma than the oracle's
    import inertial_prox.config as config

    real = config.RunConfig.solver_config

    def loose(self):
        sc = real(self)
        sc.sigma = 0.01
        return sc

    monkeypatch.setattr(config.RunConfig, "solver_config", loose)
    code, _, _ = run_cli(tmp_path, {"problem": "affine_vi", "method": "extragradient", "max_iter": 50})
    assert code == 3
    assert "SigmaViolation" in capsys.readouterr().err


def test_verify_round_trip(tmp_path, capsys):
    for method in ("exact", "extragradient", "tseng", "fb"):
        cfg = {"problem": "box_lsq", "method": method, "max_iter": 400, "check_level": "paranoid"}
        code, c, out = run_cli(tmp_path, cfg)
        assert code in (0, 2)
        assert main(["verify", "--config", c, str(out)]) == 0
    report = capsys.readouterr().out
    assert "complexity_v" in report and "fejer_nondecrease" in report


def test_verify_detects_corrupted_norm_v(tmp_path, capsys):
    code, c, out = run_cli(tmp_path, {"problem": "quadratic", "method": "tseng", "max_iter": 50})
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    row = lines[1].split(",")
    row[header.index("norm_v")] = "1e6"
    lines[1] = ",".join(row)
    out.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["verify", "--config", c, str(out)]) == 3
    err = capsys.readouterr().err
    assert "row k=0" in err and "complexity_v" in err


def test_verify_detects_fejer_corruption(tmp_path, capsys):
    code, c, out = run_cli(tmp_path, {"problem": "affine_vi", "method": "extragradient", "max_iter": 30})
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    row = lines[5].split(",")
    row[header.index("dist_x0")] = "100"
    lines[5] = ",".join(row)
    out.write_text("\n".join(lines) + "\n")
    assert main(["verify", "--config", c, str(out)]) == 3
    assert "fejer_bounded_by_d0" in capsys.readouterr().err


def test_verify_rejects_malformed(tmp_path):
    c = write_config(tmp_path, EG_1D)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["verify", "--config", c, str(empty)]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("k,norm_v\n0,1\n")
    assert main(["verify", "--config", c, str(bad)]) == 1
    ragged = tmp_path / "ragged.csv"
    ragged.write_text(HEADER + "\n0,1,2\n")
    assert main(["verify", "--config", c, str(ragged)]) == 1
    assert main(["verify", "--config", c, str(tmp_path / "missing.csv")]) == 1


def test_identical_configs_give_identical_traces(tmp_path):
    cfg = {"problem": "affine_vi", "method": "tseng", "max_iter": 200, "seed": 3}
    c = write_config(tmp_path, cfg)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", c, "--out", str(a)]) in (0, 2)
    assert main(["run", "--config", c, "--out", str(b)]) in (0, 2)
    assert a.read_bytes() == b.read_bytes()
    other = tmp_path / "c.csv"
    main(["run", "--config", write_config(tmp_path, {**cfg, "seed": 4}, "c.json"), "--out", str(other)])
    assert other.read_bytes() != a.read_bytes()


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "outdir"))
    c = write_config(tmp_path, EG_1D)
    assert main(["run", "--config", c]) == 0
    assert (tmp_path / "outdir" / "vi1d_extragradient.csv").exists()


def test_check_level_flag_overrides(tmp_path):
    c = write_config(tmp_path, EG_1D)
    assert main(["run", "--config", c, "--check-level", "paranoid", "--out", str(tmp_path / "t.csv")]) == 0
    assert main(["run", "--config", c, "--check-level", "bogus"]) == 1


@pytest.mark.parametrize("bad", [
    {"sigma": 1.0}, {"sigma": "x"}, {"method": "newton"}, {"colour": 1}, {"max_iter": -1},
    {"alpha": -1.0}, {"problem": "nope"}, {"problem_params": {"nested": {"a": 1}}},
    {"beta_rule": "harmonic", "beta": [0.1]}, {"x0": [1.0, 2.0]}, {"check_level": "all"},
])
def test_config_errors_exit_1(tmp_path, bad, capsys):
    code, _, _ = run_cli(tmp_path, {**EG_1D, **bad})
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_config_not_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert main(["run", "--config", str(p)]) == 1
    assert main([]) == 1
    assert main(["frobnicate"]) == 1


def test_config_round_trip():
    cfg = RunConfig.from_dict({**EG_1D, "lambda": None, "x0": [0.5]})
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])


def test_x0_distance_rescales_start(tmp_path):
    cfg = RunConfig.from_dict({"problem": "quadratic", "x0_distance": 1.0})
    p = cfg.build_problem()
    x0 = cfg.start_point(p)
    assert p.d0(x0) == pytest.approx(1.0)
    np.testing.assert_allclose(p.solution(x0), p.solution(p.default_x0), atol=1e-12)


def test_sweep_alpha_grid(tmp_path, capsys):
    c = write_config(tmp_path, {"problem": "quadratic", "method": "extragradient", "rho": 1e-4,
                                "max_iter": 50000})
    g = write_config(tmp_path, {"alpha": [0, 0.3, 1.0, 2.0]}, "grid.json")
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", c, "--grid", g, "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["alpha"] for r in rows] == ["0", "0.3", "1.0", "2.0"]
    assert all(r["status"] == "Converged" for r in rows)
    assert "cells=4" in capsys.readouterr().out


def test_sweep_tseng_lambda_per_sigma(tmp_path):
    c = write_config(tmp_path, {"problem": "affine_vi", "method": "tseng", "max_iter": 20})
    g = write_config(tmp_path, {"sigma": [0.3, 0.9]}, "grid.json")
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", c, "--grid", g, "--out", str(out), "--jobs", "2"]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    L = RunConfig.from_dict({"problem": "affine_vi"}).build_problem().lipschitz_L
    assert float(rows[0]["lambda"]) == pytest.approx(0.3 / L, rel=1e-15)
    assert float(rows[1]["lambda"]) == pytest.approx(0.9 / L, rel=1e-15)


def test_sweep_parallel_matches_serial(tmp_path):
    c = write_config(tmp_path, {"problem": "box_lsq", "max_iter": 200})
    g = write_config(tmp_path, {"method": ["extragradient", "fb"], "alpha": [0.0, 1.5]}, "grid.json")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", c, "--grid", g, "--out", str(a)]) == 0
    assert main(["sweep", "--config", c, "--grid", g, "--out", str(b), "--jobs", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_errors(tmp_path, capsys, monkeypatch):
    c = write_config(tmp_path, {"problem": "rps", "max_iter": 10})
    empty = write_config(tmp_path, {"alpha": []}, "e.json")
    assert main(["sweep", "--config", c, "--grid", empty]) == 1
    assert main(["sweep", "--config", c, "--grid", write_config(tmp_path, {}, "e2.json")]) == 1
    assert main(["sweep", "--config", c, "--grid", write_config(tmp_path, {"rho": [1]}, "e3.json")]) == 1
    # fb on the skew game is a configuration error in that cell
    g = write_config(tmp_path, {"method": ["tseng", "fb"]}, "g.json")
    assert main(["sweep", "--config", c, "--grid", g]) == 1
    assert "cell 1" in capsys.readouterr().err

    import inertial_prox.config as config

    real = config.RunConfig.solver_config

    def loose(self):
        sc = real(self)
        if self.sigma == 0.9:
            sc.sigma = 0.01
        return sc

    monkeypatch.setattr(config.RunConfig, "solver_config", loose)
    g = write_config(tmp_path, {"sigma": [0.5, 0.9]}, "g2.json")
    assert main(["sweep", "--config", c, "--grid", g, "--out", str(tmp_path / "s.csv")]) == 3
    assert "cell 1 faulted" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    c = write_config(tmp_path, EG_1D)
    out = tmp_path / "t.csv"
    r = subprocess.run([sys.executable, "-m", "inertial_prox", "run", "--config", c, "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("status=Converged")
