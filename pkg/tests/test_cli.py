import csv
import json
import subprocess
import sys

import pytest

from latwave.cli import EXIT_INVALID, EXIT_IO, EXIT_NUMERIC, EXIT_OK, read_config, run

STD = ["--mu", "0.5", "--beta", "3", "--gamma", "0.5", "--d", "1"]


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    record = json.loads(out.out) if code == 0 and out.out.strip() else None
    return code, record, out.err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestDispersion:
    def test_standard(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "dispersion", *STD, "--out", str(tmp_path))
        assert code == EXIT_OK
        assert rec["c_star"] == pytest.approx(3.0178, abs=1e-4)
        assert rec["lambda1"] is None
        assert (tmp_path / "dispersion.json").exists() and (tmp_path / "dispersion.csv").exists()

    def test_speed(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "dispersion", "--speed", "3.5", "--out", str(tmp_path))
        assert code == EXIT_OK
        assert rec["lambda1"] == pytest.approx(0.7310441379680056, abs=1e-12)
        assert rec["lambda2"] == pytest.approx(1.8341364327983831, abs=1e-12)

    def test_subcritical_beta(self, capsys, tmp_path):
        code, _, err = invoke(capsys, "dispersion", "--beta", "1", "--out", str(tmp_path))
        assert code == EXIT_INVALID and "sigma <= 1" in err

    def test_deterministic(self, capsys, tmp_path):
        argv = ["dispersion", *STD, "--speed", "3.5", "--out", str(tmp_path)]
        assert run(argv) == 0
        first = capsys.readouterr().out
        first_file = (tmp_path / "dispersion.json").read_bytes()
        assert run(argv) == 0
        assert capsys.readouterr().out == first
        assert (tmp_path / "dispersion.json").read_bytes() == first_file

    def test_format_csv_only(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "dispersion", "--format", "csv", "--out", str(tmp_path))
        assert code == EXIT_OK
        assert (tmp_path / "dispersion.csv").exists()
        assert not (tmp_path / "dispersion.json").exists()


class TestConfig:
    def test_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nbeta = 4\nd=2\n")
        _, rec, _ = invoke(capsys, "dispersion", "--config", str(cfg), "--d", "1",
                           "--out", str(tmp_path))
        assert rec["params"]["beta"] == 4.0
        assert rec["params"]["d"] == 1.0
        assert rec["params"]["mu"] == 0.5

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("betta = 4\n")
        code, _, err = invoke(capsys, "dispersion", "--config", str(cfg), "--out", str(tmp_path))
        assert code == EXIT_INVALID and "unknown key" in err

    def test_malformed(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("beta 4\n")
        with pytest.raises(ValueError):
            read_config(cfg)

    def test_dashed_keys(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("check-shape = true\nfrom-profile = x.csv\n")
        assert read_config(cfg) == {"check_shape": "true", "from_profile": "x.csv"}

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "dispersion", "--config", str(tmp_path / "none.cfg"),
                            "--out", str(tmp_path))
        assert code == EXIT_IO

    def test_out_is_a_file(self, capsys, tmp_path):
        target = tmp_path / "file"
        target.write_text("x")
        code, _, _ = invoke(capsys, "dispersion", "--out", str(target))
        assert code == EXIT_IO

    def test_bad_value(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("m = 2.5\n")
        code, _, _ = invoke(capsys, "solve", "--speed", "3.5", "--config", str(cfg),
                            "--out", str(tmp_path))
        assert code == EXIT_INVALID

    def test_usage_error_exit(self, capsys):
        code, _, _ = invoke(capsys, "dispersion", "--nope")
        assert code == EXIT_INVALID


class TestSandwich:
    def test_standard(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "sandwich", *STD, "--speed", "3.5", "--out", str(tmp_path))
        assert code == EXIT_OK and rec["passed"]
        assert all(v["passed"] for v in rec["inequalities"].values())
        assert rec["sandwich"]["xi2"] < rec["sandwich"]["xi1"] < 0
        assert len(read_csv(tmp_path / "sandwich.csv")) == 4

    def test_subcritical(self, capsys, tmp_path):
        code, _, err = invoke(capsys, "sandwich", "--speed", "2.5", "--out", str(tmp_path))
        assert code != 0 and "speed not supercritical" in err

    def test_needs_speed(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "sandwich", "--out", str(tmp_path))
        assert code == EXIT_INVALID


class TestSolve:
    def test_standard(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "solve", "--speed", "3.5", "--l", "40", "--m", "20",
                              "--out", str(tmp_path))
        assert code == EXIT_OK
        assert rec["report"]["converged"] and "seconds" not in rec["report"]
        for name in ("profile.csv", "solve.json", "diagnostics.json", "report.csv"):
            assert (tmp_path / name).exists()
        rows = read_csv(tmp_path / "profile.csv")
        assert len(rows) == 1601 and list(rows[0]) == ["xi", "phi", "psi"]

    def test_deterministic_files(self, capsys, tmp_path):
        outs = []
        for k in range(2):
            d = tmp_path / str(k)
            assert run(["solve", "--speed", "4", "--m", "10", "--out", str(d)]) == 0
            outs.append((capsys.readouterr().out, (d / "solve.json").read_bytes(),
                         (d / "profile.csv").read_bytes()))
        assert outs[0] == outs[1]

    def test_usage(self, capsys, tmp_path):
        assert invoke(capsys, "solve", "--out", str(tmp_path))[0] == EXIT_INVALID
        assert invoke(capsys, "solve", "--speed", "3.5", "--minimal",
                      "--out", str(tmp_path))[0] == EXIT_INVALID

    def test_stage_in_error(self, capsys, tmp_path):
        code, _, err = invoke(capsys, "solve", "--speed", "3.5", "--l", "10",
                              "--out", str(tmp_path))
        assert code == EXIT_INVALID and "[build_problem]" in err

    def test_non_convergence_is_numerical(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("tol = 1e-300\n")
        code, _, err = invoke(capsys, "solve", "--speed", "3.5", "--m", "10", "--config",
                              str(cfg), "--out", str(tmp_path))
        assert code == EXIT_NUMERIC and "[" in err

    @pytest.mark.slow
    def test_minimal(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "solve", "--minimal", "--out", str(tmp_path))
        assert code == EXIT_OK and rec["minimal"]
        dists = rec["sequence"]["distances"]
        assert len(dists) == 3 and all(b < a for a, b in zip(dists, dists[1:]))
        assert len(read_csv(tmp_path / "sequence.csv")) == 4
        assert (tmp_path / "sequence.json").exists()


class TestSimulate:
    def test_short_run(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "simulate", "--N", "300", "--T", "60",
                              "--out", str(tmp_path))
        assert code == EXIT_OK
        assert rec["relative_error"] < 0.1
        assert read_csv(tmp_path / "front.csv")[0].keys() == {"t", "position"}
        assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "simulate.json").exists()

    def test_boundary(self, capsys, tmp_path):
        code, _, err = invoke(capsys, "simulate", "--N", "50", "--T", "300",
                              "--out", str(tmp_path))
        assert code == EXIT_NUMERIC and "FrontHitBoundary" in err

    def test_step_too_large(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "simulate", "--dt", "0.5", "--out", str(tmp_path))
        assert code == EXIT_INVALID

    def test_check_shape_needs_profile(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "simulate", "--check-shape", "--out", str(tmp_path))
        assert code == EXIT_INVALID

    def test_missing_profile(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "simulate", "--from-profile", str(tmp_path / "no.csv"),
                            "--speed", "3.5", "--out", str(tmp_path))
        assert code == EXIT_IO

    def test_profile_round_trip(self, capsys, tmp_path):
        assert run(["solve", "--speed", "3.5", "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        code, rec, _ = invoke(capsys, "simulate", "--from-profile",
                              str(tmp_path / "profile.csv"), "--check-shape", "--N", "300",
                              "--T", "5", "--out", str(tmp_path))
        assert code == EXIT_OK
        shape = rec["shape"]
        assert shape["initial_distance"] == 0.0
        assert shape["c"] == 3.5 and shape["shape_preserved"]
        assert len(read_csv(tmp_path / "shape.csv")) == 6


class TestCertify:
    def test_single(self, capsys, tmp_path):
        _, rec, _ = invoke(capsys, "certify", "--speed", "2.0", "--out", str(tmp_path))
        assert rec["certified"] is True
        _, rec, _ = invoke(capsys, "certify", "--speed", "3.5", "--out", str(tmp_path))
        assert rec["certified"] is False

    def test_grid_flips_once(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "certify", "--out", str(tmp_path))
        assert code == EXIT_OK and rec["flips"] == 1
        lo, hi = rec["flip_between"][0]
        assert lo < rec["c_star"] <= hi
        assert len(read_csv(tmp_path / "certify.csv")) == 101

    def test_list(self, capsys, tmp_path):
        _, rec, _ = invoke(capsys, "certify", "--speed", "1,2,4", "--out", str(tmp_path))
        assert [c["certified"] for c in rec["certificates"]] == [True, True, False]

    def test_bad_list(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "certify", "--speed", "1,x", "--out", str(tmp_path))
        assert code == EXIT_INVALID


class TestSweep:
    def test_grid(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "sweep", "--d", "0.5,1,2", "--beta", "2,3",
                              "--out", str(tmp_path))
        assert code == EXIT_OK and rec["points"] == 6
        rows = read_csv(tmp_path / "sweep.csv")
        assert len(rows) == 6 and all(r["c_star"] and not r["error"] for r in rows)
        std = [r for r in rows if r["d"] == "1" and r["beta"] == "3"][0]
        assert float(std["c_star"]) == pytest.approx(3.0177591230766, abs=1e-10)

    def test_empty(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "sweep", "--d", "", "--out", str(tmp_path))
        assert code == EXIT_OK and rec["points"] == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines == ["mu,beta,gamma,d,sigma,s_star,e_star,c_star,lambda_star,error"]

    def test_error_column(self, capsys, tmp_path):
        code, rec, _ = invoke(capsys, "sweep", "--beta", "0.5,3", "--out", str(tmp_path))
        assert code == EXIT_OK
        rows = read_csv(tmp_path / "sweep.csv")
        assert "SubcriticalTransmission" in rows[0]["error"] and not rows[1]["error"]

    def test_simulate(self, capsys, tmp_path):
        code, _, _ = invoke(capsys, "sweep", "--simulate", "--d", "1,2", "--N", "200",
                            "--T", "30", "--out", str(tmp_path))
        assert code == EXIT_OK
        rows = read_csv(tmp_path / "sweep.csv")
        assert {"measured_speed", "relative_error"} <= set(rows[0])
        assert all(float(r["relative_error"]) < 0.2 for r in rows)


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "latwave.cli", "--help"],
                         capture_output=True, text=True, check=True)
    for cmd in ("dispersion", "sandwich", "solve", "simulate", "certify", "sweep"):
        assert cmd in res.stdout


def test_flags_present():
    from latwave.cli import cli

    flags = set()
    for cmd in cli.commands.values():
        for prm in cmd.params:
            flags.update(prm.opts)
    expected = {"--mu", "--beta", "--gamma", "--d", "--speed", "--minimal", "--l", "--m",
                "--tol", "--margin", "--N", "--dt", "--T", "--level", "--from-profile",
                "--check-shape", "--out", "--config", "--format"}
    assert expected <= flags


class TestJson:
    def test_round_trip_exact(self):
        from hypothesis import given, strategies as st

        from latwave._io import dumps

        @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=20))
        def check(xs):
            assert json.loads(dumps({"x": xs}))["x"] == xs

        check()

    def test_special_values(self):
        import numpy as np

        from latwave._io import dumps

        rec = json.loads(dumps({"a": float("nan"), "b": np.float64(0.1), "c": np.bool_(True),
                                "d": np.arange(3), "e": (), "f": {}}))
        assert rec == {"a": None, "b": 0.1, "c": True, "d": [0, 1, 2], "e": [], "f": {}}
        with pytest.raises(TypeError):
            dumps(object())
