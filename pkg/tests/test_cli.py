"""CLI surface: exit codes, artifacts, schema errors, determinism."""

import json

from gapflow.cli import run

BASE = {
    "geometry": {"case": "case1", "l1": 1.0, "l2": 1.0, "n1": 16, "n2": 16},
    "physics": {
        "kappa": 1.0,
        "beta": {"kind": "cubic"},
        "pi": {"preset": "allen_cahn"},
        "sources": {"preset": "zero"},
        "initial": {"preset": "step"},
    },
    "alpha": {"kind": "constant", "value": 1.0},
    "time": {"T": 0.02, "dt": 2e-3},
    "solver": {},
}


def write_config(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def clone(cfg):
    return json.loads(json.dumps(cfg))


class TestSolveCommands:
    def test_solve_artifacts(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE)
        out = tmp_path / "out"
        assert run(["solve", "--config", cfg, "--out", str(out)]) == 0
        for name in ("run.json", "fields.csv", "diag.csv"):
            assert (out / name).exists()
        meta = json.loads((out / "run.json").read_text())
        assert meta["command"] == "solve"
        assert meta["config"]["time"]["dt"] == 2e-3
        assert meta["version"]
        assert meta["duration_seconds"] > 0
        assert "final_mass" in capsys.readouterr().out
        header = (out / "diag.csv").read_text().splitlines()[0]
        assert header == "t,energy,moreau_energy,jump,mass,newton_iters"
        fields_header = (out / "fields.csv").read_text().splitlines()[0]
        assert fields_header == "t,x,subdomain,value"

    def test_split_and_merged(self, tmp_path):
        cfg = clone(BASE)
        assert run(["split", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "s")]) == 0
        cfg["physics"]["initial"] = {"preset": "smooth_matched", "amplitude": 0.5}
        assert run(["merged", "--config", write_config(tmp_path, cfg, "m.json"), "--out", str(tmp_path / "m")]) == 0

    def test_smooth_schedule(self, tmp_path):
        cfg = clone(BASE)
        cfg["alpha"] = {"kind": "smooth", "preset": "cosine", "from": 0.5, "to": 5.0}
        assert run(["solve", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "sm")]) == 0

    def test_blowup_writes_extra_csv(self, tmp_path):
        cfg = clone(BASE)
        cfg["alpha"] = {"kind": "blowup", "alpha0": 1.0, "t_star": 0.01, "p": 1.0}
        cfg["solver"] = {"delta_switch": 2e-3}
        code = run(["blowup", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "b")])
        assert code == 0
        assert (tmp_path / "b" / "blowup.csv").exists()
        header = (tmp_path / "b" / "blowup.csv").read_text().splitlines()[0]
        assert header == "t,alpha,jump,jump_times_alpha"
        meta = json.loads((tmp_path / "b" / "run.json").read_text())
        assert "handoff_time" in meta["annotations"]

    def test_solve_rejects_blowup_schedule(self, tmp_path, capsys):
        cfg = clone(BASE)
        cfg["alpha"] = {"kind": "blowup", "alpha0": 1.0, "t_star": 0.01}
        code = run(["solve", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "x")])
        assert code == 2
        assert "alpha.kind" in capsys.readouterr().err


class TestConfigErrors:
    def test_nonpositive_dt(self, tmp_path, capsys):
        cfg = clone(BASE)
        cfg["time"]["dt"] = -1.0
        code = run(["solve", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "time.dt" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = clone(BASE)
        cfg["physics"]["viscosity"] = 2.0
        code = run(["solve", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "physics.viscosity" in capsys.readouterr().err

    def test_missing_required_field(self, tmp_path, capsys):
        cfg = clone(BASE)
        del cfg["time"]
        code = run(["solve", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "time" in capsys.readouterr().err

    def test_bad_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code = run(["solve", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == 2

    def test_missing_config_file_is_io_error(self, tmp_path):
        code = run(["solve", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o")])
        assert code == 4

    def test_mosco_requires_grid(self, tmp_path, capsys):
        cfg = clone(BASE)
        code = run(["mosco", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "experiment.alpha_grid" in capsys.readouterr().err


class TestExperimentCommands:
    def test_rate_zero_summary_and_rows(self, tmp_path, capsys):
        cfg = clone(BASE)
        cfg["time"] = {"T": 0.05, "dt": 5e-3}
        cfg["physics"]["initial"]["family"] = {
            "scaling": "sqrt_alpha",
            "amplitude": 0.5,
            "width": 0.15,
        }
        cfg["experiment"] = {"alpha_grid": [1e-3, 1e-2, 1e-1]}
        code = run(["rate-zero", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "r")])
        assert code == 0
        out = capsys.readouterr().out
        assert "slope" in out
        rows = (tmp_path / "r" / "rates.csv").read_text().splitlines()
        assert rows[0] == "alpha,e_C,e_E"
        assert len(rows) == 1 + 3
        summary = json.loads((tmp_path / "r" / "summary.json").read_text())
        assert summary["slope_e_C"] is not None

    def test_rate_inf(self, tmp_path):
        cfg = clone(BASE)
        cfg["time"] = {"T": 0.05, "dt": 5e-3}
        cfg["physics"]["initial"] = {
            "preset": "smooth_matched",
            "amplitude": 0.8,
            "family": {"scaling": "inv_sqrt_alpha", "amplitude": 0.5, "width": 0.15},
        }
        cfg["experiment"] = {"alpha_grid": [10.0, 100.0, 1000.0]}
        assert run(["rate-inf", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "ri")]) == 0
        assert (tmp_path / "ri" / "rates.csv").exists()

    def test_mosco_and_audit(self, tmp_path):
        cfg = clone(BASE)
        cfg["experiment"] = {
            "alpha_grid": [10.0, 100.0, 1000.0],
            "direction": "to_infinity",
            "tau": 0.1,
        }
        assert run(["mosco", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "mo")]) == 0
        rows = (tmp_path / "mo" / "mosco.csv").read_text().splitlines()
        assert rows[0] == "n,alpha_n,probe_id,gap,margin,prox_err"

        cfg2 = clone(BASE)
        cfg2["time"] = {"T": 0.02, "dt": 2e-3}
        cfg2["experiment"] = {"alpha_grid": [0.1, 1.0], "lambda_grid": [1e-2, 1e-3]}
        assert run(["audit", "--config", write_config(tmp_path, cfg2, "a.json"), "--out", str(tmp_path / "au")]) == 0
        rows = (tmp_path / "au" / "audit.csv").read_text().splitlines()
        assert rows[0] == "lambda,alpha,quantity_id,value"
        assert len(rows) == 1 + 2 * 2 * 8

    def test_determinism_byte_identical(self, tmp_path):
        cfg = clone(BASE)
        cfg["experiment"] = {"alpha_grid": [1e-2, 1e-1]}
        path = write_config(tmp_path, cfg)
        assert run(["rate-zero", "--config", path, "--out", str(tmp_path / "d1")]) == 0
        assert run(["rate-zero", "--config", path, "--out", str(tmp_path / "d2")]) == 0
        for name in ("rates.csv",):
            assert (tmp_path / "d1" / name).read_bytes() == (tmp_path / "d2" / name).read_bytes()
        assert run(["solve", "--config", path, "--out", str(tmp_path / "d3")]) == 0
        assert run(["solve", "--config", path, "--out", str(tmp_path / "d4")]) == 0
        for name in ("fields.csv", "diag.csv"):
            assert (tmp_path / "d3" / name).read_bytes() == (tmp_path / "d4" / name).read_bytes()
