"""
Tests for the command line: subcommand dispatch, outputs, exit codes and error reports.
"""

import csv
import json
import logging

import pytest

from semzk.cli import SUBCOMMANDS, build_parser, cli_dispatch, load_run_config
from semzk.main import main
from semzk.utils.config import get_settings
from semzk.utils.error_handlers import ValidationError

SMALL_GRID = {"nx": 32, "ny": 32, "lx": 50.0, "ly": 50.0}


@pytest.fixture(autouse=True)
def restore_logging():
    """Drop the handlers a CLI run attaches so later tests do not write to closed streams."""
    yield
    for name in ("semzk", "semzk.performance", None):
        lg = logging.getLogger(name)
        for handler in list(lg.handlers):
            if type(handler).__module__.startswith("_pytest"):
                continue
            lg.removeHandler(handler)
            handler.close()
    logging.getLogger("semzk").propagate = True
    logging.getLogger("semzk.performance").propagate = True


@pytest.fixture
def write_config(tmp_path):
    def write(payload, name="config.json"):
        path = tmp_path / name
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        return str(path)
    return write


def simulate_config(**overrides):
    cfg = {"model": "sem", "grid": SMALL_GRID, "dt": 0.05, "t_end": 0.2, "snapshot_every": 2,
           "initial_data": {"family": "gaussian", "amplitude": 0.5, "sigma": 4.0}}
    cfg.update(overrides)
    return cfg


class TestParser:
    """Argument parsing."""

    def test_every_subcommand_is_registered(self):
        parser = build_parser()
        for name in SUBCOMMANDS:
            args = parser.parse_args([name, "--seed", "3"])
            assert args.command == name
            assert args.seed == 3

    def test_parse_errors_raise(self):
        with pytest.raises(ValidationError, match="usage"):
            build_parser().parse_args(["simulate", "--seed", "x"])

    def test_seed_override(self, write_config):
        cfg = load_run_config(write_config({"seed": 1}), seed=9)
        assert cfg.seed == 9

    def test_defaults_without_config(self):
        cfg = load_run_config()
        assert cfg.grid.nx == 64
        assert cfg.seed == 0


class TestSimulate:
    """simulate writes snapshots, invariants and a run report."""

    def test_outputs(self, write_config, tmp_path):
        out = tmp_path / "run"
        code = cli_dispatch(["simulate", "--config", write_config(simulate_config()), "--out", str(out)])
        assert code == 0
        snapshots = sorted(out.glob("snapshot_*.sem2"))
        assert [p.name for p in snapshots] == ["snapshot_00000.sem2", "snapshot_00001.sem2", "snapshot_00002.sem2"]
        with (out / "invariants.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["t", "mass", "l2", "hamiltonian"]
        assert len(rows) == 4
        assert rows[1][3] == ""
        report = json.loads((out / "run_report.json").read_text())
        assert report["kind"] == "simulate"
        assert report["steps"] == 4
        assert report["mass_drift"] < 1e-8
        assert (out / "run.log").exists()

    def test_out_from_config(self, write_config, tmp_path):
        out = tmp_path / "from_config"
        code = cli_dispatch(["simulate", "--config", write_config(simulate_config(out=str(out)))])
        assert code == 0
        assert (out / "run_report.json").exists()

    def test_main_entry_point(self, write_config, tmp_path):
        assert main(["simulate", "--config", write_config(simulate_config()), "--out", str(tmp_path / "m")]) == 0

    def test_settings_are_restored(self, write_config, tmp_path):
        cfg = simulate_config(tolerances={"conservation_tolerance": 1e-9})
        cli_dispatch(["simulate", "--config", write_config(cfg), "--out", str(tmp_path / "o")])
        assert get_settings().conservation_tolerance == 1e-8


class TestErrors:
    """Exit codes, diagnostics and error.json."""

    def test_alpha_below_admissibility(self, write_config, tmp_path, capsys):
        out = tmp_path / "bad"
        cfg = write_config({"carleman": {"R": 8.0, "alpha": 1.0, "count": 2}})
        assert cli_dispatch(["carleman-check", "--config", cfg, "--out", str(out)]) == 1
        assert "alpha below admissibility" in capsys.readouterr().err
        error = json.loads((out / "error.json").read_text())["error"]
        assert error["code"] == "ADMISSIBILITY_ERROR"
        assert error["exit_code"] == 1

    def test_unknown_subcommand(self, capsys):
        assert cli_dispatch(["bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_missing_subcommand(self, capsys):
        assert cli_dispatch([]) == 1
        assert "missing subcommand" in capsys.readouterr().err

    def test_invalid_json(self, write_config, capsys):
        assert cli_dispatch(["simulate", "--config", write_config("{not json")]) == 1
        assert "not valid JSON" in capsys.readouterr().err

    def test_unknown_config_key(self, write_config, capsys):
        assert cli_dispatch(["simulate", "--config", write_config({"gridd": SMALL_GRID})]) == 1
        assert "gridd" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert cli_dispatch(["simulate", "--config", str(tmp_path / "absent.json")]) == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_bad_tolerance(self, write_config, tmp_path):
        cfg = write_config({"tolerances": {"exponent_cap": 800.0}})
        assert cli_dispatch(["interp-check", "--config", cfg, "--out", str(tmp_path / "t")]) == 1

    def test_numerical_failure_exits_with_two(self, write_config, tmp_path, capsys):
        out = tmp_path / "guard"
        cfg = write_config({"tolerances": {"exponent_cap": 1.0}})
        assert cli_dispatch(["interp-check", "--config", cfg, "--out", str(out)]) == 2
        assert "OVERFLOW_GUARD" in capsys.readouterr().err
        assert json.loads((out / "error.json").read_text())["error"]["exit_code"] == 2

    def test_annulus_report_needs_section(self, tmp_path):
        assert cli_dispatch(["annulus-report", "--out", str(tmp_path / "a")]) == 1


class TestReports:
    """Check subcommands and reproducibility."""

    def test_annulus_report_from_simulation(self, write_config, tmp_path):
        sim = tmp_path / "sim"
        assert cli_dispatch(["simulate", "--config", write_config(simulate_config()), "--out", str(sim)]) == 0
        snapshots = [str(p) for p in sorted(sim.glob("snapshot_*.sem2"))]
        cfg = write_config({"annulus": {"snapshots": snapshots, "radii": [2.0, 4.0, 6.0, 8.0]}}, "annulus.json")
        out = tmp_path / "annulus"
        assert cli_dispatch(["annulus-report", "--config", cfg, "--out", str(out)]) == 0
        with (out / "annulus.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["R", "a_interval", "a_initial", "a_final"]
        assert len(rows) == 5
        report = json.loads((out / "annulus_report.json").read_text())
        assert report["trajectory"] == "sim"
        fit = json.loads((out / "decay_fit.json").read_text())
        assert fit["c0_fit"] > 0

    def test_reports_are_deterministic(self, write_config, tmp_path):
        cfg = write_config({"grid": SMALL_GRID, "riesz": {"budget": 8, "fields": 2}})
        for name in ("a", "b"):
            assert cli_dispatch(["riesz-check", "--config", cfg, "--seed", "4", "--out", str(tmp_path / name)]) == 0
        first = (tmp_path / "a" / "riesz_report.json").read_bytes()
        assert first == (tmp_path / "b" / "riesz_report.json").read_bytes()
        assert json.loads(first)["seed"] == 4

    def test_persistence_check(self, tmp_path):
        out = tmp_path / "p"
        assert cli_dispatch(["persistence-check", "--seed", "42", "--out", str(out)]) == 0
        report = json.loads((out / "persistence_report.json").read_text())
        assert report["seed"] == 42
        assert len(report["results"]) == 3

    def test_interp_check(self, tmp_path):
        out = tmp_path / "i"
        assert cli_dispatch(["interp-check", "--out", str(out)]) == 0
        report = json.loads((out / "interp_report.json").read_text())
        ratios = {r["theta"]: r["ratio"] for r in report["results"]}
        assert ratios[0.0] == ratios[1.0] == 1.0

    def test_commutator_check(self, write_config, tmp_path):
        out = tmp_path / "c"
        cfg = write_config({"commutator": {"R": 8.0, "count": 2}})
        assert cli_dispatch(["commutator-check", "--config", cfg, "--out", str(out)]) == 0
        assert json.loads((out / "commutator_report.json").read_text())["kind"] == "commutator_check"

    def test_uniqueness_experiment(self, write_config, tmp_path):
        out = tmp_path / "u"
        cfg = write_config({"seed": 7, "uniqueness": {
            "grid": {"nx": 96, "ny": 96, "lx": 48.0, "ly": 48.0},
            "dt": 0.01, "t_end": 0.1, "radii": [2.0, 4.0, 6.0, 8.0],
        }})
        assert cli_dispatch(["uniqueness-experiment", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "uniqueness_report.json").read_text())
        assert report["seed"] == 7
        assert report["verdict"] == "distinct"
        assert (out / "annulus.csv").exists()
