"""The command line: config validation, commands, exit codes, determinism."""

from __future__ import annotations

import json

import numpy as np
import pytest

from ballaverage.cli import (ConfigError, cmd_solve, cmd_study, cmd_verify,
                             load_config, main, parse_config)

BASE = """\
schema_version = 1

[domain]
kind = "ball"
center = [0.0, 0.0]
radii = [1.0, 1.0]

[grid]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
shape = [33, 33]

[radius]
c = 0.5

[quadrature]
kind = "product_midpoint"
samples_per_axis = 8

[boundary]
kind = "expression"
expression = "cos(theta)"

[stop]
tol = 1.0e-6
max_iter = 2000
"""


def write_config(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def with_outputs(tmp_path, extra=""):
    out = tmp_path / "out"
    return BASE + extra + f"""
[outputs]
field_csv = "{out}/field.csv"
report_json = "{out}/report.json"
image_pgm = "{out}/field.pgm"
"""


class TestConfigParsing:
    def test_minimal_config_loads(self, tmp_path):
        cfg = load_config(write_config(tmp_path, BASE))
        assert cfg.domain.kind == "ball"
        assert cfg.stop.max_iter == 2000
        assert cfg.oracle is None
        assert cfg.scheme == "boundary_consistent"

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key: bogus"):
            parse_config({"schema_version": 1, "bogus": 3})

    def test_unknown_nested_key_is_named(self, tmp_path):
        text = BASE.replace("[radius]\nc = 0.5", "[radius]\nc = 0.5\nfoo = 1")
        with pytest.raises(ConfigError, match="radius.foo"):
            load_config(write_config(tmp_path, text))

    def test_schema_version_checked(self):
        with pytest.raises(ConfigError, match="schema_version"):
            parse_config({"schema_version": 2})

    def test_missing_section_reported(self):
        with pytest.raises(ConfigError, match="missing section"):
            parse_config({"schema_version": 1})

    def test_wrong_type_reported(self, tmp_path):
        text = BASE.replace("tol = 1.0e-6", 'tol = "tiny"')
        with pytest.raises(ConfigError, match="stop.tol"):
            load_config(write_config(tmp_path, text))

    def test_init_requires_oracle(self, tmp_path):
        text = BASE + '\n[init]\nkind = "oracle"\n'
        with pytest.raises(ConfigError, match="requires an oracle"):
            load_config(write_config(tmp_path, text))

    def test_barrier_requires_oracle(self, tmp_path):
        text = BASE + "\n[barrier]\nenabled = true\n"
        with pytest.raises(ConfigError, match="requires an oracle"):
            load_config(write_config(tmp_path, text))

    def test_fundamental_pole_must_be_outside(self, tmp_path):
        text = BASE + '\n[oracle]\nkind = "fundamental"\npole = [0.5, 0.0]\n'
        with pytest.raises(ConfigError, match="outside"):
            load_config(write_config(tmp_path, text))


class TestSolve:
    def test_writes_outputs_and_converges(self, tmp_path):
        code = cmd_solve(write_config(tmp_path, with_outputs(tmp_path)),
                         quiet=True)
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["verdict"] == "converged"
        assert report["wall_time_seconds"] == 0.0
        assert report["config"]["schema_version"] == 1
        assert (tmp_path / "out" / "field.csv").exists()
        assert (tmp_path / "out" / "field.pgm").read_text().startswith("P2\n")

    def test_exit_2_on_iteration_budget(self, tmp_path):
        text = with_outputs(tmp_path).replace("max_iter = 2000",
                                              "max_iter = 1")
        assert cmd_solve(write_config(tmp_path, text), quiet=True) == 2

    def test_exit_1_on_negative_c(self, tmp_path, capsys):
        text = BASE.replace("c = 0.5", "c = -0.5")
        assert cmd_solve(write_config(tmp_path, text)) == 1
        assert "error" in capsys.readouterr().err

    def test_exit_1_on_missing_file(self, capsys):
        assert cmd_solve("/nonexistent/run.toml") == 1
        assert "error" in capsys.readouterr().err

    def test_square_run_is_labeled(self, tmp_path):
        text = with_outputs(tmp_path).replace(
            'kind = "ball"', 'kind = "box"').replace(
            'expression = "cos(theta)"', 'expression = "x * y"')
        assert cmd_solve(write_config(tmp_path, text), quiet=True) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["config"]["notes"]["convexity"] == "convex_only"
        assert report["config"]["notes"]["label"] == \
            "outside strong-convexity hypotheses"

    def test_deterministic_outputs(self, tmp_path):
        path = write_config(tmp_path, with_outputs(tmp_path))
        assert cmd_solve(path, quiet=True) == 0
        first_csv = (tmp_path / "out" / "field.csv").read_bytes()
        first_json = (tmp_path / "out" / "report.json").read_bytes()
        assert cmd_solve(path, quiet=True) == 0
        assert (tmp_path / "out" / "field.csv").read_bytes() == first_csv
        assert (tmp_path / "out" / "report.json").read_bytes() == first_json

    def test_oracle_monitor_reported(self, tmp_path):
        text = with_outputs(tmp_path, extra='\n[oracle]\nkind = "poisson"\n')
        assert cmd_solve(write_config(tmp_path, text), quiet=True) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["final_oracle_error"] is not None
        errors = np.asarray(report["oracle_error_history"])
        assert np.all(np.diff(errors) <= 1e-12)


class TestVerify:
    @pytest.mark.parametrize("suite", ["lemma1", "barrier", "hull",
                                       "fixedpoint"])
    def test_suites_pass_on_disk(self, tmp_path, suite):
        # boundary cos(2 theta) is the rim trace of the degree-2 oracle
        text = BASE.replace('expression = "cos(theta)"',
                            'expression = "cos(2 * theta)"')
        extra = '\n[oracle]\nkind = "harmonic_poly"\ndegree = 2\n'
        path = write_config(tmp_path, text + extra)
        assert cmd_verify(path, suite, quiet=True) == 0

    def test_eq8_passes_on_fine_disk(self, tmp_path):
        text = BASE.replace("shape = [33, 33]", "shape = [65, 65]")
        assert cmd_verify(write_config(tmp_path, text), "eq8", quiet=True) == 0

    def test_exit_4_when_oracle_mismatches_boundary(self, tmp_path):
        # the configured oracle does not extend the boundary data, so it is
        # far from a fixed point; the suite must fail, not absorb it
        extra = '\n[oracle]\nkind = "harmonic_poly"\ndegree = 2\n'
        path = write_config(tmp_path, BASE + extra)
        assert cmd_verify(path, "fixedpoint", quiet=True) == 4

    def test_hull_informational_on_square(self, tmp_path, capsys):
        text = BASE.replace('kind = "ball"', 'kind = "box"').replace(
            'expression = "cos(theta)"', 'expression = "x * y"')
        extra = '\n[init]\nkind = "expression"\nexpression = "x + y"\n'
        assert cmd_verify(write_config(tmp_path, text + extra), "hull") == 0
        assert "INFO" in capsys.readouterr().out

    def test_exit_1_on_unknown_suite(self, tmp_path, capsys):
        path = write_config(tmp_path, BASE)
        assert cmd_verify(path, "lemma7") == 1
        assert "unknown suite" in capsys.readouterr().err

    def test_barrier_suite_needs_ball_or_interval(self, tmp_path, capsys):
        text = BASE.replace('kind = "ball"', 'kind = "ellipse"').replace(
            "radii = [1.0, 1.0]", "radii = [1.0, 0.5]")
        assert cmd_verify(write_config(tmp_path, text), "barrier") == 1
        assert "error" in capsys.readouterr().err

    def test_fixedpoint_needs_oracle(self, tmp_path, capsys):
        assert cmd_verify(write_config(tmp_path, BASE), "fixedpoint") == 1
        assert "oracle" in capsys.readouterr().err

    def test_report_written_when_configured(self, tmp_path):
        extra = f"""
[outputs]
report_json = "{tmp_path}/verify.json"
"""
        path = write_config(tmp_path, BASE + extra)
        assert cmd_verify(path, "lemma1", quiet=True) == 0
        report = json.loads((tmp_path / "verify.json").read_text())
        assert report["suite"] == "lemma1"
        assert report["passed"] is True
        assert "margins" in report


class TestStudy:
    def _study_config(self, tmp_path):
        extra = f"""
[oracle]
kind = "poisson"

[outputs]
study_csv = "{tmp_path}/study.csv"
"""
        return write_config(tmp_path, BASE + extra)

    def test_resolution_sweep(self, tmp_path):
        path = self._study_config(tmp_path)
        assert cmd_study(path, "resolution=17,33", quiet=True) == 0
        lines = (tmp_path / "study.csv").read_text().splitlines()
        assert lines[0] == ("parameter,value,iterations,final_oracle_error,"
                            "one_step_residual")
        assert len(lines) == 3
        assert lines[1].startswith("resolution,17,")
        assert lines[2].startswith("resolution,33,")

    def test_c_sweep_runs(self, tmp_path):
        path = self._study_config(tmp_path)
        assert cmd_study(path, "c=0.25,0.75", quiet=True) == 0
        rows = (tmp_path / "study.csv").read_text().splitlines()[1:]
        iters = [int(r.split(",")[2]) for r in rows]
        # larger averaging balls mix faster
        assert iters[1] < iters[0]

    def test_empty_sweep_rejected(self, tmp_path, capsys):
        assert cmd_study(self._study_config(tmp_path), "resolution=") == 1
        assert "empty" in capsys.readouterr().err

    def test_unknown_parameter_rejected(self, tmp_path, capsys):
        assert cmd_study(self._study_config(tmp_path), "spin=1,2") == 1
        assert "unknown sweep parameter" in capsys.readouterr().err

    def test_requires_study_path(self, tmp_path, capsys):
        assert cmd_study(write_config(tmp_path, BASE), "c=0.5") == 1
        assert "study_csv" in capsys.readouterr().err


class TestMain:
    def test_solve_subcommand(self, tmp_path):
        path = write_config(tmp_path, with_outputs(tmp_path))
        assert main(["solve", "--config", path, "--quiet"]) == 0

    def test_verify_subcommand(self, tmp_path):
        path = write_config(tmp_path, BASE)
        assert main(["verify", "--config", path, "--suite", "lemma1",
                     "--quiet"]) == 0

    def test_study_subcommand(self, tmp_path):
        extra = f"""
[outputs]
study_csv = "{tmp_path}/study.csv"
"""
        path = write_config(tmp_path, BASE + extra)
        assert main(["study", "--config", path, "--sweep", "c=0.5",
                     "--quiet"]) == 0

    def test_rejects_unknown_suite_choice(self, tmp_path):
        path = write_config(tmp_path, BASE)
        with pytest.raises(SystemExit):
            main(["verify", "--config", path, "--suite", "nonsense"])
