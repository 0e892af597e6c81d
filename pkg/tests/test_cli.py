"""The command-line driver: configuration, exit codes, determinism, and exports."""

import json
import subprocess
import sys

import pytest

from weiltrace.cli import SCHEMA, ConfigError, RunConfig, load_config, main, run


def run_cli(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def verify_all_report(tmp_path_factory):
    d = tmp_path_factory.mktemp("verify")
    out = d / "report.json"
    code = main(["verify-all", "--out", str(out), "--csv-dir", str(d / "csv")])
    return code, json.loads(out.read_text()), d


class TestConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        cfg.validate()
        assert cfg.Lambda == 2.0 and cfg.project_moments

    @pytest.mark.parametrize(
        "kw",
        [
            {"Lambda": 0.5},
            {"Lambda": 1.0},
            {"lattice_bound": 0},
            {"grid_n": 4},
            {"mu_override": 1.5},
            {"commands": ("nonsense",)},
            {"test_function": "random:abc"},
            {"test_function": [1, 2]},
        ],
    )
    def test_rejections(self, kw):
        with pytest.raises(ConfigError):
            RunConfig(**kw).validate()

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"lamda": 3}))
        with pytest.raises(ConfigError):
            load_config(str(p), {})

    def test_flags_override_file(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"Lambda": 3.0, "lattice_bound": 16}))
        cfg = load_config(str(p), {"Lambda": 2.5, "lattice_bound": None})
        assert cfg.Lambda == 2.5 and cfg.lattice_bound == 16

    def test_bad_bumps(self):
        cfg = RunConfig(test_function={"bumps": [[0.0, -0.1, 1.0]]})
        cfg.validate()
        with pytest.raises(ConfigError):
            cfg.build_g()


class TestExitCodes:
    def test_lambda_rejected(self, capsys):
        code, out, err = run_cli(["weil", "--lambda", "0.5"], capsys)
        assert code == 2
        assert "Lambda" in err and out == ""

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, err = run_cli(["weil", "--config", str(tmp_path / "missing.json")], capsys)
        assert code == 2 and "configuration error" in err

    def test_empty_function_passes_trivially(self, capsys, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"test_function": {"bumps": []}}))
        code, out, _ = run_cli(["verify-all", "--config", str(p)], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["passed"]
        w = rep["results"]["weil"]["weil"]
        assert w["delta"] == 0.0 and w["prime_sum_total"] == 0.0
        assert rep["results"]["trace"]["trace"]["trace"] == 0.0

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "weiltrace", "weil", "--lambda", "1"],
                              capture_output=True, text=True)
        assert proc.returncode == 2


class TestReports:
    def test_verify_all_default(self, verify_all_report):
        code, rep, _ = verify_all_report
        assert code == 0 and rep["passed"]
        assert rep["schema"] == SCHEMA
        assert rep["place_set"] == [] and rep["mu"] > 0.5
        names = {c["name"] for c in rep["checks"]}
        for required in ("trace_identity", "quadruple_sum_nonnegative", "T_positive", "Vh_positive",
                         "VhT_real_nonnegative", "trace_series_vs_diagonal", "trace_series_vs_eigenvalues",
                         "reproducing_g", "reproducing_log", "decay_bound_c0.5"):
            assert required in names
        for c in rep["checks"]:
            assert "tolerance" in c and c["passed"]
        assert "timing_seconds" not in rep

    def test_csv_exports(self, verify_all_report):
        _, _, d = verify_all_report
        for name in ("lattice.csv", "trace_terms.csv", "spectrum.csv", "decay.csv"):
            assert (d / "csv" / name).stat().st_size > 0

    def test_deterministic_and_rerunnable(self, capsys, tmp_path):
        code1, out1, _ = run_cli(["trace", "--lattice-bound", "16"], capsys)
        code2, out2, _ = run_cli(["trace", "--lattice-bound", "16"], capsys)
        assert code1 == code2 == 0
        assert out1 == out2
        echo = tmp_path / "echo.json"
        echo.write_text(out1)
        code3, out3, _ = run_cli(["trace", "--config", str(echo)], capsys)
        assert code3 == 0 and out3 == out1

    def test_random_seed_and_mu_override(self, capsys):
        code, out, _ = run_cli(["weil", "--mu-override", "0.4", "--lattice-bound", "16"], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["place_set"] == [2] and rep["mu"] == 0.4
        cfg = RunConfig(test_function="random:7", commands=("weil",), lattice_bound=16)
        rep1, c1 = run(cfg)
        assert c1 == 0
        assert rep1["config"]["test_function"] == "random:7"
        assert len(rep1["test_function"]["bumps"]) >= 2

    def test_timing_opt_in(self):
        rep, _ = run(RunConfig(commands=("weil",), lattice_bound=8), timing=True)
        assert set(rep["timing_seconds"]) == {"weil"}

    def test_strict_json(self, verify_all_report):
        _, rep, _ = verify_all_report
        json.dumps(rep, allow_nan=False)
