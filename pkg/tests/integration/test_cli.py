#!/usr/bin/env python3
"""
End-to-end runs of the wavelab command line on small scenarios
"""

from pathlib import Path

import pytest

from core.profile import compute_M
from core.parser import load_config
from wavelab_artifacts import read_csv, read_json, read_manifest
from wavelab_cli import EXIT_ASSERTION, EXIT_CONFIG, EXIT_OK, build_parser, main

pytestmark = pytest.mark.integration

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

SMALL = """
problem: {p: 2, epsilon: 0.5, R: 1.0, R0: 0.5}
numerics: {h: 0.03125, t_max: 4, blowup_threshold: 10000, snapshot_stride: 8}
data:
  f:
    - {center: 0.75, radius: 0.25, amplitude: 1.0, order: 3}
sweep: {eps: [1.0, 0.5, 0.3, 0.1], parallel: 2}
output: {directory: unused}
"""

NO_SWEEP = SMALL.split("sweep:")[0] + "output: {directory: unused}\n"


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return str(path)


def run(command, config, out, *extra):
    return main([command, "--config", config, "--out", str(out), *extra])


class TestConstants:
    def test_writes_constants(self, small_config, tmp_path, capsys):
        assert run("constants", small_config, tmp_path / "c") == EXIT_OK
        doc = read_json(str(tmp_path / "c" / "constants.json"))
        cfg = load_config(small_config)
        fs = cfg.free_solution()
        assert doc["result"]["M"] == compute_M(fs.f, fs.g)
        assert doc["result"]["C_f"] == pytest.approx(16.0 / 315.0)
        assert doc["manifest"]["command"] == "constants"
        assert "eps1" in capsys.readouterr().out

    def test_repeat_is_byte_identical(self, small_config, tmp_path):
        run("constants", small_config, tmp_path / "a")
        run("constants", small_config, tmp_path / "b")
        assert (tmp_path / "a" / "constants.json").read_bytes() == \
            (tmp_path / "b" / "constants.json").read_bytes()

    def test_zero_data_is_config_error(self, tmp_path):
        assert run("constants", str(CONFIGS / "zero_data.yaml"), tmp_path) == EXIT_CONFIG


class TestConfigErrors:
    def test_missing_config(self, tmp_path):
        assert run("solve", str(tmp_path / "absent.yaml"), tmp_path) == EXIT_CONFIG

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(SMALL.replace("p: 2", "p: 0.5"))
        assert run("solve", str(path), tmp_path) == EXIT_CONFIG

    def test_bad_h_override(self, small_config, tmp_path):
        assert run("solve", small_config, tmp_path, "--h-override", "0.3") == EXIT_CONFIG

    def test_sweep_needs_section(self, tmp_path):
        path = tmp_path / "nosweep.yaml"
        path.write_text(NO_SWEEP)
        assert run("sweep", str(path), tmp_path) == EXIT_CONFIG

    def test_bad_parallel(self, small_config, tmp_path):
        assert run("sweep", small_config, tmp_path, "--parallel", "0") == EXIT_CONFIG

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestSolve:
    def test_solve_artifacts(self, small_config, tmp_path):
        out = tmp_path / "solve"
        assert run("solve", small_config, out, "--seedless") == EXIT_OK
        lifespan = read_json(str(out / "lifespan.json"))["result"]
        assert lifespan["detect_reason"] in ("threshold", "overflow")
        assert 0 < lifespan["T_num"] < 4
        picard = read_json(str(out / "picard.json"))["result"]
        assert picard["conditions"]["c2"]["holds"] is False
        snapshots = read_csv(str(out / "snapshots.csv"))
        assert snapshots.columns == ["t", "x", "u", "u_x"]
        assert read_manifest(str(out / "picard_trace.csv"))["command"] == "solve"
        assert picard["norm_ut"] > 0
        gap = picard["wt_gap"]
        assert set(gap) == {"consistent", "iterated", "norm_wt"}
        assert (snapshots["t"].unique().sort().to_list()
                == [n * 0.03125 for n in range(0, int(round(lifespan["T_num"] / 0.03125)), 8)])

    def test_h_override_recorded(self, small_config, tmp_path):
        out = tmp_path / "fine"
        assert run("solve", small_config, out, "--h-override", "0.015625") == EXIT_OK
        manifest = read_manifest(str(out / "lifespan.json"))
        assert manifest["config"]["numerics"]["h"] == 0.015625
        assert read_json(str(out / "lifespan.json"))["result"]["h_used"] == 0.015625

    def test_zero_data_solve(self, tmp_path):
        out = tmp_path / "zero"
        assert run("solve", str(CONFIGS / "zero_data.yaml"), out) == EXIT_OK
        assert read_json(str(out / "lifespan.json"))["result"]["T_num"] is None
        assert read_json(str(out / "picard.json"))["result"]["converged"] is True


class TestVerify:
    def test_blowup_run_verifies(self, small_config, tmp_path):
        out = tmp_path / "verify"
        assert run("verify", small_config, out) == EXIT_OK
        doc = read_json(str(out / "verify.json"))["result"]
        names = [report["name"] for report in doc["reports"]]
        assert names == ["lower_bound", "ode_inequality", "direct_solution", "picard"]
        assert all(report["all_hold"] for report in doc["reports"])
        trace = read_csv(str(out / "functional_trace.csv"))
        assert trace["H"][0] == 0.0

    def test_zero_data_verifies(self, tmp_path):
        assert run("verify", str(CONFIGS / "zero_data.yaml"), tmp_path / "zero") == EXIT_OK

    def test_small_amplitude_asserts_picard(self, tmp_path):
        path = tmp_path / "tiny.yaml"
        path.write_text(SMALL.replace("epsilon: 0.5", "epsilon: 0.0001")
                        .replace("t_max: 4", "t_max: 1"))
        out = tmp_path / "tiny"
        assert run("verify", str(path), out) == EXIT_OK
        picard = [r for r in read_json(str(out / "verify.json"))["result"]["reports"]
                  if r["name"] == "picard"][0]
        assert len(picard["links"]) == 6
        assert picard["links"][-1]["name"] == "D_t w matches rebuilt w_t"
        assert picard["all_hold"]


class TestSweep:
    def test_sweep_artifacts_are_deterministic(self, small_config, tmp_path):
        codes = [run("sweep", small_config, tmp_path / name) for name in ("a", "b")]
        assert codes[0] == codes[1]
        assert codes[0] in (EXIT_OK, EXIT_ASSERTION)
        for name in ("sweep.json", "sweep.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_parallel_flag_does_not_change_results(self, small_config, tmp_path):
        run("sweep", small_config, tmp_path / "one", "--parallel", "1")
        run("sweep", small_config, tmp_path / "four", "--parallel", "4")
        assert (tmp_path / "one" / "sweep.csv").read_bytes() == (tmp_path / "four" / "sweep.csv").read_bytes()


class TestRefine:
    def test_refinement_artifact(self, tmp_path):
        path = tmp_path / "nosweep.yaml"
        path.write_text(NO_SWEEP)
        out = tmp_path / "refine"
        assert run("sweep", str(path), out, "--refine", "0.5", "--halvings", "1") == EXIT_OK
        doc = read_json(str(out / "refinement.json"))["result"]
        assert doc["epsilon"] == 0.5
        assert [r["h_used"] for r in doc["records"]] == [0.03125, 0.015625]
        first, second = (r["T_num"] for r in doc["records"])
        assert abs(first - second) < 0.2 * second
        assert not (out / "sweep.json").exists()

    def test_negative_halvings(self, small_config, tmp_path):
        assert run("sweep", small_config, tmp_path, "--refine", "0.5", "--halvings", "-1") == EXIT_CONFIG
