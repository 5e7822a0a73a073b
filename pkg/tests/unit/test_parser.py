#!/usr/bin/env python3
"""
Tests for the YAML run-config parser
"""

from pathlib import Path

import pytest

from core.errors import ConfigError
from core.parser import RunConfig, WaveLabConfigParser, load_config

pytestmark = pytest.mark.unit

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

MINIMAL = """
problem: {p: 2, epsilon: 0.1}
numerics: {h: 0.03125, t_max: 2}
data:
  f:
    - {center: 0.75, radius: 0.25}
"""


@pytest.fixture
def parser():
    return WaveLabConfigParser()


class TestLoading:
    def test_minimal_config_defaults(self, parser):
        cfg = parser.load_string(MINIMAL)
        assert isinstance(cfg, RunConfig)
        assert cfg.problem.R == 1.0
        assert cfg.problem.R0 == 0.5
        assert cfg.numerics.apriori_C == 1.0
        assert cfg.numerics.picard_max_iter == 60
        assert cfg.data.f[0].order == 3
        assert cfg.data.f[0].amplitude == 1.0
        assert cfg.sweep is None
        assert cfg.output.directory == "runs"
        assert parser.config is cfg

    def test_params_and_default_threshold(self, parser):
        cfg = parser.load_string(MINIMAL)
        params = cfg.params()
        assert params.p == 2.0
        assert params.h == 0.03125
        assert params.blowup_threshold == pytest.approx(1e6 * 0.1 * cfg.M)
        assert cfg.params(epsilon=0.2).epsilon == 0.2

    def test_explicit_threshold(self, parser):
        cfg = parser.load_string(MINIMAL.replace("t_max: 2}", "t_max: 2, blowup_threshold: 50}"))
        assert cfg.params().blowup_threshold == 50.0
        assert cfg.params(epsilon=0.5).blowup_threshold == 50.0

    def test_profiles_and_free_solution(self, parser):
        cfg = parser.load_string(MINIMAL)
        f, g = cfg.profiles()
        assert f(0.75) == pytest.approx(1.0)
        assert g.pieces == ()
        assert cfg.free_solution().f(0.75) == pytest.approx(1.0)

    @pytest.mark.parametrize("name", ["default_p2.yaml", "default_p3.yaml", "zero_data.yaml"])
    def test_shipped_configs_load(self, name):
        cfg = load_config(str(CONFIGS / name))
        assert cfg.params().t_max > 0

    def test_shipped_sweeps(self):
        eps = load_config(str(CONFIGS / "default_p2.yaml")).sweep.eps_list()
        assert len(eps) == 9
        assert eps[0] == pytest.approx(0.05)
        assert eps[-1] == pytest.approx(0.005)

    def test_zero_data_config(self):
        cfg = load_config(str(CONFIGS / "zero_data.yaml"))
        assert cfg.M == 0.0
        assert cfg.params().blowup_threshold == 1.0


class TestValidation:
    @pytest.mark.parametrize("text", [
        MINIMAL.replace("p: 2", "p: 1"),
        MINIMAL.replace("epsilon: 0.1", "epsilon: -0.1"),
        MINIMAL.replace("h: 0.03125", "h: 0.3"),
        MINIMAL.replace("t_max: 2", "t_max: 2, colour: blue"),
        MINIMAL.replace("radius: 0.25", "radius: 0.5"),
        MINIMAL.replace("radius: 0.25}", "radius: 0.25, order: 1}"),
        MINIMAL + "sweep: {eps: [0.1, 0.01, 0.001], start: 0.1, stop: 0.01}\n",
        MINIMAL + "sweep: {start: 0.1}\n",
        MINIMAL + "extra: 1\n",
        "problem: {p: 2, epsilon: 0.1}\n",
        "- just\n- a list\n",
        "problem: [unclosed\n",
    ])
    def test_rejected(self, parser, text):
        with pytest.raises(ConfigError):
            parser.load_string(text)

    def test_config_error_is_value_error(self, parser):
        with pytest.raises(ValueError):
            parser.load_string("")

    def test_missing_file(self, parser, tmp_path):
        with pytest.raises(ConfigError):
            parser.load_file(str(tmp_path / "absent.yaml"))

    def test_load_file_records_source(self, parser, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(MINIMAL)
        parser.load_file(str(path))
        assert parser.source == str(path)
        assert parser.raw["problem"]["p"] == 2


class TestSweepSection:
    def test_explicit_list(self, parser):
        cfg = parser.load_string(MINIMAL + "sweep: {eps: [0.1, 0.05, 0.01], parallel: 2}\n")
        assert cfg.sweep.eps_list() == [0.1, 0.05, 0.01]
        assert cfg.sweep.parallel == 2

    def test_range(self, parser):
        cfg = parser.load_string(MINIMAL + "sweep: {start: 0.1, stop: 0.001, per_decade: 4}\n")
        assert len(cfg.sweep.eps_list()) == 9


class TestOverrides:
    def test_with_h(self, parser):
        cfg = parser.load_string(MINIMAL)
        finer = cfg.with_h(0.015625)
        assert finer.numerics.h == 0.015625
        assert cfg.numerics.h == 0.03125

    def test_with_bad_h(self, parser):
        with pytest.raises(ConfigError):
            parser.load_string(MINIMAL).with_h(0.3)

    def test_manifest_is_plain(self, parser):
        manifest = parser.load_string(MINIMAL).manifest()
        assert manifest["problem"]["p"] == 2.0
        assert manifest["data"]["f"][0]["center"] == 0.75
        assert manifest["sweep"] is None
