#!/usr/bin/env python3
"""
Tests for epsilon sweeps, the power-law fit and the sandwich check
"""

import math

import pytest

from core.errors import FitError, SweepError
from core.profile import compute_M
from wavelab_direct_solver import DetectReason, LifespanRecord
from wavelab_lifespan_lab import (Scenario, _monotonicity_flags, fit_powerlaw,
                                  log_spaced_epsilons, refinement_study, sweep,
                                  validate_eps_list)

pytestmark = pytest.mark.unit

SWEEP_EPS = [1.0, 0.5, 0.3, 0.1]


@pytest.fixture
def scenario(edge_solution, build_params):
    params = build_params(p=2.0, epsilon=1.0, h=1.0 / 32.0, t_max=16.0)
    return Scenario(edge_solution, params, threshold=1e4)


class TestEpsilonLists:
    def test_log_spacing(self):
        eps = log_spaced_epsilons(0.1, 0.01, 8)
        assert len(eps) == 9
        assert eps[0] == pytest.approx(0.1)
        assert eps[-1] == pytest.approx(0.01)
        ratios = [a / b for a, b in zip(eps, eps[1:])]
        assert all(r == pytest.approx(10 ** 0.125) for r in ratios)

    def test_bad_range(self):
        with pytest.raises(SweepError):
            log_spaced_epsilons(0.01, 0.1)
        with pytest.raises(SweepError):
            log_spaced_epsilons(0.1, 0.01, 0)

    def test_validation(self):
        assert validate_eps_list([1, 0.5, 0.1]) == [1.0, 0.5, 0.1]
        with pytest.raises(FitError):
            validate_eps_list([1.0, 0.1])
        with pytest.raises(SweepError):
            validate_eps_list([1.0, 0.1, 0.5])
        with pytest.raises(SweepError):
            validate_eps_list([1.0, 0.5, 0.2])
        with pytest.raises(SweepError):
            validate_eps_list([1.0, 0.0, -0.1])


class TestPowerLawFit:
    def test_exact_power_law(self):
        pairs = [(x, 3.0 * x ** -2) for x in (0.01, 0.02, 0.05, 0.1)]
        fit = fit_powerlaw(pairs)
        assert fit.slope == pytest.approx(-2.0, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.n == 4

    def test_constant_values(self):
        fit = fit_powerlaw([(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)])
        assert fit.slope == pytest.approx(0.0, abs=1e-15)
        assert fit.r_squared == 1.0

    def test_noisy_fit_lowers_r_squared(self):
        fit = fit_powerlaw([(1.0, 1.0), (2.0, 0.4), (4.0, 0.3), (8.0, 0.1)])
        assert 0.0 <= fit.r_squared < 1.0

    @pytest.mark.parametrize("pairs", [
        [(1.0, 1.0), (2.0, 2.0)],
        [(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)],
        [(1.0, 1.0), (2.0, math.inf), (3.0, 1.0)],
        [(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)],
    ])
    def test_rejected_inputs(self, pairs):
        with pytest.raises(FitError):
            fit_powerlaw(pairs)


class TestMonotonicity:
    def test_flags_inversions_beyond_one_step(self):
        records = [
            LifespanRecord(0.4, 1.0, DetectReason.THRESHOLD, 1.0, 0.1),
            LifespanRecord(0.2, 1.05, DetectReason.THRESHOLD, 1.0, 0.1),
            LifespanRecord(0.1, 0.8, DetectReason.THRESHOLD, 1.0, 0.1),
        ]
        flags = _monotonicity_flags(records)
        assert flags == [{"eps_large": 0.2, "eps_small": 0.1, "T_large": 1.05, "T_small": 0.8}]


class TestSweep:
    def test_sweep_records_in_order(self, scenario):
        result = sweep(scenario, SWEEP_EPS)
        assert [r.epsilon for r in result.records] == SWEEP_EPS
        assert all(r.blew_up for r in result.records)
        assert result.excluded == []
        assert result.expected_slope == -1.0
        assert result.fit.n == 4
        assert result.slope < 0

    def test_sandwich(self, scenario):
        result = sweep(scenario, SWEEP_EPS)
        assert all(point.lower_ok for point in result.points)
        assert all(point.upper_ok for point in result.points)
        assert result.sandwich_ok
        assert result.eps1 is not None and result.eps1 < SWEEP_EPS[-1]

    def test_parallel_matches_serial(self, scenario):
        serial = sweep(scenario, SWEEP_EPS, parallel=1)
        threaded = sweep(scenario, SWEEP_EPS, parallel=3)
        assert serial.to_dict() == threaded.to_dict()

    def test_frame_and_dict(self, scenario):
        result = sweep(scenario, SWEEP_EPS)
        frame = result.frame()
        assert frame.height == 4
        assert frame["epsilon"].to_list() == SWEEP_EPS
        doc = result.to_dict()
        assert doc["fit"]["n"] == 4
        assert doc["slope_ok"] == result.slope_ok()

    def test_horizon_runs_excluded(self, edge_solution, build_params):
        params = build_params(p=2.0, epsilon=1.0, h=1.0 / 32.0, t_max=2.0)
        scenario = Scenario(edge_solution, params, threshold=1e4)
        result = sweep(scenario, [2.0, 1.0, 0.8, 0.01])
        assert result.excluded == [0.01]
        assert [r.epsilon for r in result.records] == [2.0, 1.0, 0.8]

    def test_too_few_blowups(self, edge_solution, build_params):
        params = build_params(p=2.0, epsilon=1.0, h=1.0 / 32.0, t_max=2.0)
        scenario = Scenario(edge_solution, params, threshold=1e4)
        with pytest.raises(FitError):
            sweep(scenario, [2.0, 1.0, 0.05, 0.01])

    def test_bad_parallelism(self, scenario):
        with pytest.raises(SweepError):
            sweep(scenario, SWEEP_EPS, parallel=0)

    def test_default_threshold_per_amplitude(self, edge_solution, build_params):
        scenario = Scenario(edge_solution, build_params())
        M = compute_M(edge_solution.f, edge_solution.g)
        assert scenario.params_for(0.1).blowup_threshold == pytest.approx(1e6 * 0.1 * M)
        assert scenario.params_for(0.1, h=1.0 / 64.0).h == 1.0 / 64.0


class TestRefinement:
    def test_halving_h(self, scenario):
        records = refinement_study(scenario, 1.0, halvings=1)
        assert [r.h_used for r in records] == [1.0 / 32.0, 1.0 / 64.0]
        coarse, fine = records
        assert abs(coarse.T_num - fine.T_num) / fine.T_num < 0.2

    def test_negative_halvings(self, scenario):
        with pytest.raises(SweepError):
            refinement_study(scenario, 1.0, halvings=-1)
