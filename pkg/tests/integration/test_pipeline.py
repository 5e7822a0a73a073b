#!/usr/bin/env python3
"""
Pipeline runs on the shipped scenarios: Picard window, direct lifespan,
functional chain and the scaling law. The full sweeps are marked slow.
"""

import math
from pathlib import Path

import pytest

from core.parser import load_config
from core.profile import compute_M
from wavelab_blowup_functional import (compute_constants, compute_trace,
                                       verify_lower_bound, verify_ode_inequality)
from wavelab_direct_solver import gradient_field, solve_direct
from wavelab_lifespan_lab import Scenario, sweep
from wavelab_picard import check_conditions, reconstruct_u, run_picard, theory_constants

pytestmark = pytest.mark.integration

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def load(name, h=None):
    cfg = load_config(str(CONFIGS / name))
    return cfg.with_h(h) if h is not None else cfg


def scenario_for(cfg, threshold=None):
    if threshold is None:
        threshold = cfg.numerics.blowup_threshold
    return Scenario(cfg.free_solution(), cfg.params(), cfg.numerics.apriori_C, threshold=threshold)


class TestPicardWindow:
    """Inside the guaranteed window the iteration contracts"""

    @pytest.mark.parametrize("name", ["default_p2.yaml", "default_p3.yaml"])
    def test_window_below_eps1(self, name):
        cfg = load(name, h=1.0 / 64.0)
        fs = cfg.free_solution()
        M = compute_M(fs.f, fs.g)
        consts = theory_constants(M, cfg.params())
        eps = 0.5 * consts.eps1
        T = consts.guaranteed_horizon(eps)
        params = cfg.params(epsilon=eps).replace(t_max=T)
        assert check_conditions(M, eps, T, params).all_hold

        result = run_picard(fs, params)
        assert result.converged
        for state in result.trace:
            assert state.norms.norm_w <= 2 * M * eps * 1.02
            assert state.norms.norm_wt <= 2 * M * eps * 1.02
        ratios = [s.ratio_w for prev, s in zip(result.trace, result.trace[1:])
                  if prev.delta_w > result.tol and math.isfinite(s.ratio_w)]
        assert max(ratios, default=0.0) <= 0.55
        assert reconstruct_u(result.w).support_holds()


class TestFunctionalChain:
    def test_chain_on_coarse_default_data(self):
        cfg = load("default_p2.yaml", h=1.0 / 64.0)
        fs = cfg.free_solution()
        params = cfg.params(epsilon=0.5).replace(t_max=4.0, blowup_threshold=1e4)
        u, record = solve_direct(fs, params)
        assert record.blew_up
        trace = compute_trace(u, gradient_field(u), params)
        consts = compute_constants(fs.f, params)
        assert verify_lower_bound(trace, consts, 0.5).all_hold
        assert verify_ode_inequality(trace, consts, params.p).all_hold

    @pytest.mark.slow
    def test_chain_on_default_run(self):
        cfg = load("default_p2.yaml")
        fs = cfg.free_solution()
        params = cfg.params()
        u, record = solve_direct(fs, params)
        assert record.blew_up
        stride = max(1, math.ceil(u.n_t / 512))
        trace = compute_trace(u, gradient_field(u), params, stride=stride)
        consts = compute_constants(fs.f, params)
        assert verify_lower_bound(trace, consts, params.epsilon).all_hold
        assert verify_ode_inequality(trace, consts, params.p).all_hold


class TestScalingLaw:
    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["default_p2.yaml", "default_p3.yaml"])
    def test_default_sweep(self, name):
        cfg = load(name)
        result = sweep(scenario_for(cfg), cfg.sweep.eps_list(), parallel=4)
        assert len(result.points) >= 8
        assert result.slope_ok()
        assert result.r_squared >= 0.98
        assert result.sandwich_ok

    def test_coarse_p2_trend(self):
        cfg = load("default_p2.yaml", h=1.0 / 32.0)
        result = sweep(scenario_for(cfg, threshold=1e4), [0.2, 0.1, 0.05, 0.02], parallel=2)
        assert result.excluded == []
        assert -1.3 < result.slope < -0.7
        assert result.sandwich_ok
