#!/usr/bin/env python3
"""
Tests for the d'Alembert free solution
"""

import numpy as np
import pytest

from core.errors import FreeWaveError, ParamsError, ProfileSmoothnessError
from core.profile import make_bump, zero_profile
from wavelab_free_wave import FreeField, FreeSolution, eval_free, sample_free

pytestmark = pytest.mark.unit


class TestEvalFree:
    def test_initial_data_recovered(self, mixed_solution):
        x = np.linspace(-1.2, 1.2, 49)
        np.testing.assert_allclose(eval_free(mixed_solution, FreeField.U0, x, 0.0),
                                   mixed_solution.f(x), atol=1e-15)
        np.testing.assert_allclose(eval_free(mixed_solution, FreeField.U0_T, x, 0.0),
                                   mixed_solution.g(x), atol=1e-15)
        np.testing.assert_allclose(eval_free(mixed_solution, FreeField.U0_X, x, 0.0),
                                   mixed_solution.f(x, 1), atol=1e-14)

    def test_string_selector(self, mixed_solution):
        assert eval_free(mixed_solution, "u0", 0.1, 0.2) == eval_free(mixed_solution, FreeField.U0, 0.1, 0.2)

    def test_parallelogram_identity(self, mixed_solution):
        # corners (x,t), (x+a,t+a), (x+a-b,t+a+b), (x-b,t+b) of a characteristic parallelogram
        rng = np.random.default_rng(11)
        x = rng.uniform(-1.5, 1.5, 200)
        t = rng.uniform(0.0, 1.0, 200)
        a = rng.uniform(0.0, 0.7, 200)
        b = rng.uniform(0.0, 0.7, 200)
        u = lambda xx, tt: eval_free(mixed_solution, FreeField.U0, xx, tt)
        lhs = u(x, t) + u(x + a - b, t + a + b)
        rhs = u(x + a, t + a) + u(x - b, t + b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_derivatives_match_finite_differences(self, mixed_solution):
        x, t, d = 0.3, 0.4, 1e-5
        u = lambda xx, tt: eval_free(mixed_solution, FreeField.U0, xx, tt)
        ux = lambda xx, tt: eval_free(mixed_solution, FreeField.U0_X, xx, tt)
        assert eval_free(mixed_solution, FreeField.U0_X, x, t) == pytest.approx(
            (u(x + d, t) - u(x - d, t)) / (2 * d), abs=1e-8)
        assert eval_free(mixed_solution, FreeField.U0_T, x, t) == pytest.approx(
            (u(x, t + d) - u(x, t - d)) / (2 * d), abs=1e-8)
        assert eval_free(mixed_solution, FreeField.U0_XT, x, t) == pytest.approx(
            (ux(x, t + d) - ux(x, t - d)) / (2 * d), abs=1e-7)
        assert eval_free(mixed_solution, FreeField.U0_XX, x, t) == pytest.approx(
            (ux(x + d, t) - ux(x - d, t)) / (2 * d), abs=1e-7)

    def test_wave_equation_holds(self, mixed_solution):
        x = np.linspace(-2.0, 2.0, 41)
        tt = eval_free(mixed_solution, FreeField.U0_TT, x, 0.7)
        xx = eval_free(mixed_solution, FreeField.U0_XX, x, 0.7)
        np.testing.assert_array_equal(tt, xx)

    def test_negative_time_rejected(self, mixed_solution):
        with pytest.raises(FreeWaveError):
            eval_free(mixed_solution, FreeField.U0, 0.0, -0.1)

    def test_smoothness_requirements(self):
        rough = FreeSolution.from_data(make_bump(0.0, 0.5, 1.0, 1), zero_profile(1.0))
        eval_free(rough, FreeField.U0_X, 0.1, 0.1)
        with pytest.raises(ProfileSmoothnessError):
            eval_free(rough, FreeField.U0_XT, 0.1, 0.1)

    def test_radius_mismatch(self, wide_bump):
        with pytest.raises(ParamsError):
            FreeSolution.from_data(wide_bump, zero_profile(2.0))


class TestSampleFree:
    @pytest.mark.parametrize("which", list(FreeField))
    def test_sampled_fields_stay_in_cone(self, mixed_solution, params, which):
        field = sample_free(mixed_solution, which, params)
        assert field.n_t == params.n_levels
        assert field.support_holds()

    def test_samples_agree_with_pointwise(self, mixed_solution, params):
        field = sample_free(mixed_solution, FreeField.U0, params)
        n, i = 20, field.center + 7
        assert field.values[n, i] == pytest.approx(
            eval_free(mixed_solution, FreeField.U0, field.x[i], n * params.h), rel=1e-14, abs=1e-16)

    def test_too_many_levels(self, mixed_solution, params):
        with pytest.raises(ParamsError):
            sample_free(mixed_solution, FreeField.U0, params, n_t=params.n_levels + 1)
