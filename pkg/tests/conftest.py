#!/usr/bin/env python3
"""
Shared fixtures: small scenarios that run in well under a second
"""

import pytest

from core.params import Params
from core.profile import make_bump, zero_profile
from wavelab_free_wave import FreeSolution

H = 1.0 / 32.0


@pytest.fixture
def wide_bump():
    """(1 - x^2)^4 on [-1, 1]"""
    return make_bump(0.0, 1.0, 1.0, 3, R=1.0)


@pytest.fixture
def edge_bump():
    """The default scenario's bump on [0.5, 1]"""
    return make_bump(0.75, 0.25, 1.0, 3, R=1.0)


@pytest.fixture
def velocity_bump():
    return make_bump(-0.25, 0.5, 0.5, 3, R=1.0)


@pytest.fixture
def edge_solution(edge_bump):
    return FreeSolution.from_data(edge_bump, zero_profile(1.0))


@pytest.fixture
def wide_solution(wide_bump):
    return FreeSolution.from_data(wide_bump, zero_profile(1.0))


@pytest.fixture
def mixed_solution(wide_bump, velocity_bump):
    return FreeSolution.from_data(wide_bump, velocity_bump)


@pytest.fixture
def zero_solution():
    return FreeSolution.from_data(zero_profile(1.0), zero_profile(1.0))


def make_params(p=2.0, epsilon=0.1, h=H, t_max=1.0, threshold=1e6, R=1.0, R0=0.5) -> Params:
    return Params(p=p, epsilon=epsilon, R=R, R0=R0, h=h, t_max=t_max, blowup_threshold=threshold)


@pytest.fixture
def params():
    return make_params()


@pytest.fixture
def build_params():
    return make_params
