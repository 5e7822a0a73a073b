#!/usr/bin/env python3
"""
wavelab Free Wave - closed-form d'Alembert solution and its derivatives

u0(x,t) = 1/2{f(x+t) + f(x-t)} + 1/2 int_{x-t}^{x+t} g(y) dy

The g-integral uses the exact antiderivative G (G(-R) = 0); only differences
G(x+t) - G(x-t) appear, so the normalisation never matters.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from core.errors import FreeWaveError, ParamsError, ProfileSmoothnessError
from core.grid import GridField, GridLayout
from core.params import Params
from core.profile import Antiderivative, Profile

logger = logging.getLogger(__name__)


class FreeField(Enum):
    U0 = "u0"
    U0_T = "u0_t"
    U0_X = "u0_x"
    U0_XT = "u0_xt"
    U0_TT = "u0_tt"
    U0_XX = "u0_xx"


@dataclass(frozen=True)
class FreeSolution:
    """Initial data (f, g) with the antiderivative G of g"""
    f: Profile
    g: Profile
    G: Antiderivative

    @classmethod
    def from_data(cls, f: Profile, g: Profile) -> "FreeSolution":
        if f.R != g.R:
            raise ParamsError(f"f and g disagree on R: {f.R} vs {g.R}")
        return cls(f, g, g.antiderivative())

    @property
    def R(self) -> float:
        return self.f.R


def _check_smoothness(fs: FreeSolution, which: FreeField) -> None:
    need_f = {FreeField.U0: 0, FreeField.U0_T: 1, FreeField.U0_X: 1,
              FreeField.U0_XT: 2, FreeField.U0_TT: 2, FreeField.U0_XX: 2}[which]
    need_g = {FreeField.U0: 0, FreeField.U0_T: 0, FreeField.U0_X: 0,
              FreeField.U0_XT: 1, FreeField.U0_TT: 1, FreeField.U0_XX: 1}[which]
    if fs.f.smoothness < need_f or fs.g.smoothness < need_g:
        raise ProfileSmoothnessError(
            f"{which.value} needs f in C^{need_f} and g in C^{need_g}, "
            f"have C^{fs.f.smoothness} and C^{fs.g.smoothness}"
        )


def eval_free(fs: FreeSolution, which: Union[FreeField, str], x, t) -> Union[float, np.ndarray]:
    """Exact value of the selected free-wave quantity at (x, t); broadcasts."""
    which = FreeField(which)
    x_arr, t_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise FreeWaveError("free solution is only defined for t >= 0")
    _check_smoothness(fs, which)

    xp, xm = x_arr + t_arr, x_arr - t_arr
    f, g = fs.f, fs.g

    if which is FreeField.U0:
        out = 0.5 * (f(xp) + f(xm)) + 0.5 * (fs.G(xp) - fs.G(xm))
    elif which is FreeField.U0_T:
        out = 0.5 * (f(xp, 1) - f(xm, 1) + g(xp) + g(xm))
    elif which is FreeField.U0_X:
        out = 0.5 * (f(xp, 1) + f(xm, 1) + g(xp) - g(xm))
    elif which is FreeField.U0_XT:
        out = 0.5 * (f(xp, 2) - f(xm, 2) + g(xp, 1) + g(xm, 1))
    else:
        # u0_tt = u0_xx for a free wave
        out = 0.5 * (f(xp, 2) + f(xm, 2) + g(xp, 1) - g(xm, 1))

    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def sample_free(fs: FreeSolution, which: Union[FreeField, str], grid: Params,
                n_t: Optional[int] = None) -> GridField:
    """eval_free at every node of the run layout with n_t levels."""
    n_t = grid.n_levels if n_t is None else n_t
    if (n_t - 1) * grid.h > grid.t_max * (1 + 1e-12):
        raise ParamsError(f"{n_t} levels of h={grid.h} overrun t_max={grid.t_max}")

    layout = GridLayout.for_params(grid, n_t)
    which = FreeField(which)
    values = eval_free(fs, which, layout.x[None, :], layout.t[:, None])
    # beyond the cone both x+t and x-t leave [-R, R], so values are exactly 0 already
    return GridField(layout.h, layout.n_levels, layout.x_offset, values, R=grid.R,
                     name=which.value)
