#!/usr/bin/env python3
"""
wavelab Direct Solver - causal leapfrog integration of u_tt - u_xx = |u_x|^p

CFL = 1 scheme on the characteristic grid:

    u^{n+1}_i = u^n_{i-1} + u^n_{i+1} - u^{n-1}_i + h^2 |D_x u^n_i|^p

with centered D_x and zero padding. Level 1 comes from the Taylor start
u^1 = eps f + h eps g + h^2/2 (eps f'' + |eps f'|^p). Each level is updated
only on its light-cone slice |x| <= t + R; everything outside stays exactly 0.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import polars as pl

from core.errors import ParamsError
from core.grid import GridField, GridLayout, centered_gradient, x_difference
from core.params import Params
from wavelab_free_wave import FreeSolution

logger = logging.getLogger(__name__)


class DetectReason(Enum):
    THRESHOLD = "threshold"
    OVERFLOW = "overflow"
    HORIZON = "horizon"


@dataclass(frozen=True)
class Detection:
    level: int
    t: float
    reason: DetectReason
    max_grad: float


@dataclass(frozen=True)
class LifespanRecord:
    """Numerical lifespan of one run; T_num is +inf when the horizon was reached"""
    epsilon: float
    T_num: float
    detect_reason: DetectReason
    threshold_used: float
    h_used: float

    def __post_init__(self):
        if not self.T_num > 0:
            raise ValueError(f"T_num must be positive, got {self.T_num}")
        if (self.detect_reason is DetectReason.HORIZON) != math.isinf(self.T_num):
            raise ValueError("T_num is +inf exactly when the horizon was reached")

    @property
    def blew_up(self) -> bool:
        return self.detect_reason is not DetectReason.HORIZON

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "T_num": self.T_num if self.blew_up else None,
            "detect_reason": self.detect_reason.value,
            "threshold_used": self.threshold_used,
            "h_used": self.h_used,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LifespanRecord":
        T = data["T_num"]
        return cls(float(data["epsilon"]), math.inf if T is None else float(T),
                   DetectReason(data["detect_reason"]), float(data["threshold_used"]),
                   float(data["h_used"]))


def gradient_field(u: GridField) -> GridField:
    """D_x u on every level"""
    ux = x_difference(u)
    ux.name = "u_x"
    return ux


def detect_blowup(u_level: np.ndarray, params: Params, level: int) -> Optional[Detection]:
    """Fire when max|D_x u| >= blowup_threshold or any value is non-finite."""
    t = level * params.h
    with np.errstate(over="ignore", invalid="ignore"):
        if not np.all(np.isfinite(u_level)):
            return Detection(level, t, DetectReason.OVERFLOW, math.inf)
        grad = centered_gradient(u_level, params.h)
        if not np.all(np.isfinite(grad)):
            return Detection(level, t, DetectReason.OVERFLOW, math.inf)
    max_grad = float(np.max(np.abs(grad))) if grad.size else 0.0
    if max_grad >= params.blowup_threshold:
        return Detection(level, t, DetectReason.THRESHOLD, max_grad)
    return None


class LeapfrogMarcher:
    """Yields (n, u^n) level by level; the yielded array is reused, copy to keep it."""

    def __init__(self, fs: FreeSolution, params: Params, nonlinear: bool = True):
        if not params.horizon_divisible:
            raise ParamsError(f"h={params.h} must divide t_max={params.t_max}")
        if fs.R != params.R:
            raise ParamsError(f"data radius {fs.R} differs from params R={params.R}")
        self.fs = fs
        self.params = params
        self.nonlinear = nonlinear
        self.layout = GridLayout.for_params(params)

    def _start_levels(self) -> Tuple[np.ndarray, np.ndarray]:
        p, h, eps = self.params.p, self.params.h, self.params.epsilon
        f, g = self.fs.f, self.fs.g
        x = self.layout.x
        u0 = eps * f(x)
        source = eps * f(x, 2)
        if self.nonlinear:
            source = source + np.abs(eps * f(x, 1)) ** p
        u1 = u0 + h * eps * g(x) + 0.5 * h * h * source
        return u0, u1

    def levels(self) -> Iterator[Tuple[int, np.ndarray]]:
        p, h = self.params.p, self.params.h
        layout = self.layout
        c, K = layout.center, layout.K
        width = layout.n_x + 2  # one zero node of padding per side

        prev, curr = np.zeros(width), np.zeros(width)
        u0, u1 = self._start_levels()
        prev[1:-1], curr[1:-1] = u0, u1
        yield 0, prev[1:-1]
        if layout.N >= 1:
            yield 1, curr[1:-1]

        h2 = h * h
        for n in range(1, layout.N):
            half = n + 1 + K
            lo, hi = c - half + 1, c + half + 2  # padded indices of level n+1's cone
            left, right = curr[lo - 1:hi - 1], curr[lo + 1:hi + 1]
            with np.errstate(over="ignore", invalid="ignore"):
                update = left + right - prev[lo:hi]
                if self.nonlinear:
                    update = update + h2 * np.abs((right - left) / (2.0 * h)) ** p
            # prev's storage becomes level n+1; outside the new cone it already holds zeros
            prev[lo:hi] = update
            prev, curr = curr, prev
            yield n + 1, curr[1:-1]


LevelObserver = Callable[[int, np.ndarray], None]


def _record(params: Params, detection: Optional[Detection]) -> LifespanRecord:
    if detection is None:
        return LifespanRecord(params.epsilon, math.inf, DetectReason.HORIZON,
                              params.blowup_threshold, params.h)
    return LifespanRecord(params.epsilon, detection.t, detection.reason,
                          params.blowup_threshold, params.h)


def march(fs: FreeSolution, params: Params, observers: Sequence[LevelObserver] = (),
          nonlinear: bool = True) -> LifespanRecord:
    """Run the leapfrog to detection or horizon, handing every kept level to the observers.

    The detected level itself is not handed on. Observers see the marcher's
    reused buffer and must copy whatever they keep.
    """
    detection = None
    for n, level in LeapfrogMarcher(fs, params, nonlinear).levels():
        if n >= 1:
            detection = detect_blowup(level, params, n)
            if detection is not None:
                break
        for observe in observers:
            observe(n, level)
    return _record(params, detection)


class _ConeRows:
    """Keeps each level's cone slice; storage grows with the march"""

    def __init__(self, layout: GridLayout):
        self.layout = layout
        self.rows: List[np.ndarray] = []

    def __call__(self, n: int, level: np.ndarray) -> None:
        self.rows.append(level[self.layout.active_slice(n)].copy())

    def field(self, R: float) -> GridField:
        kept = GridLayout(self.layout.h, len(self.rows), self.layout.K)
        values = np.zeros((kept.n_levels, kept.n_x))
        for n, row in enumerate(self.rows):
            values[n, kept.active_slice(n)] = row
        return GridField(kept.h, kept.n_levels, kept.x_offset, values, R=R, name="u")


def log_lifespan(params: Params, record: LifespanRecord) -> None:
    if record.blew_up:
        logger.info(f"📊 eps={params.epsilon:.6g}: blow-up ({record.detect_reason.value}) at T={record.T_num:.6g}")
    else:
        logger.info(f"📊 eps={params.epsilon:.6g}: no blow-up before t_max={params.t_max}")


def solve_direct(fs: FreeSolution, params: Params,
                 nonlinear: bool = True) -> Tuple[GridField, LifespanRecord]:
    """March to detection or horizon, keeping every level before detection."""
    rows = _ConeRows(GridLayout.for_params(params))
    record = march(fs, params, [rows], nonlinear)
    log_lifespan(params, record)
    return rows.field(params.R), record


def measure_lifespan(fs: FreeSolution, params: Params, nonlinear: bool = True) -> LifespanRecord:
    """Same marching as solve_direct without storing levels (sweep mode)."""
    return march(fs, params, (), nonlinear)


SNAPSHOT_SCHEMA = {"t": pl.Float64, "x": pl.Float64, "u": pl.Float64, "u_x": pl.Float64}


class SnapshotCollector:
    """Level observer keeping (t, x, u, D_x u) on every stride-th level"""

    def __init__(self, layout: GridLayout, stride: int = 1):
        if stride < 1:
            raise ParamsError(f"snapshot stride must be >= 1, got {stride}")
        self.layout = layout
        self.stride = stride
        self._x = layout.x
        self._chunks: List[Tuple[np.ndarray, ...]] = []

    def __call__(self, n: int, level: np.ndarray) -> None:
        if n % self.stride:
            return
        sl = self.layout.active_slice(n)
        grad = centered_gradient(level, self.layout.h)[sl]
        values = level[sl].copy()
        self._chunks.append((np.full(values.size, n * self.layout.h), self._x[sl], values, grad))

    @property
    def n_snapshots(self) -> int:
        return len(self._chunks)

    def frame(self) -> pl.DataFrame:
        if not self._chunks:
            return pl.DataFrame(schema=SNAPSHOT_SCHEMA)
        ts, xs, us, gs = zip(*self._chunks)
        return pl.DataFrame({
            "t": np.concatenate(ts),
            "x": np.concatenate(xs),
            "u": np.concatenate(us),
            "u_x": np.concatenate(gs),
        })

