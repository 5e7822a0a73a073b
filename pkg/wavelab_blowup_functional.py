#!/usr/bin/env python3
"""
wavelab Blow-up Functional - weighted averages that force finite-time blow-up

    H(t)  = int_0^t (t-s) ds int_{s+R0}^{s+R} u(x,s) dx
    H''(t)= int_{t+R0}^{t+R} u(x,t) dx
    F(t)  = int_{t+R0}^{t+R} dx int_0^t ds int_{x-t+s}^{x+t-s} |u_x(y,s)|^p dy

Traces of these quantities are built from solver output and checked against
the chain H >= C_f eps t^2, H'' >= 1/2 F >= (1/2t) weighted_Lp and the Hoelder
step |H|^p <= weighted_Lp I(t)^{p-1}. A scalar comparison ODE turns the chain
into a lifespan estimate.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
import polars as pl

from core.errors import (BlowupHypothesisError, FieldTooNarrowError,
                         ODEComparisonError, ParamsError)
from core.grid import GridField, GridLayout
from core.params import Params
from core.profile import Profile

logger = logging.getLogger(__name__)

# Every link is checked with slack SLACK_FACTOR * h * (scale of the quantity)
SLACK_FACTOR = 5.0

# Comparison ODE stepping
ODE_BASE_STEP = 1.0 / 64.0       # dt <= ODE_BASE_STEP * t
ODE_GROWTH_LIMIT = 0.05          # dt <= ODE_GROWTH_LIMIT * h / h'
ODE_STEP_RTOL = 1e-9             # full step vs two half steps
ODE_MAX_HALVINGS = 60
ODE_TAIL_RTOL = 1e-10            # stop once the remaining time is this small relative to t
ODE_DOMINANCE = 1e3              # power-law term must exceed the floor this much before the tail is used
ODE_HUGE = 1e100
ODE_CAP_FACTOR = 1e3             # give up beyond ODE_CAP_FACTOR * eps^{-(p-1)}


@dataclass(frozen=True)
class BlowupConstants:
    C_f: float
    R1: float
    I_coeff: float  # I(t) = I_coeff * t^2
    R0: float
    R: float

    def I(self, t):
        return self.I_coeff * np.asarray(t, dtype=float) ** 2

    def to_dict(self) -> Dict:
        return {"C_f": self.C_f, "R1": self.R1, "I_coeff": self.I_coeff}

    @classmethod
    def degenerate(cls, params: Params) -> "BlowupConstants":
        """C_f = 0 stand-in for zero data, where every inequality is 0 >= 0"""
        R1 = 0.5 * (params.R - params.R0)
        return cls(0.0, R1, R1 * R1, params.R0, params.R)


def compute_constants(f: Profile, params: Params) -> BlowupConstants:
    """C_f = 1/4 int_{R0}^R f, exact from the antiderivative; R1 = (R-R0)/2."""
    if f.R != params.R:
        raise ParamsError(f"profile radius {f.R} differs from params R={params.R}")
    R0, R = params.R0, params.R
    if f.max_on(R0, R) <= 0:
        raise BlowupHypothesisError(
            f"f has no positive value in ({R0}, {R}); C_f would vanish"
        )
    C_f = 0.25 * f.integral(R0, R)
    if C_f <= 0:
        raise BlowupHypothesisError(f"C_f = {C_f} is not positive on [{R0}, {R}]")
    if f.min_on(-R, R) < 0:
        logger.warning("⚠️ f takes negative values; the lower bound H >= C_f eps t^2 is not guaranteed")

    R1 = 0.5 * (R - R0)
    return BlowupConstants(C_f=C_f, R1=R1, I_coeff=R1 * R1, R0=R0, R=R)


# traces -------------------------------------------------------------------

@dataclass
class FunctionalTrace:
    """H, H', H'', F and the weighted L^p integral at sampled levels"""
    h: float
    levels: np.ndarray
    times: np.ndarray
    H: np.ndarray          # double trapezoid of H''
    H_direct: np.ndarray   # trapezoid of (t-s) H''(s), straight from the definition
    Hprime: np.ndarray
    Hpp: np.ndarray
    F: np.ndarray
    weighted_Lp: np.ndarray

    def bound_rhs(self, consts: BlowupConstants, p: float) -> np.ndarray:
        """1/2 R1^{-2(p-1)} t^{1-2p} |H|^p, defined as 0 at t = 0"""
        out = np.zeros_like(self.H)
        pos = self.times > 0
        t = self.times[pos]
        out[pos] = 0.5 * consts.R1 ** (-2.0 * (p - 1)) * t ** (1 - 2 * p) * np.abs(self.H[pos]) ** p
        return out

    def second_difference(self) -> np.ndarray:
        """(H_direct[n+1] - 2 H_direct[n] + H_direct[n-1]) / dt^2 at interior samples"""
        if len(self.levels) < 3:
            return np.zeros(0)
        steps = np.diff(self.levels)
        if np.any(steps != steps[0]):
            raise ParamsError("second differences need uniformly spaced samples")
        dt = steps[0] * self.h
        H = self.H_direct
        return (H[2:] - 2.0 * H[1:-1] + H[:-2]) / (dt * dt)

    def frame(self, consts: BlowupConstants, p: float) -> pl.DataFrame:
        return pl.DataFrame({
            "t": self.times,
            "H": self.H,
            "H_direct": self.H_direct,
            "Hprime": self.Hprime,
            "Hpp": self.Hpp,
            "F": self.F,
            "weighted_Lp": self.weighted_Lp,
            "bound_rhs": self.bound_rhs(consts, p),
        })


def _trapezoid(n_nodes: int, h: float) -> np.ndarray:
    if n_nodes == 1:
        return np.zeros(1)
    w = np.full(n_nodes, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _lagged_integral(q: np.ndarray, h: float) -> np.ndarray:
    """G[n] = trapezoid over s in [0, t_n] of (t_n - s) q(s), for every n"""
    c = np.ones_like(q)
    c[0] = 0.5
    m = np.arange(q.size, dtype=float)
    A = np.cumsum(c * q)
    B = np.cumsum(c * m * q)
    return h * h * (m * A - B)


def _cumulative_trapezoid(q: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(q)
    out[1:] = np.cumsum(0.5 * h * (q[1:] + q[:-1]))
    return out


class TraceAccumulator:
    """Builds a FunctionalTrace from levels fed in time order

    Levels are full-width rows of u and D_x u on ``layout``. F at a sample
    level n_k collects one contribution from every earlier level, so the
    sample levels are fixed up front; samples never reached are dropped by
    ``finish``.
    """

    def __init__(self, params: Params, layout: GridLayout, samples: np.ndarray):
        if layout.K != params.K:
            raise FieldTooNarrowError(f"layout K={layout.K} does not match R/h={params.K}")
        samples = np.asarray(samples, dtype=int)
        if samples.size == 0 or np.any(np.diff(samples) <= 0) or samples[0] < 0:
            raise ParamsError("trace samples must be increasing non-negative levels")
        self.p = params.p
        self.h = layout.h
        self.n_x = layout.n_x
        self.samples = samples
        self._first = layout.center + params.K0  # window start at level 0
        self._window = np.arange(params.K - params.K0 + 1)
        self._wx = _trapezoid(self._window.size, self.h)
        self._offsets = self._window * self.h  # y - s - R0 on the window
        self._Hpp: List[float] = []
        self._J: List[float] = []
        self._F = np.zeros(samples.size)

    @property
    def n_levels(self) -> int:
        return len(self._Hpp)

    def add(self, u_level: np.ndarray, ux_level: np.ndarray) -> None:
        m = self.n_levels
        cols = self._first + m + self._window
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.abs(ux_level) ** self.p
        self._Hpp.append(float(u_level[cols] @ self._wx))
        self._J.append(float((v[cols] * self._offsets) @ self._wx))

        pending = np.flatnonzero(self.samples > m)
        if pending.size:
            prefix = np.zeros(v.size + 1)
            np.cumsum(v, out=prefix[1:])
            lo = cols[None, :]
            hi = lo + 2 * (self.samples[pending, None] - m)
            inside = hi <= self.n_x - 1
            # beyond the array the source is zero, so clipping the upper end is exact
            hi_c = np.minimum(hi, self.n_x - 1)
            span = prefix[hi_c + 1] - prefix[lo]
            ends = v[lo] + np.where(inside, v[hi_c], 0.0)
            inner = self.h * (span - 0.5 * ends)
            weight = 0.5 * self.h if m == 0 else self.h
            self._F[pending] += weight * (inner @ self._wx)

    def finish(self) -> FunctionalTrace:
        if not self._Hpp:
            raise FieldTooNarrowError("no levels were fed to the trace")
        h = self.h
        Hpp_all = np.asarray(self._Hpp)
        J_all = np.asarray(self._J)
        Hprime_all = _cumulative_trapezoid(Hpp_all, h)
        levels = self.samples[self.samples < Hpp_all.size]
        logger.debug(f"trace: {len(levels)} samples up to t={(Hpp_all.size - 1) * h:.6g}")
        return FunctionalTrace(
            h=h,
            levels=levels,
            times=levels * h,
            H=_cumulative_trapezoid(Hprime_all, h)[levels],
            H_direct=_lagged_integral(Hpp_all, h)[levels],
            Hprime=Hprime_all[levels],
            Hpp=Hpp_all[levels],
            F=self._F[:levels.size].copy(),
            weighted_Lp=_lagged_integral(J_all, h)[levels],
        )


def compute_trace(u: GridField, ux: GridField, params: Params, stride: int = 1,
                  t_end: Optional[float] = None) -> FunctionalTrace:
    """Sample H, H', H'', F and weighted_Lp every `stride` levels up to t_end, and at t_end."""
    if stride < 1:
        raise ParamsError(f"trace stride must be >= 1, got {stride}")
    if u.values.shape != ux.values.shape:
        raise FieldTooNarrowError("u and u_x must share one layout")
    if not u.cone_supported or u.layout.K != params.K:
        raise FieldTooNarrowError("trace needs a cone-supported field laid out for R")

    h = u.h
    horizon = (u.n_t - 1) * h
    if t_end is None:
        n_end = u.n_t - 1
    else:
        if t_end > horizon * (1 + 1e-12) + 1e-12:
            raise FieldTooNarrowError(f"requested t={t_end} beyond field horizon {horizon}")
        n_end = min(u.n_t - 1, int(math.floor(t_end / h + 1e-9)))

    samples = np.unique(np.r_[np.arange(0, n_end + 1, stride), n_end])
    acc = TraceAccumulator(params, u.layout, samples)
    for n in range(n_end + 1):
        acc.add(u.values[n], ux.values[n])
    return acc.finish()


# inequality reports -----------------------------------------------------

class LinkStatus(Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    VACUOUS = "vacuous"  # no sample in the link's t-range


@dataclass(frozen=True)
class LinkReport:
    """One inequality lhs >= rhs - slack checked at every sample"""
    name: str
    status: LinkStatus
    n_checked: int
    worst_t: Optional[float]
    worst_lhs: float
    worst_rhs: float
    worst_slack: float
    slack_rule: str

    @property
    def holds(self) -> bool:
        return self.status is not LinkStatus.VIOLATED

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "status": self.status.value,
            "n_checked": self.n_checked,
            "worst_t": self.worst_t,
            "worst_lhs": self.worst_lhs,
            "worst_rhs": self.worst_rhs,
            "worst_slack": self.worst_slack,
            "slack_rule": self.slack_rule,
        }


@dataclass(frozen=True)
class InequalityReport:
    name: str
    links: List[LinkReport]

    @property
    def all_hold(self) -> bool:
        return all(link.holds for link in self.links)

    def failing(self) -> List[str]:
        return [link.name for link in self.links if not link.holds]

    def to_dict(self) -> Dict:
        return {"name": self.name, "all_hold": self.all_hold,
                "links": [link.to_dict() for link in self.links]}


def check_link(name: str, t: np.ndarray, lhs: np.ndarray, rhs: np.ndarray,
                slack: np.ndarray, slack_rule: str) -> LinkReport:
    if t.size == 0:
        return LinkReport(name, LinkStatus.VACUOUS, 0, None, 0.0, 0.0, 0.0, slack_rule)
    with np.errstate(invalid="ignore"):
        deficit = rhs - lhs - slack
    deficit = np.where(np.isfinite(deficit), deficit, np.inf)
    worst = int(np.argmax(deficit))
    status = LinkStatus.VIOLATED if deficit[worst] > 0 else LinkStatus.HOLDS
    report = LinkReport(name, status, int(t.size), float(t[worst]), float(lhs[worst]),
                        float(rhs[worst]), float(slack[worst]), slack_rule)
    if status is LinkStatus.VIOLATED:
        logger.warning(f"❌ {name} fails at t={t[worst]:.6g}: lhs={lhs[worst]:.6e}, rhs={rhs[worst]:.6e}")
    return report


def verify_lower_bound(trace: FunctionalTrace, consts: BlowupConstants, eps: float) -> InequalityReport:
    """H(t) >= C_f eps t^2 (1 - 5h) and H''(t) >= 2 C_f eps (1 - 5h) at every sample."""
    rel = SLACK_FACTOR * trace.h
    t = trace.times
    target_H = consts.C_f * eps * t ** 2
    target_Hpp = np.full_like(t, 2.0 * consts.C_f * eps)
    links = [
        check_link("H >= C_f eps t^2", t, trace.H, target_H, rel * np.abs(target_H),
                    f"{SLACK_FACTOR:g}*h*C_f*eps*t^2"),
        check_link("H'' >= 2 C_f eps", t, trace.Hpp, target_Hpp, rel * np.abs(target_Hpp),
                    f"{SLACK_FACTOR:g}*h*2*C_f*eps"),
    ]
    report = InequalityReport("lower_bound", links)
    if report.all_hold:
        logger.info(f"✅ lower bound H >= C_f eps t^2 holds on {len(t)} samples")
    return report


def verify_ode_inequality(trace: FunctionalTrace, consts: BlowupConstants, p: float) -> InequalityReport:
    """The three links behind H'' >= 1/2 R1^{-2(p-1)} t^{1-2p} |H|^p for t >= R1, plus the chain."""
    rel = SLACK_FACTOR * trace.h
    sel = (trace.times >= consts.R1 * (1 - 1e-12)) & (trace.times > 0)
    t = trace.times[sel]
    Hpp, F, W, H = trace.Hpp[sel], trace.F[sel], trace.weighted_Lp[sel], trace.H[sel]

    def scaled(a, b, factor=1.0):
        return factor * rel * np.maximum(np.abs(a), np.abs(b))

    half_F = 0.5 * F
    W_over_t = W / t if t.size else W
    with np.errstate(over="ignore", invalid="ignore"):
        H_pow = np.abs(H) ** p
        hoelder_rhs = W * (consts.I_coeff * t ** 2) ** (p - 1)
    chain_rhs = trace.bound_rhs(consts, p)[sel]

    links = [
        check_link("H'' >= F/2", t, Hpp, half_F, scaled(Hpp, half_F),
                    f"{SLACK_FACTOR:g}*h*max(|H''|, F/2)"),
        check_link("F >= weighted_Lp / t", t, F, W_over_t, scaled(F, W_over_t),
                    f"{SLACK_FACTOR:g}*h*max(F, weighted_Lp/t)"),
        check_link("weighted_Lp I^(p-1) >= |H|^p", t, hoelder_rhs, H_pow, scaled(hoelder_rhs, H_pow),
                    f"{SLACK_FACTOR:g}*h*max(|H|^p, weighted_Lp I^(p-1))"),
        check_link("H'' >= R1^(-2(p-1)) t^(1-2p) |H|^p / 2", t, Hpp, chain_rhs,
                    scaled(Hpp, chain_rhs, factor=3.0),
                    f"{3 * SLACK_FACTOR:g}*h*max(|H''|, bound)"),
    ]
    report = InequalityReport("ode_inequality", links)
    if report.all_hold:
        logger.info(f"✅ ODE inequality chain holds on {len(t)} samples with t >= R1={consts.R1:g}")
    return report


# comparison ODE -----------------------------------------------------------

def _rk4(t: float, y: float, dy: float, dt: float, accel) -> tuple:
    k1y, k1v = dy, accel(t, y)
    k2y, k2v = dy + 0.5 * dt * k1v, accel(t + 0.5 * dt, y + 0.5 * dt * k1y)
    k3y, k3v = dy + 0.5 * dt * k2v, accel(t + 0.5 * dt, y + 0.5 * dt * k2y)
    k4y, k4v = dy + dt * k3v, accel(t + dt, y + dt * k3y)
    return (y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y),
            dy + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v))


def ode_comparison_lifespan(consts: BlowupConstants, eps: float, p: float,
                            base_step: float = ODE_BASE_STEP,
                            cap_factor: float = ODE_CAP_FACTOR) -> float:
    """Blow-up time of h'' = max(2 C_f eps, 1/2 R1^{-2(p-1)} t^{1-2p} h^p) from t = R1

    h(R1) = C_f eps R1^2 and h'(R1) = 2 C_f eps R1. RK4 steps are accepted when a
    full step and two half steps agree; otherwise the step is halved. Once the
    power law dominates, the remaining time 2h / ((p-1) h') of the pure power
    law closes the integration.
    """
    if not eps > 0:
        raise ParamsError(f"comparison ODE needs eps > 0, got {eps}")
    if not p > 1:
        raise ParamsError(f"p must exceed 1, got {p}")
    if consts.C_f <= 0:
        raise BlowupHypothesisError("C_f = 0: the comparison ODE never leaves zero")
    if not base_step > 0:
        raise ParamsError(f"base_step must be positive, got {base_step}")

    k = 0.5 * consts.R1 ** (-2.0 * (p - 1))
    floor = 2.0 * consts.C_f * eps
    cap = cap_factor * eps ** (-(p - 1))

    def accel(t: float, y: float) -> float:
        return max(floor, k * t ** (1 - 2 * p) * abs(y) ** p)

    t = consts.R1
    y = consts.C_f * eps * t * t
    dy = 2.0 * consts.C_f * eps * t

    while True:
        if t > cap:
            raise ODEComparisonError(
                f"comparison ODE did not blow up before t={cap:.6g} (eps={eps}, p={p})"
            )
        try:
            power = k * t ** (1 - 2 * p) * y ** p
        except OverflowError:
            power = math.inf
        tail = 2.0 * y / ((p - 1) * dy)
        if power >= ODE_DOMINANCE * floor and (tail <= ODE_TAIL_RTOL * t or y >= ODE_HUGE):
            return t + tail

        dt = min(base_step * t, ODE_GROWTH_LIMIT * y / dy)
        for _ in range(ODE_MAX_HALVINGS):
            try:
                full = _rk4(t, y, dy, dt, accel)
                mid = _rk4(t, y, dy, 0.5 * dt, accel)
                half = _rk4(t + 0.5 * dt, mid[0], mid[1], 0.5 * dt, accel)
            except OverflowError:
                dt *= 0.5
                continue
            if (math.isfinite(half[0]) and math.isfinite(half[1])
                    and abs(full[0] - half[0]) <= ODE_STEP_RTOL * abs(half[0])):
                break
            dt *= 0.5
        else:
            raise ODEComparisonError(f"step halving failed at t={t:.6g}")
        t += dt
        y, dy = half
