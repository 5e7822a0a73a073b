#!/usr/bin/env python3
"""
wavelab Picard construction of small-data solutions

Iterates on whole space-time fields

    w_{j+1}     = eps u0_x  + Lbar(|w_j|^p)
    (w_{j+1})_t = eps u0_xt + L'(p |w_j|^{p-2} w_j (w_j)_t)

starting from w_0 = 0 (so w_1 = eps u0_x), records sup-norms and contraction
ratios per step, evaluates the four smallness conditions and the closed-form
constants eps1, C1, and rebuilds u = int_{-inf}^x w dy.

The w_t recursion is kept as stated, with (w_j)_t inside L'. Its limit is not
d/dt of the limit w: differentiating w = eps u0_x + Lbar(|w|^p) in t gives

    w_t = eps u0_xt + L'(p |w|^{p-2} w w_x)

which ``rebuild_wt`` evaluates from a fixed point.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
import polars as pl

from core.errors import DivergenceError, ParamsError, TheoryConstantsError
from core.grid import GridField, GridLayout, SupNormReport, sup_norms, x_difference
from core.params import Params
from core.profile import compute_M
from wavelab_duhamel import OperatorKind, apply_field
from wavelab_free_wave import FreeField, FreeSolution, sample_free

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 60

# Comparisons in check_conditions accept this relative rounding excess
CONDITION_RTOL = 1e-12


class PicardStart(Enum):
    ZERO = "zero"    # w_0 = 0, hence w_1 = eps u0_x
    FREE = "free"    # w_0 = eps u0_x


@dataclass
class IterationState:
    """One Picard iterate with its diagnostics"""
    j: int
    w: GridField
    wt: GridField
    norms: SupNormReport
    delta_w: float
    delta_wt: float
    ratio_w: float

    def row(self) -> Dict[str, float]:
        return {
            "j": self.j,
            "norm_w": self.norms.norm_w,
            "norm_wt": self.norms.norm_wt,
            "delta_w": self.delta_w,
            "delta_wt": self.delta_wt,
            "ratio_w": self.ratio_w,
        }


@dataclass(frozen=True)
class PicardForcing:
    """eps u0_x and eps u0_xt sampled on the run layout"""
    w: GridField
    wt: GridField

    @classmethod
    def build(cls, fs: FreeSolution, params: Params) -> "PicardForcing":
        eps = params.epsilon
        ux = sample_free(fs, FreeField.U0_X, params)
        uxt = sample_free(fs, FreeField.U0_XT, params)
        return cls(ux.like(eps * ux.values, name="eps*u0_x"),
                   uxt.like(eps * uxt.values, name="eps*u0_xt"))


@dataclass
class PicardResult:
    w: GridField
    wt: GridField
    trace: List[IterationState]
    converged: bool
    reason: str
    tol: float

    def trace_frame(self) -> pl.DataFrame:
        return pl.DataFrame([state.row() for state in self.trace],
                            schema={"j": pl.Int64, "norm_w": pl.Float64, "norm_wt": pl.Float64,
                                    "delta_w": pl.Float64, "delta_wt": pl.Float64,
                                    "ratio_w": pl.Float64})


@dataclass(frozen=True)
class ConditionReport:
    """The four smallness conditions, left sides kept for re-evaluation"""
    lhs1: float  # C (2M eps)^p (T+R)           <= M eps
    rhs1: float
    lhs2: float  # 2^p p C (2M eps)^{p-1} (T+R) <= 1/2
    lhs3: float  # p C (2M eps)^{p-1} (T+R)     <= 1
    lhs4: float  # p C (2M eps)^{p-1} (T+R)     <= 1/2
    M: float
    T: float
    C: float

    @staticmethod
    def _le(lhs: float, rhs: float) -> bool:
        return lhs <= rhs * (1 + CONDITION_RTOL)

    @property
    def c1(self) -> bool:
        return self._le(self.lhs1, self.rhs1)

    @property
    def c2(self) -> bool:
        return self._le(self.lhs2, 0.5)

    @property
    def c3(self) -> bool:
        return self._le(self.lhs3, 1.0)

    @property
    def c4(self) -> bool:
        return self._le(self.lhs4, 0.5)

    @property
    def all_hold(self) -> bool:
        return self.c1 and self.c2 and self.c3 and self.c4

    def to_dict(self) -> Dict:
        return {
            "M": self.M, "T": self.T, "C": self.C,
            "c1": {"lhs": self.lhs1, "rhs": self.rhs1, "holds": self.c1},
            "c2": {"lhs": self.lhs2, "rhs": 0.5, "holds": self.c2},
            "c3": {"lhs": self.lhs3, "rhs": 1.0, "holds": self.c3},
            "c4": {"lhs": self.lhs4, "rhs": 0.5, "holds": self.c4},
        }


@dataclass(frozen=True)
class TheoryConstants:
    eps1: float
    C1: float
    p: float
    R: float

    @property
    def lifespan_coeff(self) -> float:
        """(2 C1)^{-1}: the guaranteed window is T <= lifespan_coeff * eps^{-(p-1)}"""
        return 1.0 / (2.0 * self.C1)

    def guaranteed_horizon(self, eps: float) -> float:
        if eps <= 0:
            return math.inf
        return self.lifespan_coeff * eps ** (-(self.p - 1))

    def to_dict(self) -> Dict:
        return {"eps1": self.eps1, "C1": self.C1, "lifespan_coeff": self.lifespan_coeff}


def default_tolerance(M: float, eps: float) -> float:
    return 1e-10 * max(1.0, M * eps)


def signed_power(w: np.ndarray, q: float) -> np.ndarray:
    """|w|^{q-1} w, taken as 0 at w = 0 (also for q < 1)"""
    out = np.zeros_like(w)
    nz = w != 0
    out[nz] = np.sign(w[nz]) * np.abs(w[nz]) ** q
    return out


def initial_state(params: Params, start: PicardStart = PicardStart.ZERO,
                  forcing: Optional[PicardForcing] = None) -> IterationState:
    layout = GridLayout.for_params(params)
    if start is PicardStart.FREE:
        if forcing is None:
            raise ParamsError("a free start needs the sampled forcing")
        w, wt = forcing.w.like(forcing.w.values.copy(), "w"), forcing.wt.like(forcing.wt.values.copy(), "wt")
    else:
        w, wt = layout.zeros(R=params.R), layout.zeros(R=params.R)
    return IterationState(0, w, wt, sup_norms(w, wt), math.nan, math.nan, math.nan)


def iterate_once(prev: IterationState, fs: FreeSolution, params: Params,
                 forcing: Optional[PicardForcing] = None) -> IterationState:
    """w_j -> w_{j+1} on the full grid."""
    forcing = forcing or PicardForcing.build(fs, params)
    p = params.p
    w, wt = prev.w.values, prev.wt.values

    with np.errstate(over="ignore", invalid="ignore"):
        source_w = prev.w.like(np.abs(w) ** p, "|w|^p")
        source_wt = prev.w.like(p * signed_power(w, p - 1) * wt, "p|w|^{p-2}w w_t")
        new_w = forcing.w.values + apply_field(OperatorKind.LBAR, source_w).values
        new_wt = forcing.wt.values + apply_field(OperatorKind.LPRIME, source_wt).values

    if not (np.all(np.isfinite(new_w)) and np.all(np.isfinite(new_wt))):
        raise DivergenceError(f"iterate {prev.j + 1} left the contraction regime (non-finite values)")

    w_next = prev.w.like(new_w, "w")
    wt_next = prev.wt.like(new_wt, "wt")
    delta_w = float(np.max(np.abs(new_w - w))) if new_w.size else 0.0
    delta_wt = float(np.max(np.abs(new_wt - wt))) if new_wt.size else 0.0
    if prev.j >= 1 and prev.delta_w > 0:
        ratio = delta_w / prev.delta_w
    elif prev.j >= 1:
        ratio = 0.0
    else:
        ratio = math.nan
    return IterationState(prev.j + 1, w_next, wt_next, sup_norms(w_next, wt_next),
                          delta_w, delta_wt, ratio)


def run_picard(fs: FreeSolution, params: Params, tol: Optional[float] = None,
               max_iter: int = DEFAULT_MAX_ITER,
               start: PicardStart = PicardStart.ZERO) -> PicardResult:
    """Iterate until delta_w + delta_wt <= tol; non-convergence is reported, not raised."""
    if tol is None:
        tol = default_tolerance(compute_M(fs.f, fs.g), params.epsilon)
    if tol <= 0:
        raise ParamsError(f"tolerance must be positive, got {tol}")

    forcing = PicardForcing.build(fs, params)
    state = initial_state(params, start, forcing)
    trace: List[IterationState] = []
    logger.info(f"🚀 Picard: eps={params.epsilon:.6g}, T={params.t_max:.6g}, p={params.p}, tol={tol:.3e}")

    for _ in range(max_iter):
        try:
            state = iterate_once(state, fs, params, forcing)
        except DivergenceError as exc:
            logger.warning(f"⚠️ {exc}")
            last = trace[-1] if trace else initial_state(params, start, forcing)
            return PicardResult(last.w, last.wt, trace, False, "diverged", tol)
        trace.append(state)
        if state.delta_w + state.delta_wt <= tol:
            logger.info(f"✅ Picard converged in {state.j} iterations "
                        f"(||w||={state.norms.norm_w:.3e}, ||w_t||={state.norms.norm_wt:.3e})")
            return PicardResult(state.w, state.wt, trace, True, "converged", tol)

    logger.warning(f"⚠️ Picard did not converge in {max_iter} iterations; "
                   f"T={params.t_max} is likely too large for eps={params.epsilon}")
    return PicardResult(state.w, state.wt, trace, False, "max_iter", tol)


def check_conditions(M: float, eps: float, T: float, params: Params, C: float = 1.0) -> ConditionReport:
    """Evaluate the four smallness conditions as written."""
    if not (M > 0 and eps > 0 and T > 0 and C > 0):
        raise ParamsError(f"need M, eps, T, C > 0; got M={M}, eps={eps}, T={T}, C={C}")
    p, R = params.p, params.R
    base = (2.0 * M * eps) ** (p - 1) * (T + R)
    return ConditionReport(
        lhs1=C * (2.0 * M * eps) ** p * (T + R),
        rhs1=M * eps,
        lhs2=2.0 ** p * p * C * base,
        lhs3=p * C * base,
        lhs4=p * C * base,
        M=M, T=T, C=C,
    )


def theory_constants(M: float, params: Params, C: float = 1.0) -> TheoryConstants:
    """eps1 = (2^{p+2} p C (2M)^{p-1} R)^{-1/(p-1)}, C1 = 2^{p+1} p C (2M)^{p-1}"""
    if M <= 0:
        raise TheoryConstantsError("M = 0: zero data has infinite lifespan, constants are undefined")
    if C <= 0:
        raise ParamsError(f"a-priori constant must be positive, got {C}")
    p, R = params.p, params.R
    C1 = 2.0 ** (p + 1) * p * C * (2.0 * M) ** (p - 1)
    eps1 = (2.0 ** (p + 2) * p * C * (2.0 * M) ** (p - 1) * R) ** (-1.0 / (p - 1))
    return TheoryConstants(eps1=eps1, C1=C1, p=p, R=R)


def reconstruct_u(w: GridField) -> GridField:
    """u(x,t) = int_{-inf}^x w(y,t) dy by cumulative trapezoid from the left edge."""
    vals = w.values
    running = np.cumsum(vals, axis=1)
    u = w.h * (running - 0.5 * vals[:, :1] - 0.5 * vals)
    field = w.like(u, name="u")
    if w.cone_supported:
        # int w dy over the line vanishes, so u is 0 beyond the cone up to rounding
        field.enforce_support()
    return field


def rebuild_ut(fs: FreeSolution, params: Params, w: GridField) -> GridField:
    """u_t = eps u0_t + L'(|w|^p) evaluated from a fixed point w."""
    u0t = sample_free(fs, FreeField.U0_T, params)
    nl = apply_field(OperatorKind.LPRIME, w.like(np.abs(w.values) ** params.p, "|w|^p"))
    return w.like(params.epsilon * u0t.values + nl.values, name="u_t")


def rebuild_wt(fs: FreeSolution, params: Params, w: GridField) -> GridField:
    """d/dt w = eps u0_xt + L'(p |w|^{p-2} w D_x w) evaluated from a fixed point w."""
    p = params.p
    u0xt = sample_free(fs, FreeField.U0_XT, params)
    with np.errstate(over="ignore", invalid="ignore"):
        # signed_power vanishes outside the cone, so the source keeps w's support
        source = w.like(p * signed_power(w.values, p - 1) * x_difference(w).values, "p|w|^{p-2}w w_x")
    nl = apply_field(OperatorKind.LPRIME, source)
    return w.like(params.epsilon * u0xt.values + nl.values, name="w_t")


def time_difference_gap(w: GridField, wt: GridField) -> float:
    """max |(w^{n+1} - w^{n-1}) / 2h - wt^n| over interior levels"""
    if w.n_t < 3:
        return 0.0
    dt_w = (w.values[2:] - w.values[:-2]) / (2.0 * w.h)
    return float(np.max(np.abs(dt_w - wt.values[1:-1])))
