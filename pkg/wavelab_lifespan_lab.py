#!/usr/bin/env python3
"""
wavelab Lifespan Lab - epsilon sweeps and the lifespan scaling law

Runs the direct solver for a list of amplitudes on a thread pool, folds the
lifespans back in epsilon order, fits log T = intercept + slope log eps and
checks every point against the guaranteed window from below and the
comparison-ODE lifespan from above.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import polars as pl

from core.errors import BlowupHypothesisError, FitError, ODEComparisonError, SweepError
from core.params import Params, default_blowup_threshold
from core.profile import compute_M
from wavelab_blowup_functional import BlowupConstants, compute_constants, ode_comparison_lifespan
from wavelab_direct_solver import LifespanRecord, measure_lifespan
from wavelab_free_wave import FreeSolution
from wavelab_picard import TheoryConstants, theory_constants

logger = logging.getLogger(__name__)

UPPER_FACTOR = 1.25
SLOPE_RTOL = 0.10
DEFAULT_PER_DECADE = 8


@dataclass(frozen=True)
class Scenario:
    """Data plus a parameter template; epsilon and threshold are set per run"""
    fs: FreeSolution
    params: Params
    apriori_C: float = 1.0
    threshold: Optional[float] = None  # None: default_blowup_threshold per epsilon
    nonlinear: bool = True

    @property
    def M(self) -> float:
        return compute_M(self.fs.f, self.fs.g)

    def params_for(self, eps: float, h: Optional[float] = None) -> Params:
        threshold = self.threshold if self.threshold is not None else default_blowup_threshold(eps, self.M)
        changes = {"epsilon": eps, "blowup_threshold": threshold}
        if h is not None:
            changes["h"] = h
        return self.params.replace(**changes)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r_squared: float
    n: int

    def to_dict(self) -> Dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "n": self.n}


@dataclass(frozen=True)
class SweepPoint:
    record: LifespanRecord
    lower_bound: Optional[float]
    ode_upper: Optional[float]

    @property
    def lower_ok(self) -> bool:
        return self.lower_bound is not None and self.record.T_num >= self.lower_bound

    @property
    def upper_ok(self) -> bool:
        return self.ode_upper is not None and self.record.T_num <= UPPER_FACTOR * self.ode_upper

    def row(self) -> Dict:
        row = self.record.to_dict()
        row.update({
            "lower_bound": self.lower_bound,
            "ode_upper": self.ode_upper,
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
        })
        return row


@dataclass
class SweepResult:
    p: float
    points: List[SweepPoint]
    fit: PowerLawFit
    excluded: List[float] = field(default_factory=list)
    monotonicity_flags: List[Dict] = field(default_factory=list)
    eps1: Optional[float] = None

    @property
    def records(self) -> List[LifespanRecord]:
        return [point.record for point in self.points]

    @property
    def slope(self) -> float:
        return self.fit.slope

    @property
    def intercept(self) -> float:
        return self.fit.intercept

    @property
    def r_squared(self) -> float:
        return self.fit.r_squared

    @property
    def expected_slope(self) -> float:
        return -(self.p - 1)

    @property
    def sandwich_ok(self) -> bool:
        return all(point.lower_ok and point.upper_ok for point in self.points)

    def slope_ok(self, rtol: float = SLOPE_RTOL) -> bool:
        return abs(self.slope - self.expected_slope) <= rtol * abs(self.expected_slope)

    def frame(self) -> pl.DataFrame:
        return pl.DataFrame([point.row() for point in self.points],
                            schema={"epsilon": pl.Float64, "T_num": pl.Float64,
                                    "detect_reason": pl.Utf8, "threshold_used": pl.Float64,
                                    "h_used": pl.Float64, "lower_bound": pl.Float64,
                                    "ode_upper": pl.Float64, "lower_ok": pl.Boolean,
                                    "upper_ok": pl.Boolean})

    def to_dict(self) -> Dict:
        return {
            "p": self.p,
            "records": [point.row() for point in self.points],
            "fit": self.fit.to_dict(),
            "expected_slope": self.expected_slope,
            "slope_ok": self.slope_ok(),
            "sandwich_ok": self.sandwich_ok,
            "excluded_eps": list(self.excluded),
            "monotonicity_flags": list(self.monotonicity_flags),
            "eps1": self.eps1,
        }


def log_spaced_epsilons(start: float, stop: float, per_decade: int = DEFAULT_PER_DECADE) -> List[float]:
    """Decreasing amplitudes from start to stop, per_decade points per factor of 10"""
    if not (start > stop > 0):
        raise SweepError(f"need start > stop > 0, got start={start}, stop={stop}")
    if per_decade < 1:
        raise SweepError(f"per_decade must be >= 1, got {per_decade}")
    decades = math.log10(start / stop)
    count = max(1, int(round(decades * per_decade)))
    return [float(x) for x in np.logspace(math.log10(start), math.log10(stop), count + 1)]


def fit_powerlaw(pairs: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """Least squares of log y on log x by the closed-form normal equations."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise FitError(f"a power-law fit needs at least 3 points, got {len(pairs)}")
    for x, y in pairs:
        if not (x > 0 and y > 0) or not (math.isfinite(x) and math.isfinite(y)):
            raise FitError(f"power-law fit needs positive finite values, got ({x}, {y})")

    lx = [math.log(x) for x, _ in pairs]
    ly = [math.log(y) for _, y in pairs]
    n = len(pairs)
    mx, my = math.fsum(lx) / n, math.fsum(ly) / n
    sxx = math.fsum((a - mx) ** 2 for a in lx)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(lx, ly))
    syy = math.fsum((b - my) ** 2 for b in ly)
    if sxx == 0:
        raise FitError("all x values coincide; slope is undefined")

    slope = sxy / sxx
    intercept = my - slope * mx
    if syy == 0:
        r2 = 1.0
    else:
        ss_res = math.fsum((b - intercept - slope * a) ** 2 for a, b in zip(lx, ly))
        r2 = min(1.0, max(0.0, 1.0 - ss_res / syy))
    return PowerLawFit(slope, intercept, r2, n)


def validate_eps_list(eps_list: Sequence[float]) -> List[float]:
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise FitError(f"a sweep needs at least 3 amplitudes for the fit, got {len(eps_list)}")
    if any(not (e > 0) for e in eps_list):
        raise SweepError("sweep amplitudes must be positive")
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise SweepError("sweep amplitudes must be strictly decreasing")
    if eps_list[0] < 10.0 * eps_list[-1] * (1 - 1e-12):
        raise SweepError(f"sweep must span at least one decade, got {eps_list[0]}..{eps_list[-1]}")
    return eps_list


def _monotonicity_flags(records: List[LifespanRecord]) -> List[Dict]:
    """Adjacent pairs where the larger amplitude lives longer by more than one step"""
    flags = []
    for big, small in zip(records, records[1:]):
        if big.T_num - small.T_num > max(big.h_used, small.h_used):
            flags.append({"eps_large": big.epsilon, "eps_small": small.epsilon,
                          "T_large": big.T_num, "T_small": small.T_num})
    return flags


def _bounds(scenario: Scenario) -> Tuple[Optional[TheoryConstants], Optional[BlowupConstants]]:
    try:
        theory = theory_constants(scenario.M, scenario.params, scenario.apriori_C)
    except ValueError as exc:
        logger.warning(f"⚠️ no lower bound: {exc}")
        theory = None
    try:
        blowup = compute_constants(scenario.fs.f, scenario.params)
    except BlowupHypothesisError as exc:
        logger.warning(f"⚠️ no comparison ODE: {exc}")
        blowup = None
    return theory, blowup


def run_one(scenario: Scenario, eps: float) -> LifespanRecord:
    return measure_lifespan(scenario.fs, scenario.params_for(eps), scenario.nonlinear)


def sweep(scenario: Scenario, eps_list: Sequence[float], parallel: int = 1) -> SweepResult:
    """Numerical lifespan for every amplitude, then the fit and the sandwich check."""
    eps_list = validate_eps_list(eps_list)
    if parallel < 1:
        raise SweepError(f"parallel must be >= 1, got {parallel}")

    theory, blowup = _bounds(scenario)
    p = scenario.params.p
    if theory is not None and eps_list[0] > theory.eps1:
        logger.warning(f"⚠️ sweep starts at eps={eps_list[0]:.6g} above eps1={theory.eps1:.6g}; "
                       f"the guaranteed window is not asserted by the theory there")

    logger.info(f"🚀 sweep: p={p}, {len(eps_list)} amplitudes, parallel={parallel}")
    with ThreadPoolExecutor(max_workers=parallel) as executor:
        # map yields in submission order, so the fold below is deterministic
        records = list(executor.map(lambda e: run_one(scenario, e), eps_list))

    kept: List[LifespanRecord] = []
    excluded: List[float] = []
    for record in records:
        if record.blew_up:
            kept.append(record)
        else:
            logger.warning(f"⚠️ eps={record.epsilon:.6g} reached the horizon without blow-up; excluded")
            excluded.append(record.epsilon)

    points = []
    for record in kept:
        lower = theory.guaranteed_horizon(record.epsilon) if theory is not None else None
        upper = None
        if blowup is not None:
            try:
                upper = ode_comparison_lifespan(blowup, record.epsilon, p)
            except ODEComparisonError as exc:
                logger.warning(f"⚠️ {exc}")
        points.append(SweepPoint(record, lower, upper))

    fit = fit_powerlaw([(r.epsilon, r.T_num) for r in kept])
    result = SweepResult(p, points, fit, excluded, _monotonicity_flags(kept),
                         theory.eps1 if theory is not None else None)

    for flag in result.monotonicity_flags:
        logger.warning(f"⚠️ lifespan not monotone between eps={flag['eps_large']:.6g} and {flag['eps_small']:.6g}")
    status = "✅" if result.slope_ok() and result.sandwich_ok else "⚠️"
    logger.info(f"{status} slope={fit.slope:.4f} (expected {result.expected_slope:g}), "
                f"r^2={fit.r_squared:.4f}, sandwich_ok={result.sandwich_ok}")
    return result


def refinement_study(scenario: Scenario, eps: float, halvings: int = 1) -> List[LifespanRecord]:
    """Lifespan of one amplitude at h, h/2, ... for a manual grid check."""
    if halvings < 0:
        raise SweepError(f"halvings must be >= 0, got {halvings}")
    h = scenario.params.h
    records = []
    for level in range(halvings + 1):
        params = scenario.params_for(eps, h=h / 2 ** level)
        records.append(measure_lifespan(scenario.fs, params, scenario.nonlinear))
    for coarse, fine in zip(records, records[1:]):
        if coarse.blew_up and fine.blew_up:
            change = abs(coarse.T_num - fine.T_num) / fine.T_num
            logger.info(f"📊 h={coarse.h_used:g} -> {fine.h_used:g}: T_num changes by {100 * change:.3f}%")
    return records
