#!/usr/bin/env python3
"""
wavelab command line

    python wavelab_cli.py constants --config configs/default_p2.yaml
    python wavelab_cli.py solve     --config configs/default_p2.yaml --out runs/p2
    python wavelab_cli.py sweep     --config configs/default_p2.yaml --parallel 4
    python wavelab_cli.py sweep     --config configs/default_p2.yaml --refine 0.5 --halvings 2
    python wavelab_cli.py verify    --config configs/default_p2.yaml

Exit codes: 0 ok, 1 an asserted inequality failed, 2 config error.
"""

import argparse
import logging
import math
import sys
from typing import Dict, List, Optional

import numpy as np

from core.errors import ConfigError, FitError, TheoryConstantsError, WaveLabError
from core.grid import GridLayout, centered_gradient
from core.params import Params
from core.parser import RunConfig, WaveLabConfigParser
from core.profile import compute_M
from wavelab_artifacts import ArtifactStore, Manifest, format_float
from wavelab_blowup_functional import (SLACK_FACTOR, BlowupConstants, InequalityReport,
                                       TraceAccumulator, check_link, compute_constants,
                                       verify_lower_bound, verify_ode_inequality)
from wavelab_direct_solver import SnapshotCollector, log_lifespan, march
from wavelab_duhamel import AprioriAccumulator, apriori_bound
from wavelab_lifespan_lab import Scenario, refinement_study, sweep
from wavelab_picard import (PicardResult, check_conditions, rebuild_ut, rebuild_wt,
                            run_picard, theory_constants, time_difference_gap)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2

# Picard invariants asserted by verify when the smallness conditions hold
NORM_SLACK = 1.02
RATIO_BOUND = 0.55

TRACE_SAMPLES = 512


def _print(label: str, value) -> None:
    if isinstance(value, float):
        value = format_float(value)
    print(f"{label:>14}: {value}")


def _store(cfg: RunConfig, command: str, out: Optional[str]) -> ArtifactStore:
    manifest = Manifest(command=command, apriori_C=cfg.numerics.apriori_C, config=cfg.manifest())
    return ArtifactStore(out or cfg.output.directory, manifest)


def _picard_horizon(cfg: RunConfig, M: float) -> float:
    """Configured Picard horizon, else the guaranteed window clipped to t_max"""
    if cfg.numerics.picard_t_max is not None:
        return cfg.numerics.picard_t_max
    params = cfg.params()
    if M * params.epsilon == 0:
        return params.t_max
    window = theory_constants(M, params, cfg.numerics.apriori_C).guaranteed_horizon(params.epsilon)
    return min(params.t_max, window)


def _run_picard(cfg: RunConfig, T: float) -> PicardResult:
    params = cfg.params().replace(t_max=T)
    return run_picard(cfg.free_solution(), params, tol=cfg.numerics.picard_tol,
                      max_iter=cfg.numerics.picard_max_iter)


def cmd_constants(cfg: RunConfig, store: ArtifactStore) -> int:
    """M, C, eps1, C1, the guaranteed window, C_f and R1 for the configured data"""
    fs = cfg.free_solution()
    params = cfg.params()
    M = compute_M(fs.f, fs.g)
    theory = theory_constants(M, params, cfg.numerics.apriori_C)
    blowup = compute_constants(fs.f, params)

    report = {
        "M": M,
        "C": cfg.numerics.apriori_C,
        "eps1": theory.eps1,
        "C1": theory.C1,
        "lifespan_coeff": theory.lifespan_coeff,
        "guaranteed_horizon": theory.guaranteed_horizon(params.epsilon),
        "C_f": blowup.C_f,
        "R1": blowup.R1,
        "I_coeff": blowup.I_coeff,
    }
    for key, value in report.items():
        _print(key, value)
    store.write_json("constants.json", report)
    return EXIT_OK


def _wt_gaps(cfg: RunConfig, picard: PicardResult, T: float) -> Dict[str, float]:
    """Distance of the consistent and the iterated w_t from the time difference of w"""
    params = cfg.params().replace(t_max=T)
    wt = rebuild_wt(cfg.free_solution(), params, picard.w)
    gaps = {
        "consistent": time_difference_gap(picard.w, wt),
        "iterated": time_difference_gap(picard.w, picard.wt),
        "norm_wt": wt.sup(),
    }
    logger.info(f"📊 |D_t w - w_t|: {gaps['consistent']:.3e} rebuilt, {gaps['iterated']:.3e} iterated")
    return gaps


def cmd_solve(cfg: RunConfig, store: ArtifactStore) -> int:
    """Picard on its window, then the direct solver to blow-up or horizon"""
    fs = cfg.free_solution()
    params = cfg.params()
    M = compute_M(fs.f, fs.g)

    T = _picard_horizon(cfg, M)
    picard = _run_picard(cfg, T)
    conditions = None
    if M * params.epsilon > 0:
        conditions = check_conditions(M, params.epsilon, T, params, cfg.numerics.apriori_C)
    if not picard.converged:
        logger.warning(f"⚠️ Picard iteration {picard.reason} on T={T:.6g}; continuing with the direct solver")

    store.write_csv("picard_trace.csv", picard.trace_frame())
    store.write_json("picard.json", {
        "T": T,
        "converged": picard.converged,
        "reason": picard.reason,
        "tol": picard.tol,
        "iterations": len(picard.trace),
        "norms": picard.trace[-1].norms.to_dict() if picard.trace else None,
        "norm_ut": rebuild_ut(fs, params.replace(t_max=T), picard.w).sup(),
        "conditions": conditions.to_dict() if conditions else None,
        "wt_gap": _wt_gaps(cfg, picard, T),
    })

    # snapshots are taken while marching; the solution itself is never stored
    snapshots = SnapshotCollector(GridLayout.for_params(params), cfg.numerics.snapshot_stride)
    record = march(fs, params, [snapshots])
    log_lifespan(params, record)
    logger.info(f"📊 {snapshots.n_snapshots} snapshot levels every {snapshots.stride} steps")
    store.write_json("lifespan.json", record.to_dict())
    store.write_csv("snapshots.csv", snapshots.frame())
    _print("picard", picard.reason)
    _print("T_num", record.T_num)
    _print("detect_reason", record.detect_reason.value)
    return EXIT_OK


def cmd_refine(cfg: RunConfig, store: ArtifactStore, eps: float, halvings: int) -> int:
    """Lifespan of one amplitude at h, h/2, ..., h/2^halvings"""
    scenario = Scenario(cfg.free_solution(), cfg.params(), cfg.numerics.apriori_C,
                        threshold=cfg.numerics.blowup_threshold)
    records = refinement_study(scenario, eps, halvings)
    store.write_json("refinement.json", {"epsilon": eps, "records": [r.to_dict() for r in records]})
    for record in records:
        _print(f"h={format_float(record.h_used)}", record.T_num)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, store: ArtifactStore, parallel: Optional[int] = None) -> int:
    """Lifespan sweep, power-law fit and sandwich check"""
    if cfg.sweep is None:
        raise ConfigError("config has no sweep section")
    scenario = Scenario(cfg.free_solution(), cfg.params(), cfg.numerics.apriori_C,
                        threshold=cfg.numerics.blowup_threshold)
    try:
        result = sweep(scenario, cfg.sweep.eps_list(), parallel or cfg.sweep.parallel)
    except FitError as exc:
        logger.error(f"❌ sweep fit failed: {exc}")
        return EXIT_ASSERTION

    store.write_json("sweep.json", result.to_dict())
    store.write_csv("sweep.csv", result.frame())
    _print("slope", result.slope)
    _print("expected", result.expected_slope)
    _print("r_squared", result.r_squared)
    _print("sandwich_ok", result.sandwich_ok)

    failing = []
    if not result.slope_ok():
        failing.append("slope")
    if result.r_squared < 0.98:
        failing.append("r_squared")
    if not result.sandwich_ok:
        failing.append("sandwich")
    if failing:
        logger.error(f"❌ sweep assertions failed: {', '.join(failing)}")
        return EXIT_ASSERTION
    return EXIT_OK


def _picard_report(cfg: RunConfig, picard: PicardResult, M: float, T: float) -> InequalityReport:
    params = cfg.params()
    eps = params.epsilon
    links = []
    one = np.array([T])
    if M * eps > 0:
        conditions = check_conditions(M, eps, T, params, cfg.numerics.apriori_C)
        hold = conditions.all_hold
    else:
        hold = True
    if not hold:
        logger.info("📊 smallness conditions fail on the Picard window; its invariants are not asserted")
        return InequalityReport("picard", links)

    links.append(check_link("picard converged", one, np.array([1.0 if picard.converged else 0.0]),
                            np.array([1.0]), np.zeros(1), "exact"))
    bound = 2.0 * M * eps * NORM_SLACK
    for name, attr in (("||w_j|| <= 2 M eps", "norm_w"), ("||(w_j)_t|| <= 2 M eps", "norm_wt")):
        worst = max((getattr(s.norms, attr) for s in picard.trace), default=0.0)
        links.append(check_link(name, one, np.array([bound]), np.array([worst]), np.zeros(1),
                                f"factor {NORM_SLACK}"))
    # ratios below the tolerance are rounding noise
    ratios = [s.ratio_w for prev, s in zip(picard.trace, picard.trace[1:])
              if prev.delta_w > picard.tol and math.isfinite(s.ratio_w)]
    links.append(check_link("contraction ratio <= 1/2", one, np.array([RATIO_BOUND]),
                            np.array([max(ratios, default=0.0)]), np.zeros(1), f"bound {RATIO_BOUND}"))

    apriori = apriori_bound(picard.w, params.p, T, params.R, cfg.numerics.apriori_C)
    links.append(check_link("a-priori bound on w", one, np.array([apriori.rhs]), np.array([apriori.lhs]),
                            np.array([apriori.slack]), "h*rhs"))

    gaps = _wt_gaps(cfg, picard, T)
    allowed = SLACK_FACTOR * params.h * max(gaps["norm_wt"], picard.tol)
    links.append(check_link("D_t w matches rebuilt w_t", one, np.array([allowed]),
                            np.array([gaps["consistent"]]), np.zeros(1),
                            f"{SLACK_FACTOR:g}*h*||w_t||"))
    return InequalityReport("picard", links)


class _VerifyObserver:
    """Feeds every marched level to the trace and a-priori accumulators"""

    def __init__(self, params: Params, stride: int):
        self.layout = GridLayout.for_params(params)
        self.h = params.h
        self.trace = TraceAccumulator(params, self.layout, np.arange(0, self.layout.n_levels, stride))
        self.apriori = AprioriAccumulator(params.p, params.h)
        self.outside: List[int] = []

    def __call__(self, n: int, level: np.ndarray) -> None:
        grad = centered_gradient(level, self.h)
        self.trace.add(level, grad)
        self.apriori.add(grad)
        if not self.layout.level_support_holds(level, n):
            self.outside.append(n)


def cmd_verify(cfg: RunConfig, store: ArtifactStore) -> int:
    """Blow-up functional chain on the direct solution plus the Picard invariants"""
    fs = cfg.free_solution()
    params = cfg.params()
    M = compute_M(fs.f, fs.g)
    eps = params.epsilon

    if M * eps == 0:
        consts = BlowupConstants.degenerate(params)
    else:
        consts = compute_constants(fs.f, params)

    stride = cfg.numerics.trace_stride or max(1, math.ceil(params.n_levels / TRACE_SAMPLES))
    observer = _VerifyObserver(params, stride)
    record = march(fs, params, [observer])
    log_lifespan(params, record)
    trace = observer.trace.finish()
    reports = [verify_lower_bound(trace, consts, eps), verify_ode_inequality(trace, consts, params.p)]

    horizon = np.array([(observer.trace.n_levels - 1) * params.h])
    apriori = observer.apriori.check(float(horizon[0]), params.R, cfg.numerics.apriori_C)
    if observer.outside:
        logger.warning(f"⚠️ solution leaves the cone first at level {observer.outside[0]}")
    reports.append(InequalityReport("direct_solution", [
        check_link("support |x| <= t + R", horizon, np.array([0.0 if observer.outside else 1.0]),
                   np.array([1.0]), np.zeros(1), "exact"),
        check_link("a-priori bound on u_x", horizon, np.array([apriori.rhs]), np.array([apriori.lhs]),
                   np.array([apriori.slack]), "h*rhs"),
    ]))

    T = _picard_horizon(cfg, M)
    reports.append(_picard_report(cfg, _run_picard(cfg, T), M, T))

    store.write_csv("functional_trace.csv", trace.frame(consts, params.p))
    store.write_json("verify.json", {
        "lifespan": record.to_dict(),
        "constants": consts.to_dict(),
        "trace_stride": stride,
        "reports": [report.to_dict() for report in reports],
    })

    failing = [f"{report.name}: {name}" for report in reports for name in report.failing()]
    for report in reports:
        _print(report.name, "holds" if report.all_hold else "FAILS")
    if failing:
        for name in failing:
            logger.error(f"❌ {name}")
        return EXIT_ASSERTION
    logger.info("✅ every asserted inequality holds")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Path to the YAML run config")
    common.add_argument("--out", help="Artifact directory (default: output.directory)")
    common.add_argument("--h-override", type=float, help="Replace numerics.h and re-validate")
    common.add_argument("--seedless", action="store_true",
                        help="No random numbers are drawn anywhere; accepted for scripts")

    parser = argparse.ArgumentParser(description="Lifespan laboratory for u_tt - u_xx = |u_x|^p")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="Print eps1, C1, C_f, R1 for the scenario")
    sub.add_parser("solve", parents=[common], help="Picard construction and direct solve")
    sweep_parser = sub.add_parser("sweep", parents=[common], help="Lifespan sweep and power-law fit")
    sweep_parser.add_argument("--parallel", type=int, help="Worker threads (default: sweep.parallel)")
    sweep_parser.add_argument("--refine", type=float, metavar="EPS",
                              help="Instead of the sweep, rerun one amplitude on halved grids")
    sweep_parser.add_argument("--halvings", type=int, default=1,
                              help="Grid halvings for --refine (default: 1)")
    sub.add_parser("verify", parents=[common], help="Check the blow-up inequality chain")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    args = build_parser().parse_args(argv)

    try:
        cfg = WaveLabConfigParser().load_file(args.config)
        if args.h_override is not None:
            cfg = cfg.with_h(args.h_override)
        if getattr(args, "parallel", None) is not None and args.parallel < 1:
            raise ConfigError(f"--parallel must be >= 1, got {args.parallel}")
        if getattr(args, "halvings", 0) < 0:
            raise ConfigError(f"--halvings must be >= 0, got {args.halvings}")
    except ConfigError as exc:
        logger.error(f"❌ {exc}")
        return EXIT_CONFIG

    logger.info(f"🚀 wavelab {args.command} ({args.config})")
    store = _store(cfg, args.command, args.out)
    try:
        if args.command == "constants":
            return cmd_constants(cfg, store)
        if args.command == "solve":
            return cmd_solve(cfg, store)
        if args.command == "sweep" and args.refine is not None:
            return cmd_refine(cfg, store, args.refine, args.halvings)
        if args.command == "sweep":
            return cmd_sweep(cfg, store, args.parallel)
        return cmd_verify(cfg, store)
    except (ConfigError, TheoryConstantsError, ValueError) as exc:
        logger.error(f"❌ {exc}")
        return EXIT_CONFIG
    except WaveLabError as exc:
        logger.error(f"❌ {exc}")
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
