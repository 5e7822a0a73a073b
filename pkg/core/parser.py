#!/usr/bin/env python3
"""
wavelab YAML config parser

A run is described by one YAML file:

    problem:  {p, epsilon, R, R0}
    numerics: {h, t_max, blowup_threshold, picard_*, apriori_C, *_stride}
    data:     {f: [bumps], g: [bumps]}      bump = {center, radius, amplitude, order}
    sweep:    {eps: [...]} or {start, stop, per_decade}, parallel
    output:   {directory}

Unknown keys are rejected and every Params invariant is checked at load.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.errors import ConfigError
from core.params import Params, default_blowup_threshold
from core.profile import Profile, combine_profiles, compute_M, make_bump
from wavelab_free_wave import FreeSolution
from wavelab_lifespan_lab import log_spaced_epsilons

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BumpSpec(_Section):
    center: float
    radius: float = Field(gt=0)
    amplitude: float = 1.0
    order: int = Field(default=3, ge=1)


class ProblemSection(_Section):
    p: float = Field(gt=1)
    epsilon: float = Field(ge=0)
    R: float = Field(default=1.0, ge=1)
    R0: float = Field(default=0.5, gt=0)


class NumericsSection(_Section):
    h: float = Field(default=1.0 / 256.0, gt=0)
    t_max: float = Field(gt=0)
    blowup_threshold: Optional[float] = Field(default=None, gt=0)
    picard_t_max: Optional[float] = Field(default=None, gt=0)
    picard_tol: Optional[float] = Field(default=None, gt=0)
    picard_max_iter: int = Field(default=60, ge=1)
    apriori_C: float = Field(default=1.0, gt=0)
    trace_stride: Optional[int] = Field(default=None, ge=1)
    snapshot_stride: int = Field(default=64, ge=1)


class DataSection(_Section):
    f: List[BumpSpec] = Field(default_factory=list)
    g: List[BumpSpec] = Field(default_factory=list)


class SweepSection(_Section):
    eps: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    per_decade: int = Field(default=8, ge=1)
    parallel: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _one_form(self) -> "SweepSection":
        ranged = self.start is not None or self.stop is not None
        if self.eps is not None and ranged:
            raise ValueError("give either sweep.eps or sweep.start/stop, not both")
        if self.eps is None and (self.start is None or self.stop is None):
            raise ValueError("sweep needs an eps list or both start and stop")
        return self

    def eps_list(self) -> List[float]:
        if self.eps is not None:
            return [float(e) for e in self.eps]
        return log_spaced_epsilons(self.start, self.stop, self.per_decade)


class OutputSection(_Section):
    directory: str = "runs"


class RunConfig(_Section):
    """Validated run description"""
    problem: ProblemSection
    numerics: NumericsSection
    data: DataSection = Field(default_factory=DataSection)
    sweep: Optional[SweepSection] = None
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _check_invariants(self) -> "RunConfig":
        f, g = self.profiles()
        if f.smoothness < 2:
            raise ValueError(f"f must be C^2 (bump order >= 2), got C^{f.smoothness}")
        # builds Params, which enforces every invariant
        self.params()
        return self

    def profiles(self) -> Tuple[Profile, Profile]:
        R = self.problem.R
        f = combine_profiles([make_bump(b.center, b.radius, b.amplitude, b.order, R=R)
                              for b in self.data.f], R)
        g = combine_profiles([make_bump(b.center, b.radius, b.amplitude, b.order, R=R)
                              for b in self.data.g], R)
        return f, g

    def free_solution(self) -> FreeSolution:
        f, g = self.profiles()
        return FreeSolution.from_data(f, g)

    @property
    def M(self) -> float:
        return compute_M(*self.profiles())

    def params(self, epsilon: Optional[float] = None) -> Params:
        eps = self.problem.epsilon if epsilon is None else epsilon
        threshold = self.numerics.blowup_threshold
        if threshold is None:
            threshold = default_blowup_threshold(eps, self.M)
        return Params(p=self.problem.p, epsilon=eps, R=self.problem.R, R0=self.problem.R0,
                      h=self.numerics.h, t_max=self.numerics.t_max, blowup_threshold=threshold)

    def with_h(self, h: float) -> "RunConfig":
        """Same config on another grid step, re-validated"""
        raw = self.model_dump()
        raw["numerics"]["h"] = h
        return _validate(raw)

    def manifest(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _validate(raw: Any) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a YAML mapping with sections")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


class WaveLabConfigParser:
    """Loads YAML run configs into RunConfig"""

    def __init__(self):
        self.raw: Dict = {}
        self.config: Optional[RunConfig] = None
        self.source: Optional[str] = None

    def load_file(self, path: str) -> RunConfig:
        """Load a run config from a .yaml file"""
        try:
            with open(path, 'r') as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        self.source = str(Path(path))
        return self.load_string(text)

    def load_string(self, yaml_str: str) -> RunConfig:
        """Load a run config from a YAML string"""
        try:
            raw = yaml.safe_load(yaml_str)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        self.raw = raw if isinstance(raw, dict) else {}
        self.config = _validate(raw)
        logger.debug(f"config loaded from {self.source or '<string>'}")
        return self.config


def load_config(path: str) -> RunConfig:
    return WaveLabConfigParser().load_file(path)
