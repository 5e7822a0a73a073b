#!/usr/bin/env python3
"""
wavelab problem parameters

Params bundles the PDE parameters (p, epsilon, R, R0) with the numerical
controls (h, t_max, blowup_threshold). Instances are frozen and validated on
construction, so anything holding a Params can rely on its invariants.
"""

import math
from dataclasses import dataclass, replace

from core.errors import ParamsError

# Relative tolerance when deciding that a length is an integer multiple of h
COMMENSURABILITY_TOL = 1e-9


def steps_of(length: float, h: float, what: str = "length") -> int:
    """Return k with length == k*h, or raise ParamsError if none exists."""
    ratio = length / h
    k = round(ratio)
    if abs(ratio - k) > COMMENSURABILITY_TOL * max(1.0, abs(ratio)):
        raise ParamsError(f"{what}={length!r} is not an integer multiple of h={h!r}")
    return int(k)


def default_blowup_threshold(epsilon: float, M: float) -> float:
    """Detection level for |u_x|: six decades above the data scale eps*M."""
    scale = epsilon * M
    return 1e6 * scale if scale > 0 else 1.0


@dataclass(frozen=True)
class Params:
    """PDE parameters plus grid controls for one run"""
    p: float
    epsilon: float
    R: float
    R0: float
    h: float
    t_max: float
    blowup_threshold: float = 1.0

    def __post_init__(self):
        for name in ("p", "epsilon", "R", "R0", "h", "t_max", "blowup_threshold"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParamsError(f"{name} must be a finite number, got {value!r}")

        if self.p <= 1:
            raise ParamsError(f"p must exceed 1, got {self.p}")
        if self.epsilon < 0:
            raise ParamsError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.R < 1:
            raise ParamsError(f"R must be >= 1, got {self.R}")
        if not 0 < self.R0 < self.R:
            raise ParamsError(f"need 0 < R0 < R, got R0={self.R0}, R={self.R}")
        if self.h <= 0:
            raise ParamsError(f"h must be positive, got {self.h}")
        if self.t_max <= 0:
            raise ParamsError(f"t_max must be positive, got {self.t_max}")
        if self.blowup_threshold <= 0:
            raise ParamsError(f"blowup_threshold must be positive, got {self.blowup_threshold}")

        # support endpoints and the window [s+R0, s+R] must sit on nodes
        steps_of(self.R, self.h, "R")
        steps_of(self.R0, self.h, "R0")

    @property
    def K(self) -> int:
        """R in grid steps"""
        return steps_of(self.R, self.h, "R")

    @property
    def K0(self) -> int:
        """R0 in grid steps"""
        return steps_of(self.R0, self.h, "R0")

    @property
    def n_levels(self) -> int:
        """Time levels 0..N with N*h <= t_max"""
        return int(math.floor(self.t_max / self.h + COMMENSURABILITY_TOL)) + 1

    @property
    def horizon_divisible(self) -> bool:
        try:
            steps_of(self.t_max, self.h, "t_max")
        except ParamsError:
            return False
        return True

    def replace(self, **changes) -> "Params":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "epsilon": self.epsilon,
            "R": self.R,
            "R0": self.R0,
            "h": self.h,
            "t_max": self.t_max,
            "blowup_threshold": self.blowup_threshold,
        }
