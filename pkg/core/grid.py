#!/usr/bin/env python3
"""
wavelab grid - characteristic-aligned space-time fields

The grid uses dt = dx = h, so the backward characteristics x +- (t - s)
starting at a node pass through nodes on every earlier level. Every field of
a run shares one rectangular layout that covers [-(T+R), T+R] on all levels;
node indices are integers measured from the centre node x = 0, which keeps
support tests exact.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.errors import SupportViolationError
from core.params import Params


@dataclass(frozen=True)
class GridLayout:
    """Node geometry shared by every field of a run"""
    h: float
    n_levels: int
    K: int  # R / h

    @classmethod
    def for_params(cls, params: Params, n_levels: Optional[int] = None) -> "GridLayout":
        return cls(params.h, params.n_levels if n_levels is None else n_levels, params.K)

    @property
    def N(self) -> int:
        return self.n_levels - 1

    @property
    def R(self) -> float:
        return self.K * self.h

    @property
    def center(self) -> int:
        return self.N + self.K

    @property
    def n_x(self) -> int:
        return 2 * (self.N + self.K) + 1

    @property
    def x_offset(self) -> float:
        return -self.center * self.h

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_x) - self.center) * self.h

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_levels) * self.h

    def cone_mask(self) -> np.ndarray:
        """True where |x| <= t + R, by integer node arithmetic"""
        offsets = np.abs(np.arange(self.n_x) - self.center)
        levels = np.arange(self.n_levels)
        return offsets[None, :] <= (levels[:, None] + self.K)

    def active_slice(self, level: int) -> slice:
        """Nodes with |x| <= level*h + R"""
        half = level + self.K
        return slice(self.center - half, self.center + half + 1)

    def level_support_holds(self, values: np.ndarray, level: int) -> bool:
        """One full-width level is exactly zero outside its cone slice"""
        sl = self.active_slice(level)
        return not (np.any(values[:sl.start]) or np.any(values[sl.stop:]))

    def zeros(self, R: Optional[float] = None) -> "GridField":
        return GridField(self.h, self.n_levels, self.x_offset,
                         np.zeros((self.n_levels, self.n_x)), R=R)


@dataclass
class GridField:
    """Scalar field sampled on (time level, space node)

    ``R`` is set when the field is known to vanish outside the cone
    |x| <= t + R; reads beyond the stored array then return 0.
    """
    h: float
    n_t: int
    x_offset: float
    values: np.ndarray
    R: Optional[float] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.n_t:
            raise ValueError(f"values must have shape (n_t={self.n_t}, n_x), got {self.values.shape}")

    @property
    def n_x(self) -> int:
        return self.values.shape[1]

    @property
    def center(self) -> int:
        return int(round(-self.x_offset / self.h))

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_x) - self.center) * self.h

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) * self.h

    @property
    def layout(self) -> GridLayout:
        K = self.center - (self.n_t - 1)
        return GridLayout(self.h, self.n_t, K)

    @property
    def cone_supported(self) -> bool:
        return self.R is not None

    def like(self, values: np.ndarray, name: str = "") -> "GridField":
        """New field on the same layout carrying the same support claim"""
        return GridField(self.h, self.n_t, self.x_offset, values, R=self.R, name=name)

    def cone_mask(self) -> np.ndarray:
        if self.R is None:
            raise SupportViolationError("field carries no support radius")
        K = int(round(self.R / self.h))
        offsets = np.abs(np.arange(self.n_x) - self.center)
        levels = np.arange(self.n_t)
        return offsets[None, :] <= (levels[:, None] + K)

    def support_holds(self) -> bool:
        """Exactly zero at every node with |x| > t + R"""
        return not np.any(self.values[~self.cone_mask()])

    def enforce_support(self) -> "GridField":
        """Clear values beyond the cone in place (they are analytically zero)."""
        self.values[~self.cone_mask()] = 0.0
        return self

    def sup(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SupNormReport:
    """||w||, ||w_t|| and ||w||_X = ||w|| + ||w_t|| over the grid"""
    norm_w: float
    norm_wt: float

    @property
    def norm_X(self) -> float:
        return self.norm_w + self.norm_wt

    def to_dict(self) -> dict:
        return {"norm_w": self.norm_w, "norm_wt": self.norm_wt, "norm_X": self.norm_X}


def sup_norms(w: GridField, wt: GridField) -> SupNormReport:
    return SupNormReport(w.sup(), wt.sup())


def centered_gradient(level: np.ndarray, h: float) -> np.ndarray:
    """(u_{i+1} - u_{i-1}) / 2h with zeros beyond the array"""
    grad = np.zeros_like(level)
    if level.size < 2:
        return grad
    grad[1:-1] = (level[2:] - level[:-2]) / (2.0 * h)
    grad[0] = level[1] / (2.0 * h)
    grad[-1] = -level[-2] / (2.0 * h)
    return grad


def x_difference(field: GridField) -> GridField:
    """Centered D_x on every level"""
    grad = np.zeros_like(field.values)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(field.n_t):
            grad[n] = centered_gradient(field.values[n], field.h)
    return field.like(grad, name=f"D_x {field.name}" if field.name else "D_x")
