#!/usr/bin/env python3
"""
wavelab Duhamel operators on characteristic grids

    L(v)(x,t)   = 1/2 int_0^t ds int_{x-t+s}^{x+t-s} v(y,s) dy
    L'(v)(x,t)  = 1/2 int_0^t {v(x+t-s,s) + v(x-t+s,s)} ds
    Lbar(v)(x,t)= 1/2 int_0^t {v(x+t-s,s) - v(x-t+s,s)} ds

All integrals are composite trapezoid rules whose nodes are grid nodes
(dt = dx = h), so nothing is interpolated. ``apply`` is the node-wise
reference; ``apply_field`` produces whole fields, computing level n from
input levels <= n only.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from core.errors import FieldTooNarrowError, ParamsError, SupportViolationError
from core.grid import GridField

logger = logging.getLogger(__name__)


class OperatorKind(Enum):
    L = "L"
    LPRIME = "Lprime"
    LBAR = "Lbar"


@dataclass(frozen=True)
class AprioriConstant:
    """C in ||L'(|w|^p)|| <= C ||w||^p (T+R); C = 1 follows from
    |L'(|w|^p)| <= 1/2 int_0^t 2||w||^p ds = t||w||^p."""
    C: float = 1.0

    def __post_init__(self):
        if not self.C > 0:
            raise ParamsError(f"a-priori constant must be positive, got {self.C}")


DEFAULT_APRIORI = AprioriConstant()


@dataclass(frozen=True)
class AprioriCheck:
    lhs: float
    rhs: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds}


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    if n == 0:
        return np.zeros(1)
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _require_cone_width(v: GridField) -> None:
    """A cone-supported field must be wide enough that off-array reads are truly zero."""
    K = int(round(v.R / v.h))
    if v.center - (v.n_t - 1) < K or v.n_x - 1 - v.center - (v.n_t - 1) < K:
        raise FieldTooNarrowError(
            f"{v.name or 'field'} does not cover [-(T+R), T+R] for R={v.R}"
        )


def _read(v: GridField, levels: np.ndarray, cols: np.ndarray) -> np.ndarray:
    inside = (cols >= 0) & (cols < v.n_x)
    if not inside.all():
        if not v.cone_supported:
            raise FieldTooNarrowError(
                f"backward characteristics leave the sampled extent of {v.name or 'field'}"
            )
        _require_cone_width(v)
    out = np.zeros(cols.shape)
    out[inside] = v.values[levels[inside], cols[inside]]
    return out


def apply(kind: Union[OperatorKind, str], v: GridField, x_node: int, t_level: int) -> float:
    """One operator value at node (x_node, t_level), summed directly."""
    kind = OperatorKind(kind)
    if not 0 <= t_level < v.n_t:
        raise FieldTooNarrowError(f"level {t_level} not sampled (field has {v.n_t} levels)")
    if not 0 <= x_node < v.n_x:
        raise FieldTooNarrowError(f"node {x_node} outside the field (n_x={v.n_x})")

    n, h = t_level, v.h
    if n == 0:
        return 0.0
    m = np.arange(n + 1)
    w = _trapezoid_weights(n, h)

    if kind is OperatorKind.L:
        total = 0.0
        for level, weight in zip(m[:-1], w[:-1]):
            k = n - level
            cols = np.arange(x_node - k, x_node + k + 1)
            row = _read(v, np.full(cols.shape, level), cols)
            inner = h * (row.sum() - 0.5 * (row[0] + row[-1]))
            total += weight * inner
        return 0.5 * total

    plus = _read(v, m, x_node + n - m)
    minus = _read(v, m, x_node - n + m)
    if kind is OperatorKind.LPRIME:
        return float(0.5 * np.dot(w, plus + minus))
    return float(0.5 * np.dot(w, plus - minus))


def _require_field_ready(v: GridField) -> None:
    if not v.cone_supported:
        raise FieldTooNarrowError(
            f"apply_field needs a cone-supported field; {v.name or 'field'} has no support radius"
        )
    _require_cone_width(v)
    if not v.support_holds():
        raise SupportViolationError(f"{v.name or 'field'} is nonzero outside |x| <= t + R")


class CharacteristicSums:
    """Running trapezoid sums of v along x+t = const and x-t = const

    Fed one full-width level at a time; ``advance`` returns the two one-sided
    integrals whose half sum is L' and half difference is Lbar at that level.
    """

    def __init__(self, first_level: np.ndarray, h: float):
        self.h = h
        self.plus_sum = 0.5 * np.asarray(first_level, dtype=float)   # half weight on level 0
        self.minus_sum = self.plus_sum.copy()
        self._shifted = np.zeros(self.plus_sum.size)

    def advance(self, vn: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        shifted = self._shifted
        shifted[:-1] = self.plus_sum[1:]
        shifted[-1] = 0.0
        self.plus_sum = shifted + vn
        shifted[1:] = self.minus_sum[:-1]
        shifted[0] = 0.0
        self.minus_sum = shifted + vn
        return self.h * (self.plus_sum - 0.5 * vn), self.h * (self.minus_sum - 0.5 * vn)


def _characteristic_field(kind: OperatorKind, v: GridField) -> np.ndarray:
    """L' and Lbar by running sums along x+t = const and x-t = const."""
    vals = v.values
    out = np.zeros_like(vals)
    sums = CharacteristicSums(vals[0], v.h)
    for n in range(1, v.n_t):
        plus, minus = sums.advance(vals[n])
        out[n] = 0.5 * (plus + minus) if kind is OperatorKind.LPRIME else 0.5 * (plus - minus)
    return out



def _light_cone_field(v: GridField) -> np.ndarray:
    """L by per-level prefix sums; O(N^2 n_x), meant for check-sized grids."""
    h, N = v.h, v.n_t - 1
    n_x = v.n_x
    padded = np.zeros((v.n_t, n_x + 2 * N))
    padded[:, N:N + n_x] = v.values
    prefix = np.zeros((v.n_t, n_x + 2 * N + 1))
    np.cumsum(padded, axis=1, out=prefix[:, 1:])

    out = np.zeros_like(v.values)
    for n in range(1, v.n_t):
        acc = np.zeros(n_x)
        for m in range(n):
            k = n - m
            window = prefix[m, N + k + 1:N + k + 1 + n_x] - prefix[m, N - k:N - k + n_x]
            ends = padded[m, N + k:N + k + n_x] + padded[m, N - k:N - k + n_x]
            inner = h * (window - 0.5 * ends)
            acc += (0.5 * h if m == 0 else h) * inner
        out[n] = 0.5 * acc
    return out


def apply_field(kind: Union[OperatorKind, str], v: GridField) -> GridField:
    """Operator applied at every node; output inherits v's support claim."""
    kind = OperatorKind(kind)
    _require_field_ready(v)
    if kind is OperatorKind.L:
        values = _light_cone_field(v)
    else:
        values = _characteristic_field(kind, v)
    return v.like(values, name=f"{kind.value}({v.name})" if v.name else kind.value)


def apriori_bound(v: GridField, p: float, T: float, R: float,
                  C: Union[AprioriConstant, float] = DEFAULT_APRIORI) -> AprioriCheck:
    """(sup|L'(|v|^p)|, C sup|v|^p (T+R)) with O(h) quadrature slack on the right."""
    _require_field_ready(v)
    acc = AprioriAccumulator(p, v.h)
    for level in v.values:
        acc.add(level)
    return acc.check(T, R, C)


class AprioriAccumulator:
    """apriori_bound fed level by level, for runs too long to keep as a field

    Levels are full-width rows of v on one layout, starting at level 0.
    """

    def __init__(self, p: float, h: float):
        self.p = p
        self.h = h
        self.n_levels = 0
        self._sums: Optional[CharacteristicSums] = None
        self._lhs = 0.0
        self._sup_v = 0.0

    def add(self, level: np.ndarray) -> None:
        with np.errstate(over="ignore", invalid="ignore"):
            powered = np.abs(level) ** self.p
        if self.n_levels == 0:
            self._sums = CharacteristicSums(powered, self.h)
        else:
            plus, minus = self._sums.advance(powered)
            self._lhs = max(self._lhs, float(np.max(np.abs(0.5 * (plus + minus)))))
        if level.size:
            self._sup_v = max(self._sup_v, float(np.max(np.abs(level))))
        self.n_levels += 1

    def check(self, T: float, R: float,
              C: Union[AprioriConstant, float] = DEFAULT_APRIORI) -> AprioriCheck:
        C = C.C if isinstance(C, AprioriConstant) else AprioriConstant(float(C)).C
        rhs = C * self._sup_v ** self.p * (T + R)
        return AprioriCheck(lhs=self._lhs, rhs=rhs, slack=self.h * rhs)
