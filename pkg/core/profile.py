#!/usr/bin/env python3
"""
wavelab Profiles - compactly supported piecewise-polynomial initial data

A Profile is a sorted list of non-overlapping polynomial pieces, identically
zero outside them. Each piece stores its polynomial in the local coordinate
s in [-1, 1] (numpy's domain/window mapping), which keeps high-order bumps
well conditioned and makes derivatives, antiderivatives and critical points
exact polynomial operations.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from core.errors import ProfileError, ProfileSmoothnessError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Smoothness reported by the zero profile (C-infinity)
C_INFINITY = 10**9

# Support may touch +-R up to this absolute slack
SUPPORT_TOL = 1e-12

# Relative size of a jump still accepted as "continuous" at a breakpoint
CONTINUITY_RTOL = 1e-7

# Dense-sampling fallback when critical-point search degenerates
FALLBACK_SAMPLES = 10_000


def _local_poly(coef: Sequence[float], lo: float, hi: float) -> Polynomial:
    return Polynomial(np.asarray(coef, dtype=float), domain=[lo, hi], window=[-1.0, 1.0])


@dataclass(frozen=True)
class Piece:
    """One polynomial piece living on [lo, hi)"""
    lo: float
    hi: float
    poly: Polynomial

    def to_dict(self) -> Dict:
        return {
            "interval": [float(self.lo), float(self.hi)],
            "coefficients": [float(c) for c in self.poly.coef],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Piece":
        lo, hi = data["interval"]
        return cls(float(lo), float(hi), _local_poly(data["coefficients"], float(lo), float(hi)))


def _evaluate_pieces(pieces: Sequence[Piece], x: np.ndarray, order: int,
                     close_last: bool = False) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    for k, piece in enumerate(pieces):
        if close_last and k == len(pieces) - 1:
            mask = (x >= piece.lo) & (x <= piece.hi)
        else:
            mask = (x >= piece.lo) & (x < piece.hi)
        if mask.any():
            out[mask] = piece.poly.deriv(order)(x[mask])
    return out


def _critical_candidates(q: Polynomial, a: float, b: float) -> np.ndarray:
    """Endpoints plus real critical points of q inside [a, b]."""
    dq = q.deriv()
    try:
        roots = dq.roots()
    except np.linalg.LinAlgError:
        roots = None

    if roots is None or not np.all(np.isfinite(roots)):
        logger.warning(f"⚠️ critical-point search degenerated on [{a}, {b}], sampling instead")
        return np.linspace(a, b, FALLBACK_SAMPLES)

    width = max(abs(b - a), 1.0)
    real = roots[np.abs(np.imag(roots)) <= 1e-9 * width].real
    inside = real[(real >= a) & (real <= b)]
    return np.concatenate(([a, b], inside))


@dataclass(frozen=True)
class Antiderivative:
    """Exact G with G' = profile, G(-R) = 0, constant for |x| >= R"""
    tiles: Tuple[Piece, ...]
    R: float

    def __call__(self, x: ArrayLike) -> Union[float, np.ndarray]:
        arr = np.clip(np.asarray(x, dtype=float), -self.R, self.R)
        out = _evaluate_pieces(self.tiles, arr, 0, close_last=True)
        return out if out.ndim else float(out)

    @property
    def total(self) -> float:
        """Value for x >= R, i.e. the integral over the whole line"""
        return float(self(self.R))


@dataclass(frozen=True)
class Profile:
    """Compactly supported piecewise polynomial with a known continuity class"""
    pieces: Tuple[Piece, ...]
    smoothness: int
    R: float

    def __post_init__(self):
        if self.R <= 0:
            raise ProfileError(f"support radius must be positive, got {self.R}")
        if self.smoothness < 0:
            raise ProfileError(f"smoothness must be >= 0, got {self.smoothness}")

        previous_hi = -np.inf
        for piece in self.pieces:
            if not piece.lo < piece.hi:
                raise ProfileError(f"empty piece [{piece.lo}, {piece.hi}]")
            if piece.lo < previous_hi - SUPPORT_TOL:
                raise ProfileError(f"pieces overlap or are unsorted near x={piece.lo}")
            if piece.lo < -self.R - SUPPORT_TOL or piece.hi > self.R + SUPPORT_TOL:
                raise ProfileError(
                    f"support [{piece.lo}, {piece.hi}] leaves [-R, R] with R={self.R}"
                )
            previous_hi = piece.hi

        if self.pieces and self.smoothness < C_INFINITY:
            defect = self.continuity_defect()
            if defect:
                order, x, jump = defect
                raise ProfileError(
                    f"derivative of order {order} jumps by {jump:.3e} at x={x}; "
                    f"profile is not C^{self.smoothness}"
                )

    # evaluation -----------------------------------------------------------

    def evaluate(self, x: ArrayLike, order: int = 0) -> Union[float, np.ndarray]:
        """Exact value of the order-th derivative; scalars in, scalars out."""
        if order < 0:
            raise ProfileError(f"derivative order must be >= 0, got {order}")
        if order > self.smoothness:
            raise ProfileSmoothnessError(
                f"order {order} derivative requested from a C^{self.smoothness} profile"
            )
        arr = np.asarray(x, dtype=float)
        out = _evaluate_pieces(self.pieces, arr, order)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def one_sided(self, x: float, order: int) -> Tuple[float, float]:
        """(left limit, right limit) of the order-th derivative at x"""
        left = right = 0.0
        for piece in self.pieces:
            q = piece.poly.deriv(order)
            if piece.lo < x <= piece.hi:
                left = float(q(x))
            if piece.lo <= x < piece.hi:
                right = float(q(x))
        return left, right

    def breakpoints(self) -> List[float]:
        points = set()
        for piece in self.pieces:
            points.add(float(piece.lo))
            points.add(float(piece.hi))
        return sorted(points)

    def continuity_defect(self) -> Optional[Tuple[int, float, float]]:
        """First (order, x, jump) where continuity up to `smoothness` fails."""
        for order in range(self.smoothness + 1):
            scale = 0.0
            for piece in self.pieces:
                q = piece.poly.deriv(order)
                mid = 0.5 * (piece.lo + piece.hi)
                scale = max(scale, abs(q(piece.lo)), abs(q(mid)), abs(q(piece.hi)))
            tol = CONTINUITY_RTOL * max(scale, 1e-300)
            for x in self.breakpoints():
                left, right = self.one_sided(x, order)
                if abs(left - right) > tol:
                    return order, x, abs(left - right)
        return None

    # exact norms and integrals -------------------------------------------

    def extreme_values(self, order: int, lo: Optional[float] = None,
                       hi: Optional[float] = None) -> np.ndarray:
        """Values of the order-th derivative at every candidate extremum in [lo, hi]."""
        lo = -self.R if lo is None else lo
        hi = self.R if hi is None else hi
        values = [0.0] if self._has_gap(lo, hi) else []
        for piece in self.pieces:
            a, b = max(lo, piece.lo), min(hi, piece.hi)
            if a > b:
                continue
            q = piece.poly.deriv(order)
            values.extend(q(_critical_candidates(q, a, b)).tolist())
        return np.asarray(values if values else [0.0], dtype=float)

    def _has_gap(self, lo: float, hi: float) -> bool:
        cursor = lo
        for piece in self.pieces:
            if piece.hi <= cursor:
                continue
            if piece.lo > cursor:
                return True
            cursor = piece.hi
            if cursor >= hi:
                return False
        return cursor < hi

    def sup_norm(self, order: int = 0) -> float:
        """Exact L-infinity norm of the order-th derivative"""
        if order > self.smoothness:
            raise ProfileSmoothnessError(
                f"sup-norm of order {order} needs a C^{order} profile, have C^{self.smoothness}"
            )
        return float(np.max(np.abs(self.extreme_values(order))))

    def max_on(self, lo: float, hi: float) -> float:
        return float(np.max(self.extreme_values(0, lo, hi)))

    def min_on(self, lo: float, hi: float) -> float:
        return float(np.min(self.extreme_values(0, lo, hi)))

    def antiderivative(self) -> Antiderivative:
        tiles: List[Piece] = []
        cursor = -self.R
        for piece in self.pieces:
            if piece.lo > cursor:
                tiles.append(Piece(cursor, piece.lo, _local_poly([0.0], cursor, piece.lo)))
            tiles.append(piece)
            cursor = piece.hi
        if cursor < self.R:
            tiles.append(Piece(cursor, self.R, _local_poly([0.0], cursor, self.R)))

        integrated: List[Piece] = []
        acc = 0.0
        for tile in tiles:
            prim = tile.poly.integ(lbnd=tile.lo, k=acc)
            integrated.append(Piece(tile.lo, tile.hi, prim))
            acc = float(prim(tile.hi))
        return Antiderivative(tuple(integrated), self.R)

    def integral(self, a: float, b: float) -> float:
        G = self.antiderivative()
        return float(G(b) - G(a))

    # algebra ---------------------------------------------------------------

    def scaled(self, c: float) -> "Profile":
        pieces = tuple(Piece(p.lo, p.hi, p.poly * c) for p in self.pieces)
        return Profile(pieces, self.smoothness, self.R)

    def shifted(self, a: float) -> "Profile":
        pieces = tuple(
            Piece(p.lo + a, p.hi + a, _local_poly(p.poly.coef, p.lo + a, p.hi + a))
            for p in self.pieces
        )
        return Profile(pieces, self.smoothness, self.R)

    # serialization ------------------------------------------------------

    def to_dict(self) -> Dict:
        return {
            "R": float(self.R),
            "smoothness": int(self.smoothness),
            "basis": "local power basis in s = (2x - lo - hi)/(hi - lo)",
            "pieces": [piece.to_dict() for piece in self.pieces],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Profile":
        pieces = tuple(Piece.from_dict(item) for item in data.get("pieces", []))
        return cls(pieces, int(data["smoothness"]), float(data["R"]))


def zero_profile(R: float) -> Profile:
    return Profile((), C_INFINITY, R)


def make_bump(center: float, radius: float, amplitude: float, order: int,
              R: float = 1.0) -> Profile:
    """amplitude*(1 - ((x-center)/radius)^2)^(order+1) on |x-center| < radius; C^order."""
    if radius <= 0:
        raise ProfileError(f"bump radius must be positive, got {radius}")
    if int(order) != order or order < 1:
        raise ProfileError(f"bump order must be an integer >= 1, got {order}")
    lo, hi = center - radius, center + radius
    if lo < -R - SUPPORT_TOL or hi > R + SUPPORT_TOL:
        raise ProfileError(f"bump support [{lo}, {hi}] exceeds [-R, R] with R={R}")

    coef = (Polynomial([1.0, 0.0, -1.0]) ** (int(order) + 1)).coef * amplitude
    return Profile((Piece(lo, hi, _local_poly(coef, lo, hi)),), int(order), R)


def combine_profiles(profiles: Iterable[Profile], R: float) -> Profile:
    """Pointwise sum of profiles, re-cut at the union of their breakpoints."""
    profiles = list(profiles)
    if not profiles:
        return zero_profile(R)

    cuts = sorted({x for pr in profiles for x in pr.breakpoints()})
    pieces: List[Piece] = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        total = None
        for pr in profiles:
            for piece in pr.pieces:
                if piece.lo <= mid < piece.hi:
                    part = piece.poly.convert(domain=[a, b], window=[-1.0, 1.0])
                    total = part if total is None else total + part
        if total is not None:
            pieces.append(Piece(a, b, total))
    smoothness = min(pr.smoothness for pr in profiles)
    return Profile(tuple(pieces), smoothness, R)


def profile_derivative(pr: Profile, x: ArrayLike, order: int) -> Union[float, np.ndarray]:
    """Exact order-th derivative of a profile (0 outside its support)."""
    return pr.evaluate(x, order)


def compute_M(f: Profile, g: Profile) -> float:
    """M = sum_{a<=2} ||f^(a)||_inf + sum_{b<=1} ||g^(b)||_inf, from critical points."""
    if f.smoothness < 2:
        raise ProfileSmoothnessError(f"f must be C^2, got C^{f.smoothness}")
    if g.smoothness < 1:
        raise ProfileSmoothnessError(f"g must be C^1, got C^{g.smoothness}")
    return (f.sup_norm(0) + f.sup_norm(1) + f.sup_norm(2)
            + g.sup_norm(0) + g.sup_norm(1))
