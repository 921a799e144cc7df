"""Query rectangles, intervals, and the translation of dependent-attribute
constraints onto the indexed attribute through a model's margin band."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .softfd import SoftFdModel

# Relative padding applied to translated bounds. Translation must stay sound
# under float rounding; widening is harmless because candidates are re-checked
# against the original rectangle downstream.
_PAD = 1e-9


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def intersect(self, other: "Interval") -> "Interval":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return EMPTY_INTERVAL if lo > hi else Interval(lo, hi)


EMPTY_INTERVAL = Interval(math.inf, -math.inf)
FULL_INTERVAL = Interval(-math.inf, math.inf)


@dataclass(frozen=True)
class QueryRect:
    """Per-dimension [lo, hi] constraints; unconstrained dims carry +-inf.

    A point query has lo == hi on every constrained dimension.
    """

    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self) -> None:
        lows = np.asarray(self.lows, dtype=np.float64)
        highs = np.asarray(self.highs, dtype=np.float64)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        if lows.shape != highs.shape or lows.ndim != 1:
            raise ValueError("lows/highs must be equal-length 1-D arrays")
        if np.any(lows > highs):
            raise ValueError("rectangle has lo > hi on some dimension")
        lows.setflags(write=False)
        highs.setflags(write=False)

    @property
    def n_dims(self) -> int:
        return len(self.lows)

    @staticmethod
    def _trusted(lows: np.ndarray, highs: np.ndarray) -> "QueryRect":
        # Hot-path constructor for bounds a caller has already validated;
        # skips re-validation and the read-only flagging.
        r = object.__new__(QueryRect)
        object.__setattr__(r, "lows", lows)
        object.__setattr__(r, "highs", highs)
        return r

    @staticmethod
    def full(n_dims: int) -> "QueryRect":
        return QueryRect(np.full(n_dims, -math.inf), np.full(n_dims, math.inf))

    @staticmethod
    def point(coords: Sequence[float]) -> "QueryRect":
        c = np.asarray(coords, dtype=np.float64)
        return QueryRect(c.copy(), c.copy())

    @staticmethod
    def from_bounds(n_dims: int, bounds: Mapping[int, tuple[float | None, float | None]]) -> "QueryRect":
        """Build a rectangle from {dim: (lo, hi)} with None meaning unbounded."""
        lows = np.full(n_dims, -math.inf)
        highs = np.full(n_dims, math.inf)
        for dim, (lo, hi) in bounds.items():
            if not 0 <= dim < n_dims:
                raise ValueError(f"dim {dim} out of range")
            lows[dim] = -math.inf if lo is None else float(lo)
            highs[dim] = math.inf if hi is None else float(hi)
        return QueryRect(lows, highs)

    def with_dim(self, dim: int, lo: float, hi: float) -> "QueryRect":
        lows = self.lows.copy()
        highs = self.highs.copy()
        lows[dim] = lo
        highs[dim] = hi
        return QueryRect(lows, highs)

    def dim_interval(self, dim: int) -> Interval:
        return Interval(float(self.lows[dim]), float(self.highs[dim]))

    def contains_mask(self, rows: np.ndarray) -> np.ndarray:
        """Boolean mask of rows (n, n_dims) satisfying every dimension's bounds."""
        return np.all((rows >= self.lows) & (rows <= self.highs), axis=1)


def predict(model: SoftFdModel, x: float) -> float:
    """Model estimate of the dependent value at x."""
    return model.slope * x + model.intercept


def _pad_interval(lo: float, hi: float) -> Interval:
    if lo > hi:
        return EMPTY_INTERVAL
    pad_lo = _PAD * (1.0 + abs(lo)) if math.isfinite(lo) else 0.0
    pad_hi = _PAD * (1.0 + abs(hi)) if math.isfinite(hi) else 0.0
    return Interval(lo - pad_lo, hi + pad_hi)


def dependent_range_to_indexed(model: SoftFdModel, y_lo: float, y_hi: float) -> Interval:
    """Indexed-attribute interval whose margin band meets [y_lo, y_hi].

    Every primary-set record with dependent value in [y_lo, y_hi] has its
    indexed value inside the returned interval: the band edges
    slope*x + intercept -+ margins are inverted at the query bounds.
    Negative slopes mirror the bounds.
    """
    if y_lo > y_hi:
        raise ValueError("y_lo must not exceed y_hi")
    m, b = model.slope, model.intercept
    if m > 0:
        lo = (y_lo - b - model.eps_ub) / m
        hi = (y_hi - b + model.eps_lb) / m
    else:
        lo = (y_hi - b + model.eps_lb) / m
        hi = (y_lo - b - model.eps_ub) / m
    if math.isnan(lo):  # inf - inf when both the query bound and margin are infinite
        lo = -math.inf
    if math.isnan(hi):
        hi = math.inf
    return _pad_interval(lo, hi)


def translated_scan_range(
    model: SoftFdModel, x_lo: float, x_hi: float, y_lo: float, y_hi: float
) -> Interval:
    """Intersection of the direct indexed-attribute constraint with the
    translated dependent constraint; EMPTY when they are disjoint."""
    direct = Interval(x_lo, x_hi)
    if direct.is_empty:
        raise ValueError("x_lo must not exceed x_hi")
    return direct.intersect(dependent_range_to_indexed(model, y_lo, y_hi))


def result_area(q_y: float, eps: float, a: float) -> float:
    """Area of the true result region for a dependent-axis range of height q_y."""
    if q_y < 0 or eps < 0 or a <= 0:
        raise ValueError("need q_y >= 0, eps >= 0, a > 0")
    return q_y * 2.0 * eps / a


def scanned_area(q_y: float, eps: float, a: float) -> float:
    """Area the index actually scans for the same query."""
    if q_y < 0 or eps < 0 or a <= 0:
        raise ValueError("need q_y >= 0, eps >= 0, a > 0")
    return 2.0 * eps * (2.0 * eps + q_y) / a


def effectiveness(q_y: float, eps: float) -> float:
    """Fraction of the scanned area that is true result: q_y / (2*eps + q_y).

    Tends to 1 as the margin shrinks and to 0 for point queries on the
    dependent axis; independent of the slope.
    """
    if q_y < 0 or eps < 0:
        raise ValueError("need q_y >= 0 and eps >= 0")
    if q_y == 0 and eps == 0:
        raise ValueError("undefined for q_y = eps = 0")
    if eps == 0:
        return 1.0
    return q_y / (2.0 * eps + q_y)
