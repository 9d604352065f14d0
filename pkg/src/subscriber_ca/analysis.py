"""Rescaled-range (R/S) analysis and Hurst-exponent estimation.

R/S is evaluated on growing prefixes of a series; the Hurst exponent is the
slope of ``log(R/S)`` against ``log(N/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegenerateSeriesError",
    "HurstEstimate",
    "InsufficientDataError",
    "RsCurve",
    "cumulative_deviation",
    "estimate_hurst",
    "hurst_of_series",
    "prefix_lengths",
    "rescaled_range",
    "rs_curve",
    "series_mean",
    "spread",
]

MIN_POINTS = 5
MIN_PREFIX = 8


class DegenerateSeriesError(ArithmeticError):
    """R/S is undefined because the series has zero standard deviation."""


class InsufficientDataError(ValueError):
    """Too few usable points for a curve or a regression."""


@dataclass(frozen=True)
class RsCurve:
    n: np.ndarray
    rs: np.ndarray
    skipped: int = 0

    def __post_init__(self):
        n = np.asarray(self.n, dtype=np.int64)
        rs = np.asarray(self.rs, dtype=float)
        if n.shape != rs.shape or n.ndim != 1:
            raise ValueError("n and rs must be 1-D arrays of equal length")
        if n.size > 1 and np.any(np.diff(n) <= 0):
            raise ValueError("prefix lengths must be strictly increasing")
        if np.any(rs <= 0):
            raise ValueError("rs values must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rs", rs)

    def __len__(self):
        return int(self.n.size)

    @property
    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.n.tolist(), self.rs.tolist()))


@dataclass(frozen=True)
class HurstEstimate:
    H: float
    intercept: float
    r_squared: float
    n_points: int
    curve: RsCurve | None = field(default=None, repr=False, compare=False)


def _as_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("series is empty")
    return x


def series_mean(series) -> float:
    return float(np.mean(_as_series(series)))


def cumulative_deviation(series) -> np.ndarray:
    """Running sum of deviations from the full-series mean."""
    x = _as_series(series)
    return np.cumsum(x - x.mean())


def spread(series) -> float:
    """Range (max minus min) of the cumulative deviations."""
    x = _as_series(series)
    if np.all(x == x[0]):
        # the mean of equal floats can carry rounding noise
        return 0.0
    dev = cumulative_deviation(x)
    return float(dev.max() - dev.min())


def rescaled_range(series) -> float:
    """R/S of the whole series, using the population standard deviation.

    Raises :class:`DegenerateSeriesError` for a constant series.
    """
    x = _as_series(series)
    if x.size < 2:
        raise InsufficientDataError("R/S needs at least 2 observations")
    if np.all(x == x[0]):
        raise DegenerateSeriesError("constant series has zero standard deviation")
    if _integral_in_range(x):
        return _rescaled_range_int(x.astype(np.int64))
    s = float(np.std(x))
    if s == 0.0:
        raise DegenerateSeriesError("series has zero standard deviation")
    return spread(x) / s


def _integral_in_range(x: np.ndarray) -> bool:
    # N^2 * max|x| must stay well inside int64 for the scaled sums below
    big = float(np.abs(x).max())
    return big * x.size * x.size < 2.0**62 and bool(np.all(x == np.rint(x)))


def _rescaled_range_int(x: np.ndarray) -> float:
    """R/S for integer data, computed exactly on N-scaled quantities.

    N * X(n, N) = N * S(n) - n * S(N) and N^2 * var = N * sum(x^2) - S(N)^2
    are integers, so the result is bit-identical under integer shifts.
    """
    n = x.size
    csum = np.cumsum(x)
    total = int(csum[-1])
    scaled_dev = n * csum - np.arange(1, n + 1, dtype=np.int64) * total
    n2_var = n * sum(int(v) * int(v) for v in x.tolist()) - total * total
    if n2_var <= 0:
        raise DegenerateSeriesError("series has zero standard deviation")
    return float(int(scaled_dev.max()) - int(scaled_dev.min())) / math.sqrt(n2_var)


def prefix_lengths(length: int, min_n: int = 16, points_per_decade: int = 10) -> np.ndarray:
    """Log-spaced prefix lengths from ``min_n`` up to ``length`` (distinct integers)."""
    if min_n < MIN_PREFIX:
        raise ValueError(f"min_n must be >= {MIN_PREFIX} (got {min_n})")
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be positive")
    if length < min_n:
        raise InsufficientDataError(f"series of length {length} is shorter than min_n={min_n}")
    steps = math.floor(points_per_decade * math.log10(length / min_n) + 1e-9)
    ns = np.rint(min_n * 10.0 ** (np.arange(steps + 1) / points_per_decade)).astype(np.int64)
    return np.unique(np.clip(ns, min_n, length))


def rs_curve(series, min_n: int = 16, points_per_decade: int = 10) -> RsCurve:
    """R/S on growing prefixes; constant prefixes are skipped and counted."""
    x = _as_series(series)
    ns, values, skipped = [], [], 0
    for n in prefix_lengths(x.size, min_n, points_per_decade):
        try:
            values.append(rescaled_range(x[:n]))
        except DegenerateSeriesError:
            skipped += 1
            continue
        ns.append(int(n))
    if len(ns) < MIN_POINTS:
        raise InsufficientDataError(
            f"only {len(ns)} usable R/S points ({skipped} degenerate); need {MIN_POINTS}"
        )
    return RsCurve(np.array(ns), np.array(values), skipped)


def estimate_hurst(curve: RsCurve) -> HurstEstimate:
    """OLS fit of ``log(rs) = H * log(N/2) + intercept``."""
    if len(curve) < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} points, got {len(curve)}")
    lx = np.log(curve.n / 2.0)
    ly = np.log(curve.rs)
    xm, ym = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - xm) ** 2))
    if sxx == 0.0:
        raise InsufficientDataError("all prefix lengths are equal")
    slope = float(np.sum((lx - xm) * (ly - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((ly - (intercept + slope * lx)) ** 2))
    ss_tot = float(np.sum((ly - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return HurstEstimate(slope, intercept, r2, len(curve), curve)


def hurst_of_series(series, min_n: int = 16, points_per_decade: int = 10) -> HurstEstimate:
    return estimate_hurst(rs_curve(series, min_n, points_per_decade))
