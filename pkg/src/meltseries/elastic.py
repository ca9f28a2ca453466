"""Whole-series distances: Euclidean and Mean baselines, banded DTW.

DTW minimizes, over monotone alignment paths from (1,1) to (m,n) with
steps (1,0), (0,1), (1,1), the square root of the summed squared local
differences. The Sakoe-Chiba constraint admits cell (i,j) when

    |i * (n/m) - j| <= band_fraction * max(m, n)

i.e. a corridor around the diagonal stretched to the grid's aspect ratio.
Internally the inequality is scaled by m so membership is decided on exact
integers: |i*n - j*m| <= R. An infeasible corridor (too narrow to connect
the mandatory corner cells) is widened to the feasibility minimum and the
geometry records that it happened.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import TimeSeries
from .preprocess import resample_linear


@dataclass(frozen=True)
class DtwSpec:
    """Sakoe-Chiba half-width as a fraction of the longer length (1.0 = full)."""

    band_fraction: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.band_fraction <= 1.0):
            raise ValueError("band_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class BandGeometry:
    """Admissible inner-index window per outer row of the warping grid.

    Orientation puts the longer series on the outer axis, so the DP rows
    have the shorter length. The admissibility predicate for 1-based
    indices a (outer) and b (inner) is |a*B - b*A| <= radius, which is
    symmetric in the two axes.
    """

    outer_len: int
    inner_len: int
    lo: np.ndarray  # 0-based inclusive lower bound of b per outer row
    hi: np.ndarray  # 0-based inclusive upper bound
    radius: float
    widened: bool

    def admissible(self, a: int, b: int) -> bool:
        """Membership test for 1-based indices (a, b)."""
        return abs(a * self.inner_len - b * self.outer_len) <= self.radius


def _min_feasible_radius(big: int, small: int) -> int:
    """Smallest scaled radius admitting a corner-to-corner monotone path.

    Every row and every column of the grid must contain an admissible
    cell (a path visits all of them) and the (1,1) corner must be inside.
    """
    a = np.arange(1, big + 1, dtype=np.int64)
    target = a * small
    b_star = np.clip(np.rint(target / big).astype(np.int64), 1, small)
    dev_rows = np.abs(target - b_star * big)
    for shift in (-1, 1):
        b_alt = np.clip(b_star + shift, 1, small)
        dev_rows = np.minimum(dev_rows, np.abs(target - b_alt * big))
    b = np.arange(1, small + 1, dtype=np.int64)
    target_b = b * big
    a_star = np.clip(np.rint(target_b / small).astype(np.int64), 1, big)
    dev_cols = np.abs(target_b - a_star * small)
    for shift in (-1, 1):
        a_alt = np.clip(a_star + shift, 1, big)
        dev_cols = np.minimum(dev_cols, np.abs(target_b - a_alt * small))
    return int(
        max(dev_rows.max(), dev_cols.max(), abs(big - small))
    )


def band_geometry(m: int, n: int, spec: DtwSpec) -> BandGeometry:
    """Band window bounds for series lengths m = |q| and n = |x|."""
    if m < 1 or n < 1:
        raise ValueError("series must be nonempty")
    big, small = (m, n) if m >= n else (n, m)
    # |i*(n/m) - j| <= band_fraction*max(m,n), cleared of fractions by *m.
    radius_cfg = spec.band_fraction * max(m, n) * m
    radius_min = _min_feasible_radius(big, small)
    widened = radius_cfg < radius_min
    radius = max(radius_cfg, float(radius_min))

    a = np.arange(1, big + 1, dtype=np.int64)
    target = a * small
    lo = np.ceil((target - radius) / big).astype(np.int64)
    hi = np.floor((target + radius) / big).astype(np.int64)
    # Exact fixups: the float estimates are off by at most one step.
    lo = np.where(np.abs(target - (lo - 1) * big) <= radius, lo - 1, lo)
    lo = np.where(np.abs(target - lo * big) > radius, lo + 1, lo)
    hi = np.where(np.abs(target - (hi + 1) * big) <= radius, hi + 1, hi)
    hi = np.where(np.abs(target - hi * big) > radius, hi - 1, hi)
    lo = np.clip(lo, 1, small) - 1
    hi = np.clip(hi, 1, small) - 1
    if np.any(lo > hi):
        raise AssertionError("band window empty despite feasibility widening")
    return BandGeometry(big, small, lo, hi, radius, widened)


def _dtw_dp(outer: np.ndarray, inner: np.ndarray, lo: np.ndarray,
            hi: np.ndarray) -> float:
    """Two-row banded DP over the alignment grid; returns the squared cost."""
    big = outer.shape[0]
    small = inner.shape[0]
    prev = np.empty(small, dtype=np.float64)
    cur = np.empty(small, dtype=np.float64)
    clear_hi = hi[1] if big > 1 else hi[0]
    for b in range(0, clear_hi + 1):
        cur[b] = math.inf
    d = outer[0] - inner[0]
    cur[0] = d * d
    for b in range(1, hi[0] + 1):
        d = outer[0] - inner[b]
        cur[b] = cur[b - 1] + d * d
    for a in range(1, big):
        prev, cur = cur, prev
        start = lo[a] - 1 if lo[a] > 0 else 0
        clear_hi = hi[a + 1] if a + 1 < big else hi[a]
        for b in range(start, clear_hi + 1):
            cur[b] = math.inf
        for b in range(lo[a], hi[a] + 1):
            best = prev[b]
            if b > 0:
                if prev[b - 1] < best:
                    best = prev[b - 1]
                if cur[b - 1] < best:
                    best = cur[b - 1]
            d = outer[a] - inner[b]
            cur[b] = d * d + best
    return cur[small - 1]


try:
    from numba import njit

    _dtw_dp_fast = njit(cache=True, nogil=True)(_dtw_dp)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _dtw_dp_fast = _dtw_dp


def dtw_distance(q: TimeSeries, x: TimeSeries, spec: DtwSpec) -> float:
    """Banded DTW distance between two series."""
    qv, xv = q.values, x.values
    m, n = qv.shape[0], xv.shape[0]
    geom = band_geometry(m, n, spec)
    outer, inner = (qv, xv) if m >= n else (xv, qv)
    cost = _dtw_dp_fast(outer, inner, geom.lo, geom.hi)
    return math.sqrt(cost)


def euclidean_distance(q: TimeSeries, x: TimeSeries,
                       common_length: int) -> float:
    """Euclidean distance after resampling both series to common_length.

    Series already at common_length are used as-is.
    """
    if common_length < 2:
        raise ValueError("common_length must be >= 2")
    if len(q) < 2 or len(x) < 2:
        raise ValueError("euclidean distance needs series of length >= 2")
    qv = q.values if len(q) == common_length \
        else resample_linear(q, common_length).values
    xv = x.values if len(x) == common_length \
        else resample_linear(x, common_length).values
    diff = qv - xv
    # Strict left-to-right accumulation, the same order in which the
    # warping DP accumulates its diagonal path, so dtw <= euclidean holds
    # exactly in floats, not just mathematically.
    total = float(np.cumsum(diff * diff)[-1])
    return math.sqrt(total)


def mean_distance(q: TimeSeries, x: TimeSeries) -> float:
    """Absolute difference of the two series means."""
    return abs(float(q.values.mean()) - float(x.values.mean()))
