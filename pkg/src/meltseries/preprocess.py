"""Series conditioning: z-normalization, Butterworth smoothing, PAA, resampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dataset import TimeSeries

# Relative threshold below which a series is treated as constant: the raw
# sample standard deviation of a constant series is not exactly zero once
# the mean itself rounds, so an exact ==0 test would amplify float noise.
_CONST_STD_RTOL = 1e-12


@dataclass(frozen=True)
class ButterworthSpec:
    """Low-pass Butterworth design: order, cutoff as a fraction of Nyquist."""

    order: int = 4
    cutoff: float = 0.05
    zero_phase: bool = True

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("filter order must be >= 1")
        if not (0.0 < self.cutoff < 1.0):
            raise ValueError("cutoff must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class PaaSpec:
    """Piecewise aggregate approximation target length."""

    target_length: int

    def __post_init__(self):
        if self.target_length < 1:
            raise ValueError("PAA target length must be >= 1")


def _znorm_rows(mat: np.ndarray) -> np.ndarray:
    """Row-wise z-normalization with the constant-row -> zeros convention."""
    mu = mat.mean(axis=1, keepdims=True)
    sd = mat.std(axis=1, keepdims=True)  # population std
    guard = _CONST_STD_RTOL * np.maximum(1.0, np.abs(mu))
    constant = sd <= guard
    safe_sd = np.where(constant, 1.0, sd)
    out = (mat - mu) / safe_sd
    if np.any(constant):
        out = np.where(constant, 0.0, out)
    return out


def znormalize(s: TimeSeries) -> TimeSeries:
    """Shift/scale to mean 0 and population standard deviation 1.

    A constant series maps to all zeros instead of raising.
    """
    out = _znorm_rows(s.values[np.newaxis, :])[0]
    return TimeSeries(out)


def butterworth_filter(s: TimeSeries, spec: ButterworthSpec) -> TimeSeries:
    """Low-pass the series through a Butterworth filter of the given spec.

    The filter is designed from the analog prototype via the bilinear
    transform with frequency prewarping and applied as cascaded
    second-order sections. With zero_phase the filter runs forward then
    backward, cancelling phase distortion. Output length equals input
    length. Requires len(s) > 3 * order.
    """
    n = len(s)
    if n <= 3 * spec.order:
        raise ValueError(
            f"series too short to filter: need more than {3 * spec.order} "
            f"samples for order {spec.order}, got {n}"
        )
    sos = butterworth_sos(spec)
    if spec.zero_phase:
        # Padding must cover the filter's settling time, which grows as
        # 1/cutoff. Even-symmetric extension: odd extension injects a DC
        # pedestal (2*x[edge]) whenever the edge sample is nonzero, and a
        # low-pass filter passes that pedestal into the output.
        pad = min(n - 1, max(3 * spec.order, round(6.0 / spec.cutoff)))
        out = signal.sosfiltfilt(sos, s.values, padlen=pad, padtype="even")
    else:
        out = signal.sosfilt(sos, s.values)
    return TimeSeries(np.asarray(out, dtype=np.float64))


def butterworth_sos(spec: ButterworthSpec) -> np.ndarray:
    """Second-order sections of the designed filter (gain 1/sqrt(2) at cutoff)."""
    return signal.butter(spec.order, spec.cutoff, btype="low", output="sos")


def butterworth_gain(spec: ButterworthSpec, freq: float) -> float:
    """Single-pass magnitude response at `freq` (fraction of Nyquist)."""
    _, h = signal.sosfreqz(butterworth_sos(spec), worN=[freq * np.pi])
    return float(np.abs(h[0]))


def _paa_block(mat: np.ndarray, m: int) -> np.ndarray:
    """PAA of each row of `mat` down to m values.

    Bins are the m equal subintervals of [0, n). When m divides n each
    output is the plain mean of its n/m samples; otherwise a sample
    straddling a bin edge contributes to both bins in proportion to the
    overlap, which reduces to the divisible case exactly.
    """
    rows, n = mat.shape
    if m == n:
        return mat.copy()
    if m == 1:
        return mat.mean(axis=1, keepdims=True)
    if n % m == 0:
        return mat.reshape(rows, m, n // m).mean(axis=2)
    # Fractional bins via the running integral of the sample step function.
    csum = np.concatenate(
        [np.zeros((rows, 1)), np.cumsum(mat, axis=1)], axis=1
    )
    edges = np.arange(m + 1) * (n / m)
    idx = np.minimum(edges.astype(np.int64), n - 1)
    frac = edges - idx
    integral = csum[:, idx] + frac * mat[:, idx]
    integral[:, -1] = csum[:, -1]  # right edge is exactly n
    return np.diff(integral, axis=1) * (m / n)


def paa(s: TimeSeries, spec: PaaSpec) -> TimeSeries:
    """Piecewise aggregate approximation of the series to spec.target_length.

    target_length == len(s) returns the series unchanged and
    target_length == 1 returns the global mean.
    """
    m = spec.target_length
    n = len(s)
    if m > n:
        raise ValueError(f"PAA target length {m} exceeds series length {n}")
    return TimeSeries(_paa_block(s.values[np.newaxis, :], m)[0])


def resample_linear(s: TimeSeries, target_length: int) -> TimeSeries:
    """Linear-interpolation resampling onto target_length points.

    Endpoints are preserved exactly; interior points interpolate on the
    normalized index axis. Both lengths must be >= 2.
    """
    n = len(s)
    if n < 2:
        raise ValueError("resampling needs at least 2 samples")
    if target_length < 2:
        raise ValueError("target length must be >= 2")
    if target_length == n:
        return TimeSeries(s.values.copy())
    positions = np.linspace(0.0, n - 1, target_length)
    out = np.interp(positions, np.arange(n), s.values)
    return TimeSeries(out)
