"""Deterministic synthetic perimeter-scan generator.

Each generated series is a flat emissivity baseline with four smooth
negative Gaussian dips (the perimeter corners), Gaussian sample noise and
an optionally jittered length. Class structure is injected through
per-block fields: a level offset, a per-layer trend, per-block dip depth
and per-block dip phase. Dip centers are randomized per record, which is
what misaligns pointwise comparisons while leaving elastic alignment
intact. The mean the dips remove is added back to the baseline, so the
expected series mean depends only on the level terms, never on dip shape.
The compensation assumes whole dips: a phase offset or jitter that pushes
a dip center near the series boundary truncates it and shifts the mean,
so keep centers comfortably inside (0, 1) when equal means matter.

Randomness comes from a counter-mode splitmix64 generator (constants
below), keyed independently per (seed, block, layer): the uint64 stream is
reproducible bit-for-bit, and each record's series is identical no matter
how many other records are generated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset, SeriesRecord, TimeSeries

_GOLDEN = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB

DIPS_PER_SERIES = 4  # one per perimeter corner
_MIN_LENGTH = 16


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 output mixer on uint64 arrays."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_2)
    return z ^ (z >> np.uint64(31))


def _mix64_int(z: int) -> int:
    """The same mixer on plain Python ints (numpy warns on scalar overflow)."""
    mask = 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * _MIX_1) & mask
    z = ((z ^ (z >> 27)) * _MIX_2) & mask
    return z ^ (z >> 31)


def derive_key(*parts: int) -> int:
    """Fold integers into one 64-bit stream key, order-sensitively."""
    key = 0
    for p in parts:
        key = _mix64_int(
            (key + _GOLDEN + (p & 0xFFFFFFFFFFFFFFFF)) & 0xFFFFFFFFFFFFFFFF
        )
    return key


class CounterRng:
    """Counter-mode splitmix64: output i is mix64(key + (i+1)*golden)."""

    def __init__(self, key: int):
        self._key = np.uint64(key & 0xFFFFFFFFFFFFFFFF)
        self._counter = 0

    def raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1,
                        dtype=np.uint64)
        self._counter += n
        return _mix64(self._key + idx * np.uint64(_GOLDEN))

    def uniforms(self, n: int) -> np.ndarray:
        """Uniform float64 samples in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normals(self, n: int) -> np.ndarray:
        """Standard normal samples via Box-Muller."""
        pairs = (n + 1) // 2
        u1 = ((self.raw(pairs) >> np.uint64(11)).astype(np.float64) + 1.0) \
            * 2.0 ** -53  # in (0, 1], keeps log finite
        u2 = self.uniforms(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]


def _per_block(value, blocks: int, name: str) -> tuple[float, ...]:
    if value is None:
        return (0.0,) * blocks
    if isinstance(value, (int, float)):
        return (float(value),) * blocks
    out = tuple(float(v) for v in value)
    if len(out) != blocks:
        raise ValueError(
            f"{name} must have one entry per block ({blocks}), got {len(out)}"
        )
    return out


@dataclass(frozen=True)
class GenSpec:
    """Synthetic dataset shape and class-effect knobs."""

    blocks: int
    layers: int
    base_length: int = 2000
    length_jitter: float = 0.0
    base_level: float = 1000.0
    block_offsets: tuple[float, ...] | float | None = None
    layer_trend: float = 0.0
    dip_depth: tuple[float, ...] | float = 120.0
    dip_width: float = 0.015
    dip_phase_offsets: tuple[float, ...] | float | None = None
    dip_phase_jitter: float = 0.01
    noise: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.blocks < 1 or self.layers < 1:
            raise ValueError("blocks and layers must be positive")
        if self.base_length < _MIN_LENGTH:
            raise ValueError(f"base_length must be >= {_MIN_LENGTH}")
        if not (0.0 <= self.length_jitter <= 0.5):
            raise ValueError("length_jitter must lie in [0, 0.5]")
        if self.dip_width <= 0:
            raise ValueError("dip_width must be positive")
        if self.dip_phase_jitter < 0 or self.noise < 0:
            raise ValueError("dip_phase_jitter and noise must be >= 0")
        object.__setattr__(
            self, "block_offsets",
            _per_block(self.block_offsets, self.blocks, "block_offsets"))
        object.__setattr__(
            self, "dip_depth",
            _per_block(self.dip_depth, self.blocks, "dip_depth"))
        object.__setattr__(
            self, "dip_phase_offsets",
            _per_block(self.dip_phase_offsets, self.blocks,
                       "dip_phase_offsets"))
        if any(d < 0 for d in self.dip_depth):
            raise ValueError("dip_depth must be >= 0")


def _make_series(spec: GenSpec, block: int, layer: int) -> TimeSeries:
    rng = CounterRng(derive_key(spec.seed, block, layer))
    u = rng.uniforms(1 + DIPS_PER_SERIES)
    jitter_span = spec.length_jitter * spec.base_length
    n = int(round(spec.base_length + jitter_span * (2.0 * u[0] - 1.0)))
    n = max(_MIN_LENGTH, n)

    depth = spec.dip_depth[block]
    trend = 0.0
    if spec.layers > 1:
        trend = spec.layer_trend * layer / (spec.layers - 1)
    # Add back the mean the dips will remove.
    dip_area = DIPS_PER_SERIES * depth * spec.dip_width * math.sqrt(2 * math.pi)
    baseline = spec.base_level + spec.block_offsets[block] + trend + dip_area

    t = (np.arange(n, dtype=np.float64) + 0.5) / n
    values = np.full(n, baseline)
    phase0 = spec.dip_phase_offsets[block]
    for d in range(DIPS_PER_SERIES):
        center = (d + 0.5) / DIPS_PER_SERIES + phase0 \
            + spec.dip_phase_jitter * (2.0 * u[1 + d] - 1.0)
        z = (t - center) / spec.dip_width
        values -= depth * np.exp(-0.5 * z * z)
    if spec.noise > 0:
        values += spec.noise * rng.normals(n)
    return TimeSeries(values)


def generate(spec: GenSpec) -> LabeledDataset:
    """Generate blocks x layers records, bit-identical for a given seed."""
    records = []
    for block in range(spec.blocks):
        label = f"blk{block}"
        for layer in range(spec.layers):
            records.append(SeriesRecord(
                _make_series(spec, block, layer), label, block, layer
            ))
    return LabeledDataset(tuple(records))
