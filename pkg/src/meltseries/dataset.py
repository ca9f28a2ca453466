"""Core dataset model: immutable time series, labeled records, text file I/O.

One record is one perimeter scan of one block at one layer. The on-disk
format is line-oriented UTF-8 text, one record per line::

    <label>;<block_id>;<layer_index>;<v1>,<v2>,...,<vn>

with ``.`` as the decimal separator, LF line endings and no header. Lines
starting with ``#`` are comments. Sample values are written with ``repr``
so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class DatasetFormatError(ValueError):
    """Raised when a dataset file does not conform to the text format."""


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """One scan: an ordered, immutable sequence of finite real samples."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if arr.shape[0] < 1:
            raise ValueError("series must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series contains non-finite samples")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class SeriesRecord:
    """A series plus its class label, block id and layer index."""

    series: TimeSeries
    label: str
    block_id: int
    layer_index: int

    def __post_init__(self):
        if not self.label:
            raise ValueError("record label must be nonempty")
        if self.block_id < 0:
            raise ValueError("block_id must be nonnegative")
        if self.layer_index < 0:
            raise ValueError("layer_index must be nonnegative")

    @property
    def uid(self) -> tuple[int, int]:
        """(block_id, layer_index) pair, unique within a dataset."""
        return (self.block_id, self.layer_index)


@dataclass(frozen=True)
class LabeledDataset:
    """Ordered collection of records; immutable after construction."""

    records: tuple[SeriesRecord, ...]
    class_set: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        object.__setattr__(
            self, "class_set", tuple(sorted({r.label for r in records}))
        )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def blocks(self) -> tuple[int, ...]:
        return tuple(sorted({r.block_id for r in self.records}))


def _parse_line(line: str, lineno: int) -> SeriesRecord:
    parts = line.split(";")
    if len(parts) != 4:
        raise DatasetFormatError(
            f"line {lineno}: expected 4 ';'-separated fields, got {len(parts)}"
        )
    label, block_text, layer_text, values_text = parts
    if not label:
        raise DatasetFormatError(f"line {lineno}: empty label")
    try:
        block_id = int(block_text)
        layer_index = int(layer_text)
    except ValueError:
        raise DatasetFormatError(
            f"line {lineno}: block_id/layer_index must be integers"
        ) from None
    tokens = values_text.split(",") if values_text else []
    if not tokens or tokens == [""]:
        raise DatasetFormatError(f"line {lineno}: empty series")
    samples = np.empty(len(tokens), dtype=np.float64)
    for i, tok in enumerate(tokens):
        try:
            samples[i] = float(tok)
        except ValueError:
            raise DatasetFormatError(
                f"line {lineno}: non-numeric sample {tok!r}"
            ) from None
    if not np.all(np.isfinite(samples)):
        raise DatasetFormatError(f"line {lineno}: non-finite sample value")
    try:
        return SeriesRecord(TimeSeries(samples), label, block_id, layer_index)
    except ValueError as exc:
        raise DatasetFormatError(f"line {lineno}: {exc}") from None


def load_dataset(path: str | os.PathLike) -> LabeledDataset:
    """Load a dataset file, preserving record and sample order.

    Raises DatasetFormatError on malformed lines (with the line number),
    duplicate (block_id, layer_index) pairs, or an empty file.
    """
    records: list[SeriesRecord] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line or line.startswith("#"):
                continue
            rec = _parse_line(line, lineno)
            if rec.uid in seen:
                raise DatasetFormatError(
                    f"line {lineno}: duplicate (block_id, layer_index) pair "
                    f"{rec.uid}"
                )
            seen.add(rec.uid)
            records.append(rec)
    if not records:
        raise DatasetFormatError(f"{path}: no records")
    return LabeledDataset(tuple(records))


def format_record(rec: SeriesRecord) -> str:
    """One dataset line for `rec`; repr() keeps floats round-trip exact."""
    values = ",".join(repr(float(v)) for v in rec.series.values)
    return f"{rec.label};{rec.block_id};{rec.layer_index};{values}"


def save_dataset(ds: LabeledDataset, path: str | os.PathLike) -> None:
    """Write `ds` so that load_dataset(path) reproduces it exactly.

    Writes to a temporary file and renames it into place, so a failed
    write never leaves a partial dataset behind.
    """
    for rec in ds.records:
        if not np.all(np.isfinite(rec.series.values)):
            raise ValueError(
                f"record {rec.uid}: non-finite sample, refusing to save"
            )
    tmp_path = f"{os.fspath(path)}.tmp"
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in ds.records:
            fh.write(format_record(rec))
            fh.write("\n")
    os.replace(tmp_path, path)
