"""Configured distance functions: one spec type, one engine per kind.

A DistanceSpec names a distance family and carries its hyperparameters;
an engine turns records into prepared representations once (resampled
arrays, symbol bags, trained MCB models) so the k-NN layer can evaluate
many pairs cheaply. Engines for SFA must be fitted on training series
before preparing anything; fitting anywhere else would leak test data
into the MCB thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .dataset import TimeSeries
from .elastic import DtwSpec, band_geometry, dtw_distance
from .preprocess import resample_linear
from .symbolic import (McbModel, SaxSpec, SfaSpec, bag_distance, levenshtein,
                       mcb_train, sax_bag_of_words, sax_symbolize,
                       sfa_bag_of_words, sfa_whole_series_coefficients,
                       sfa_window_coefficients, sfa_word)

DISTANCE_KINDS = ("mean", "euclidean", "dtw", "sax", "sfa")
WORD_METRICS = ("bag", "word")


@dataclass(frozen=True)
class DistanceSpec:
    """A distance kind plus the hyperparameters that kind requires.

    word_metric selects, for the symbolic kinds, between the bag-of-words
    histogram distance and whole-series single-word Levenshtein.
    """

    kind: str
    dtw: DtwSpec | None = None
    sax: SaxSpec | None = None
    sfa: SfaSpec | None = None
    common_length: int | None = None
    word_metric: str = "bag"

    def __post_init__(self):
        if self.kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.kind == "dtw" and self.dtw is None:
            raise ValueError("dtw distance requires a DtwSpec")
        if self.kind == "sax" and self.sax is None:
            raise ValueError("sax distance requires a SaxSpec")
        if self.kind == "sfa" and self.sfa is None:
            raise ValueError("sfa distance requires an SfaSpec")
        if self.word_metric not in WORD_METRICS:
            raise ValueError(f"unknown word metric {self.word_metric!r}")
        if self.common_length is not None and self.common_length < 2:
            raise ValueError("common_length must be >= 2")

    def describe(self) -> str:
        """Short parameter summary for reports."""
        if self.kind == "mean":
            return "mean"
        if self.kind == "euclidean":
            length = "auto" if self.common_length is None \
                else str(self.common_length)
            return f"euclidean(len={length})"
        if self.kind == "dtw":
            return f"dtw(band={self.dtw.band_fraction:g})"
        if self.kind == "sax":
            s = self.sax
            return (f"sax(a={s.alphabet_size},w={s.word_length},"
                    f"win={s.window_size},{self.word_metric})")
        s = self.sfa
        return (f"sfa(a={s.alphabet_size},l={s.coeff_count},"
                f"win={s.window_size},{self.word_metric})")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "euclidean":
            out["common_length"] = self.common_length
        elif self.kind == "dtw":
            out["band_fraction"] = self.dtw.band_fraction
        elif self.kind in ("sax", "sfa"):
            sub = self.sax if self.kind == "sax" else self.sfa
            out["alphabet_size"] = sub.alphabet_size
            out["window_size"] = sub.window_size
            out["per_window_znorm"] = sub.per_window_znorm
            out["numerosity_reduction"] = sub.numerosity_reduction
            out["metric"] = self.word_metric
            if self.kind == "sax":
                out["word_length"] = sub.word_length
            else:
                out["coeff_count"] = sub.coeff_count
        return out

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "DistanceSpec":
        kind = data.get("kind")
        if kind == "mean":
            return mean_spec()
        if kind == "euclidean":
            return euclidean_spec(data.get("common_length"))
        if kind == "dtw":
            return dtw_spec(data["band_fraction"])
        if kind == "sax":
            return sax_spec(
                SaxSpec(
                    alphabet_size=data["alphabet_size"],
                    word_length=data["word_length"],
                    window_size=data["window_size"],
                    per_window_znorm=data.get("per_window_znorm", True),
                    numerosity_reduction=data.get("numerosity_reduction",
                                                  True),
                ),
                metric=data.get("metric", "bag"),
            )
        if kind == "sfa":
            return sfa_spec(
                SfaSpec(
                    alphabet_size=data["alphabet_size"],
                    coeff_count=data["coeff_count"],
                    window_size=data["window_size"],
                    per_window_znorm=data.get("per_window_znorm", True),
                    numerosity_reduction=data.get("numerosity_reduction",
                                                  True),
                ),
                metric=data.get("metric", "bag"),
            )
        raise ValueError(f"unknown distance kind {kind!r}")


def mean_spec() -> DistanceSpec:
    return DistanceSpec(kind="mean")


def euclidean_spec(common_length: int | None = None) -> DistanceSpec:
    return DistanceSpec(kind="euclidean", common_length=common_length)


def dtw_spec(band_fraction: float) -> DistanceSpec:
    return DistanceSpec(kind="dtw", dtw=DtwSpec(band_fraction))


def sax_spec(spec: SaxSpec, metric: str = "bag") -> DistanceSpec:
    return DistanceSpec(kind="sax", sax=spec, word_metric=metric)


def sfa_spec(spec: SfaSpec, metric: str = "bag") -> DistanceSpec:
    return DistanceSpec(kind="sfa", sfa=spec, word_metric=metric)


class _MeanEngine:
    needs_fit = False

    def fit(self, train: Sequence[TimeSeries]) -> None:
        pass

    def prepare(self, series: TimeSeries) -> float:
        return float(series.values.mean())

    def distance(self, a: float, b: float) -> float:
        return abs(a - b)

    def notes(self) -> tuple[str, ...]:
        return ()


class _EuclideanEngine:
    needs_fit = True

    def __init__(self, common_length: int | None):
        self._configured = common_length
        self.common_length = common_length

    def fit(self, train: Sequence[TimeSeries]) -> None:
        if self._configured is not None:
            self.common_length = self._configured
            return
        mean_len = float(np.mean([len(s) for s in train]))
        self.common_length = max(2, int(round(mean_len)))

    def prepare(self, series: TimeSeries) -> np.ndarray:
        if self.common_length is None:
            raise ValueError("euclidean engine used before fitting")
        if len(series) == self.common_length:
            return series.values
        return resample_linear(series, self.common_length).values

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        diff = a - b
        return float(np.sqrt(np.dot(diff, diff)))

    def notes(self) -> tuple[str, ...]:
        return ()


class _DtwEngine:
    needs_fit = False

    def __init__(self, spec: DtwSpec):
        self.spec = spec
        self._widened = False
        self._seen_lengths: set[tuple[int, int]] = set()

    def fit(self, train: Sequence[TimeSeries]) -> None:
        pass

    def prepare(self, series: TimeSeries) -> TimeSeries:
        return series

    def distance(self, a: TimeSeries, b: TimeSeries) -> float:
        key = (len(a), len(b))
        if key not in self._seen_lengths:
            self._seen_lengths.add(key)
            if band_geometry(key[0], key[1], self.spec).widened:
                self._widened = True
        return dtw_distance(a, b, self.spec)

    def notes(self) -> tuple[str, ...]:
        if self._widened:
            return ("sakoe-chiba band widened to the feasibility minimum "
                    "for some length pairs",)
        return ()


class _SaxEngine:
    needs_fit = False

    def __init__(self, spec: SaxSpec, metric: str):
        self.spec = spec
        self.metric = metric

    def fit(self, train: Sequence[TimeSeries]) -> None:
        pass

    def prepare(self, series: TimeSeries):
        if self.metric == "word":
            return sax_symbolize(series, self.spec)
        return sax_bag_of_words(series, self.spec)

    def distance(self, a, b) -> float:
        if self.metric == "word":
            return float(levenshtein(a, b))
        return bag_distance(a, b)

    def notes(self) -> tuple[str, ...]:
        return ()


class _SfaEngine:
    needs_fit = True

    def __init__(self, spec: SfaSpec, metric: str):
        self.spec = spec
        self.metric = metric
        self.model: McbModel | None = None

    def fit(self, train: Sequence[TimeSeries]) -> None:
        if self.metric == "word":
            rows = np.vstack(
                [sfa_whole_series_coefficients(s, self.spec) for s in train]
            )
        else:
            rows = np.vstack(
                [sfa_window_coefficients(s, self.spec) for s in train]
            )
        self.model = mcb_train(rows, self.spec.alphabet_size)

    def prepare(self, series: TimeSeries):
        if self.model is None:
            raise ValueError("sfa engine used before MCB training")
        if self.metric == "word":
            return sfa_word(series, self.spec, self.model)
        return sfa_bag_of_words(series, self.spec, self.model)

    def distance(self, a, b) -> float:
        if self.metric == "word":
            return float(levenshtein(a, b))
        return bag_distance(a, b)

    def notes(self) -> tuple[str, ...]:
        return ()


def make_engine(spec: DistanceSpec):
    """Fresh engine for the given spec; SFA engines still need fitting."""
    if spec.kind == "mean":
        return _MeanEngine()
    if spec.kind == "euclidean":
        return _EuclideanEngine(spec.common_length)
    if spec.kind == "dtw":
        return _DtwEngine(spec.dtw)
    if spec.kind == "sax":
        return _SaxEngine(spec.sax, spec.word_metric)
    return _SfaEngine(spec.sfa, spec.word_metric)
