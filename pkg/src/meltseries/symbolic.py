"""Symbolic series representations: SAX and SFA with bag-of-words output.

SAX discretizes PAA segment means against equiprobable standard-normal
breakpoints; SFA discretizes truncated Fourier coefficients against
per-position thresholds learned from training data (multiple coefficient
binning). Both slide a stride-1 window over the series and collect the
per-window words into a bag; runs of consecutive identical words can be
collapsed to a single occurrence (numerosity reduction).

Symbols are lowercase letters, so alphabets are capped at 26. Interval
convention throughout: left-closed, right-open, and a value exactly on a
threshold goes to the upper bin.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .dataset import TimeSeries
from .preprocess import _paa_block, _znorm_rows

_MAX_ALPHABET = 26


def _check_alphabet(a: int) -> None:
    if a < 2:
        raise ValueError("alphabet size must be >= 2")
    if a > _MAX_ALPHABET:
        raise ValueError(f"alphabet size must be <= {_MAX_ALPHABET}")


@dataclass(frozen=True)
class SaxSpec:
    """SAX configuration: alphabet, word length, sliding-window size."""

    alphabet_size: int
    word_length: int
    window_size: int
    per_window_znorm: bool = True
    numerosity_reduction: bool = True

    def __post_init__(self):
        _check_alphabet(self.alphabet_size)
        if self.word_length < 1:
            raise ValueError("word length must be >= 1")
        if self.window_size < self.word_length:
            raise ValueError("window size must be >= word length")

    def key(self) -> str:
        return (
            f"sax:a={self.alphabet_size},w={self.word_length},"
            f"win={self.window_size},zn={int(self.per_window_znorm)},"
            f"nr={int(self.numerosity_reduction)}"
        )


@dataclass(frozen=True)
class SfaSpec:
    """SFA configuration: alphabet, retained coefficient count, window size.

    coeff_count counts retained real numbers of the interleaved
    (Re, Im) coefficient sequence, not complex bins.
    """

    alphabet_size: int
    coeff_count: int
    window_size: int
    per_window_znorm: bool = True
    numerosity_reduction: bool = True

    def __post_init__(self):
        _check_alphabet(self.alphabet_size)
        if self.coeff_count < 1:
            raise ValueError("coefficient count must be >= 1")
        if self.window_size < 4:
            raise ValueError("window size must be >= 4")
        # the DC term is dropped under per-window z-normalization, which
        # costs one usable component (and odd windows lack a Nyquist bin)
        available = 2 * (self.window_size // 2) \
            + (0 if self.per_window_znorm else 1)
        if self.coeff_count > min(self.window_size, available):
            raise ValueError(
                f"coefficient count {self.coeff_count} exceeds the "
                f"{min(self.window_size, available)} components a window "
                f"of {self.window_size} samples provides"
            )

    def key(self) -> str:
        return (
            f"sfa:a={self.alphabet_size},l={self.coeff_count},"
            f"win={self.window_size},zn={int(self.per_window_znorm)},"
            f"nr={int(self.numerosity_reduction)}"
        )


@dataclass(frozen=True)
class McbModel:
    """Per-position discretization thresholds learned from training windows."""

    thresholds: tuple[np.ndarray, ...]
    alphabet_size: int

    def __post_init__(self):
        frozen = []
        for t in self.thresholds:
            arr = np.asarray(t, dtype=np.float64).copy()
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "thresholds", tuple(frozen))

    @property
    def n_positions(self) -> int:
        return len(self.thresholds)

    def fingerprint(self) -> str:
        h = hashlib.md5()
        for t in self.thresholds:
            h.update(t.tobytes())
        return h.hexdigest()[:12]


@dataclass(frozen=True)
class SymbolicDoc:
    """Bag of fixed-length words produced from one series."""

    counts: dict[str, int]
    word_length: int
    source_length: int
    spec_key: str = field(default="")

    def total_words(self) -> int:
        return sum(self.counts.values())

    def to_text(self) -> str:
        """Debug serialization: sorted `word:count` lines."""
        return "\n".join(f"{w}:{c}" for w, c in sorted(self.counts.items()))


@lru_cache(maxsize=None)
def _breakpoints_cached(a: int) -> np.ndarray:
    arr = stats.norm.ppf(np.arange(1, a) / a)
    arr.setflags(write=False)
    return arr


def gaussian_breakpoints(a: int) -> np.ndarray:
    """The a-1 thresholds splitting N(0,1) into a equal-probability bins."""
    if a < 2:
        raise ValueError("alphabet size must be >= 2")
    return _breakpoints_cached(a)


def _words_from_indices(idx: np.ndarray) -> list[str]:
    letters = (idx + ord("a")).astype(np.uint8)
    return [row.tobytes().decode("ascii") for row in letters]


def _collapse_runs(words: list[str]) -> list[str]:
    return [w for i, w in enumerate(words) if i == 0 or w != words[i - 1]]


def _bag(words: list[str], word_length: int, source_length: int,
         spec_key: str, numerosity_reduction: bool) -> SymbolicDoc:
    if numerosity_reduction:
        words = _collapse_runs(words)
    return SymbolicDoc(dict(Counter(words)), word_length, source_length,
                       spec_key)


def _windows(values: np.ndarray, window: int) -> np.ndarray:
    if values.shape[0] < window:
        raise ValueError(
            f"series of length {values.shape[0]} shorter than window "
            f"{window}"
        )
    return np.ascontiguousarray(sliding_window_view(values, window))


def _sax_indices(mat: np.ndarray, spec: SaxSpec) -> np.ndarray:
    if spec.per_window_znorm:
        mat = _znorm_rows(mat)
    segments = _paa_block(mat, spec.word_length)
    bp = gaussian_breakpoints(spec.alphabet_size)
    return np.searchsorted(bp, segments.ravel(), side="right").reshape(
        segments.shape
    )


def sax_symbolize(s: TimeSeries, spec: SaxSpec) -> str:
    """Whole-series SAX word: optional z-norm, PAA to word_length, symbols."""
    if len(s) < spec.word_length:
        raise ValueError("series shorter than the SAX word length")
    idx = _sax_indices(s.values[np.newaxis, :], spec)
    return _words_from_indices(idx)[0]


def sax_bag_of_words(s: TimeSeries, spec: SaxSpec) -> SymbolicDoc:
    """Stride-1 sliding-window SAX transform of the series into a bag."""
    mat = _windows(s.values, spec.window_size)
    idx = _sax_indices(mat, spec)
    return _bag(_words_from_indices(idx), spec.word_length, len(s),
                spec.key(), spec.numerosity_reduction)


def _dft_components(mat: np.ndarray, count: int, drop_dc: bool) -> np.ndarray:
    """First `count` reals of the per-row DFT component sequence.

    The sequence is [Re F0] (dropped when drop_dc) followed by the
    interleaved (Re Fk, Im Fk) pairs for k = 1, 2, ... in frequency order.
    """
    n = mat.shape[1]
    spectrum = np.fft.rfft(mat, axis=1)
    pairs = spectrum.shape[1] - 1
    total = (0 if drop_dc else 1) + 2 * pairs
    if count > total:
        raise ValueError(
            f"requested {count} coefficients but only {total} are available "
            f"for window length {n}"
        )
    comps = np.empty((mat.shape[0], total), dtype=np.float64)
    base = 0
    if not drop_dc:
        comps[:, 0] = spectrum.real[:, 0]
        base = 1
    comps[:, base::2] = spectrum.real[:, 1:]
    comps[:, base + 1::2] = spectrum.imag[:, 1:]
    return comps[:, :count]


def dft_coefficients(s: TimeSeries, l: int, drop_dc: bool = False
                     ) -> np.ndarray:
    """Truncated DFT of the series as its first l real components.

    Matches the direct summation F(w_k) = sum_n s[n] * exp(-2j*pi*k*n/N)
    with the components laid out lowest frequency first.
    """
    n = len(s)
    if n < 2:
        raise ValueError("DFT needs at least 2 samples")
    if l < 1:
        raise ValueError("coefficient count must be >= 1")
    if l > n:
        raise ValueError(f"coefficient count {l} exceeds series length {n}")
    return _dft_components(s.values[np.newaxis, :], l, drop_dc)[0]


def sfa_window_coefficients(s: TimeSeries, spec: SfaSpec) -> np.ndarray:
    """Per-window truncated DFT coefficient vectors (MCB training input).

    One row per stride-1 window position. The DC component is dropped when
    per-window z-normalization is on, since it is then identically ~0.
    """
    mat = _windows(s.values, spec.window_size)
    if spec.per_window_znorm:
        mat = _znorm_rows(mat)
    return _dft_components(mat, spec.coeff_count, spec.per_window_znorm)


def sfa_whole_series_coefficients(s: TimeSeries, spec: SfaSpec) -> np.ndarray:
    """Truncated DFT coefficient vector of the whole series (word mode)."""
    if len(s) < max(2, spec.coeff_count):
        raise ValueError("series too short for the configured coefficients")
    mat = s.values[np.newaxis, :]
    if spec.per_window_znorm:
        mat = _znorm_rows(mat)
    return _dft_components(mat, spec.coeff_count, spec.per_window_znorm)[0]


def mcb_train(training_windows: np.ndarray, a: int) -> McbModel:
    """Learn equi-depth thresholds per coefficient position.

    ``training_windows`` is (n_samples, n_positions). Each position gets
    a-1 thresholds at the i/a equi-depth quantiles of its training values,
    with the midpoint convention when a quantile falls exactly between two
    order statistics.
    """
    _check_alphabet(a)
    vals = np.asarray(training_windows, dtype=np.float64)
    if vals.ndim != 2:
        raise ValueError("training windows must be a 2D array")
    n_samples = vals.shape[0]
    if n_samples < a:
        raise ValueError(
            f"need at least {a} training values per position, got {n_samples}"
        )
    ordered = np.sort(vals, axis=0)
    thresholds = []
    for p in range(vals.shape[1]):
        col = ordered[:, p]
        cuts = np.empty(a - 1, dtype=np.float64)
        for i in range(1, a):
            num = i * n_samples
            if num % a == 0:
                pos = num // a
                cuts[i - 1] = 0.5 * (col[pos - 1] + col[pos])
            else:
                cuts[i - 1] = col[num // a]
        thresholds.append(cuts)
    return McbModel(tuple(thresholds), a)


def _mcb_indices(comps: np.ndarray, model: McbModel) -> np.ndarray:
    idx = np.empty(comps.shape, dtype=np.int64)
    for p, cuts in enumerate(model.thresholds):
        idx[:, p] = np.searchsorted(cuts, comps[:, p], side="right")
    return idx


def _check_mcb(spec: SfaSpec, model: McbModel) -> None:
    if model.n_positions != spec.coeff_count:
        raise ValueError(
            f"MCB model has {model.n_positions} positions but the spec "
            f"retains {spec.coeff_count} coefficients"
        )
    if model.alphabet_size != spec.alphabet_size:
        raise ValueError(
            f"MCB model alphabet {model.alphabet_size} does not match the "
            f"spec alphabet {spec.alphabet_size}"
        )


def sfa_bag_of_words(s: TimeSeries, spec: SfaSpec,
                     model: McbModel) -> SymbolicDoc:
    """Sliding-window SFA transform against a trained MCB model."""
    _check_mcb(spec, model)
    comps = sfa_window_coefficients(s, spec)
    idx = _mcb_indices(comps, model)
    key = f"{spec.key()},mcb={model.fingerprint()}"
    return _bag(_words_from_indices(idx), spec.coeff_count, len(s), key,
                spec.numerosity_reduction)


def sfa_word(s: TimeSeries, spec: SfaSpec, model: McbModel) -> str:
    """Single SFA word for the whole series (no sliding window)."""
    _check_mcb(spec, model)
    comps = sfa_whole_series_coefficients(s, spec)[np.newaxis, :]
    return _words_from_indices(_mcb_indices(comps, model))[0]


def levenshtein(w1: str, w2: str) -> int:
    """Minimum single-symbol insert/delete/substitute edits from w1 to w2."""
    if len(w1) < len(w2):
        w1, w2 = w2, w1
    if not w2:
        return len(w1)
    previous = list(range(len(w2) + 1))
    for i, c1 in enumerate(w1, start=1):
        current = [i] + [0] * len(w2)
        for j, c2 in enumerate(w2, start=1):
            current[j] = min(
                previous[j] + 1,          # delete
                current[j - 1] + 1,       # insert
                previous[j - 1] + (c1 != c2),  # substitute / match
            )
        previous = current
    return previous[-1]


def bag_distance(d1: SymbolicDoc, d2: SymbolicDoc) -> float:
    """Euclidean distance between word-count histograms."""
    if d1.spec_key != d2.spec_key:
        raise ValueError(
            f"documents built with different specs: {d1.spec_key!r} vs "
            f"{d2.spec_key!r}"
        )
    total = 0
    for w in sorted(set(d1.counts) | set(d2.counts)):
        diff = d1.counts.get(w, 0) - d2.counts.get(w, 0)
        total += diff * diff
    return float(np.sqrt(total))


def sax_mindist(s1: TimeSeries, s2: TimeSeries, spec: SaxSpec) -> float:
    """SAX lower-bounding distance between two equal-length series.

    Both series are z-normalized, reduced with PAA to word_length and
    symbolized whole (no sliding window); the cell distance between
    identical or adjacent symbols is zero, otherwise the gap between the
    breakpoints separating them.
    """
    n = len(s1)
    if n != len(s2):
        raise ValueError("sax_mindist requires equal-length series")
    if n < spec.word_length:
        raise ValueError("series shorter than the SAX word length")
    whole = SaxSpec(
        alphabet_size=spec.alphabet_size,
        word_length=spec.word_length,
        window_size=max(spec.window_size, spec.word_length),
        per_window_znorm=True,
        numerosity_reduction=False,
    )
    pair = np.vstack([s1.values, s2.values])
    idx = _sax_indices(pair, whole)
    r = np.minimum(idx[0], idx[1])
    c = np.maximum(idx[0], idx[1])
    bp = gaussian_breakpoints(spec.alphabet_size)
    top = spec.alphabet_size - 2  # last valid breakpoint index
    upper = bp[np.clip(c - 1, 0, top)]
    lower = bp[np.minimum(r, top)]
    gap = np.where(c - r > 1, upper - lower, 0.0)
    return float(np.sqrt(n / spec.word_length) * np.sqrt(np.sum(gap * gap)))
