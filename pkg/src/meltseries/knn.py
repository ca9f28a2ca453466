"""k-nearest-neighbor classification over any DistanceSpec, plus CV tuning.

Tie-breaking is fully deterministic: equal distances are broken by
training-record index, equal label votes by the smaller summed distance
among the tied labels, then by lexicographic label order. Distance-matrix
cells are independent, so rows may be evaluated concurrently; results are
placed by index, which keeps every output identical regardless of the
worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import SeriesRecord, TimeSeries
from .distances import DistanceSpec, make_engine


@dataclass(frozen=True)
class Neighbor:
    """One entry of a prediction's neighbor list."""

    train_index: int
    uid: tuple[int, int]
    label: str
    distance: float


@dataclass
class KnnModel:
    """A fitted classifier: engine plus prepared training representations."""

    records: tuple[SeriesRecord, ...]
    k: int
    spec: DistanceSpec
    engine: object
    prepared: tuple


@dataclass(frozen=True)
class CandidateResult:
    """One grid candidate's cross-validation outcome."""

    spec: DistanceSpec
    k: int
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float


@dataclass(frozen=True)
class GridSearchResult:
    best: CandidateResult
    candidates: tuple[CandidateResult, ...]
    fold_assignment: np.ndarray


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        return max(1, os.cpu_count() or 1)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def _cell(engine, query_prep, ref_prep, query_id, ref_record: SeriesRecord
          ) -> float:
    try:
        return engine.distance(query_prep, ref_prep)
    except Exception as exc:
        raise ValueError(
            f"distance evaluation failed between query {query_id} and "
            f"training record {ref_record.uid}: {exc}"
        ) from exc


def distance_matrix(engine, query_preps: Sequence, query_ids: Sequence,
                    ref_preps: Sequence, ref_records: Sequence[SeriesRecord],
                    workers: int | None = None) -> np.ndarray:
    """Pairwise distances, queries by rows; deterministic at any worker count."""
    n_workers = _resolve_workers(workers)
    out = np.empty((len(query_preps), len(ref_preps)), dtype=np.float64)

    def fill_row(qi: int) -> None:
        qp = query_preps[qi]
        qid = query_ids[qi]
        row = out[qi]
        for ri in range(len(ref_preps)):
            row[ri] = _cell(engine, qp, ref_preps[ri], qid, ref_records[ri])

    if n_workers == 1 or len(query_preps) <= 1:
        for qi in range(len(query_preps)):
            fill_row(qi)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(fill_row, range(len(query_preps))))
    return out


def _vote(order: np.ndarray, distances: np.ndarray,
          labels: Sequence[str], k: int) -> str:
    """Majority label among the k nearest, with deterministic tie-breaking."""
    top = order[:k]
    counts: dict[str, int] = {}
    sums: dict[str, float] = {}
    for idx in top:
        lab = labels[idx]
        counts[lab] = counts.get(lab, 0) + 1
        sums[lab] = sums.get(lab, 0.0) + float(distances[idx])
    best_votes = max(counts.values())
    tied = [lab for lab, c in counts.items() if c == best_votes]
    if len(tied) == 1:
        return tied[0]
    return min(tied, key=lambda lab: (sums[lab], lab))


def knn_fit(records: Sequence[SeriesRecord], k: int,
            spec: DistanceSpec) -> KnnModel:
    """Prepare a k-NN model: fit the engine, precompute representations."""
    records = tuple(records)
    if not records:
        raise ValueError("training set must be nonempty")
    if k < 1 or k > len(records):
        raise ValueError(
            f"k must lie in [1, {len(records)}], got {k}"
        )
    engine = make_engine(spec)
    engine.fit([r.series for r in records])
    prepared = tuple(engine.prepare(r.series) for r in records)
    return KnnModel(records, k, spec, engine, prepared)


def _predict_from_row(model: KnnModel, row: np.ndarray
                      ) -> tuple[str, tuple[Neighbor, ...]]:
    order = np.argsort(row, kind="stable")
    labels = [r.label for r in model.records]
    label = _vote(order, row, labels, model.k)
    neighbors = tuple(
        Neighbor(int(i), model.records[i].uid, model.records[i].label,
                 float(row[i]))
        for i in order[:model.k]
    )
    return label, neighbors


def knn_predict(model: KnnModel, query: TimeSeries
                ) -> tuple[str, tuple[Neighbor, ...]]:
    """Predict one query; returns (label, k nearest in ascending order)."""
    labels, neighbor_lists = knn_predict_batch(model, [query])
    return labels[0], neighbor_lists[0]


def knn_predict_batch(model: KnnModel, queries: Sequence[TimeSeries],
                      query_ids: Sequence | None = None,
                      workers: int | None = None
                      ) -> tuple[list[str], list[tuple[Neighbor, ...]]]:
    """Predict many queries against one model."""
    if query_ids is None:
        query_ids = [f"query[{i}]" for i in range(len(queries))]
    preps = [model.engine.prepare(q) for q in queries]
    matrix = distance_matrix(model.engine, preps, query_ids, model.prepared,
                             model.records, workers)
    labels: list[str] = []
    neighbor_lists: list[tuple[Neighbor, ...]] = []
    for qi in range(len(queries)):
        label, neighbors = _predict_from_row(model, matrix[qi])
        labels.append(label)
        neighbor_lists.append(neighbors)
    return labels, neighbor_lists


def tune(records: Sequence[SeriesRecord], fold_assignment: np.ndarray,
         grid: Sequence[DistanceSpec], k_grid: Sequence[int] = (1, 3, 5),
         workers: int | None = None,
         touched: set | None = None) -> GridSearchResult:
    """Cross-validate every (spec, k) candidate and return the best.

    For each spec the per-fold distance matrix is computed once and reused
    across the whole k grid. The best candidate is the first one attaining
    the maximum mean accuracy, in grid order, so results are deterministic
    given the dataset and grid order.
    """
    records = tuple(records)
    folds = np.asarray(fold_assignment)
    if folds.shape[0] != len(records):
        raise ValueError("fold assignment length does not match records")
    if not grid:
        raise ValueError("parameter grid must be nonempty")
    if not k_grid:
        raise ValueError("k grid must be nonempty")
    if touched is not None:
        touched.update(r.uid for r in records)

    fold_ids = sorted(set(folds.tolist()))
    labels = [r.label for r in records]
    splits = []
    for f in fold_ids:
        val_idx = np.flatnonzero(folds == f)
        train_idx = np.flatnonzero(folds != f)
        train_classes = {labels[i] for i in train_idx}
        if len(train_classes) < 2:
            raise ValueError(
                f"fold {f}: training part has a single class; "
                "classification needs at least two"
            )
        splits.append((train_idx, val_idx))
    min_train = min(len(t) for t, _ in splits)
    for k in k_grid:
        if k < 1 or k > min_train:
            raise ValueError(
                f"k={k} is invalid for folds with {min_train} training "
                "records"
            )

    candidates: list[CandidateResult] = []
    for spec in grid:
        fold_hits: dict[int, list[int]] = {k: [] for k in k_grid}
        fold_sizes: list[int] = []
        for train_idx, val_idx in splits:
            engine = make_engine(spec)
            engine.fit([records[i].series for i in train_idx])
            train_preps = [engine.prepare(records[i].series)
                           for i in train_idx]
            val_preps = [engine.prepare(records[i].series) for i in val_idx]
            matrix = distance_matrix(
                engine, val_preps, [records[i].uid for i in val_idx],
                train_preps, [records[i] for i in train_idx], workers,
            )
            fold_labels = [labels[i] for i in train_idx]
            fold_sizes.append(len(val_idx))
            orders = [np.argsort(matrix[v], kind="stable")
                      for v in range(len(val_idx))]
            for k in k_grid:
                hits = 0
                for v in range(len(val_idx)):
                    pred = _vote(orders[v], matrix[v], fold_labels, k)
                    if pred == labels[val_idx[v]]:
                        hits += 1
                fold_hits[k].append(hits)
        for k in k_grid:
            accs = tuple(
                h / s for h, s in zip(fold_hits[k], fold_sizes)
            )
            candidates.append(
                CandidateResult(spec, k, accs, float(np.mean(accs)))
            )

    best = candidates[0]
    for cand in candidates[1:]:
        if cand.mean_accuracy > best.mean_accuracy:
            best = cand
    assignment = folds.copy()
    assignment.setflags(write=False)
    return GridSearchResult(best, tuple(candidates), assignment)
