"""Experimental protocols and accuracy reporting.

Two task families are supported. Block-identity tasks ("up_down") train on
the bottom layers of each selected block and hold out the top layers.
Layer-position tasks ("high_low") relabel the bottom and top layer bands
of every block as "low"/"high" and hold out whole blocks for testing.
Defaults mirror the 250-layer, 27-block build: 212 train / 38 test layers
per block for block identity, 10-layer bands with 8 held-out blocks for
layer position; both are configurable so the same protocol runs on
desk-scale synthetic datasets.

Cross-validation folds are contiguous layer runs within each block:
adjacent layers are near-duplicates, so shuffled folds would leak.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import LabeledDataset, SeriesRecord
from .knn import Neighbor, knn_fit, knn_predict_batch, tune
from .preprocess import ButterworthSpec, butterworth_filter
from .distances import DistanceSpec

MODEL_ORDER = ("mean", "euclidean", "dtw", "sax", "sfa")
MODEL_DISPLAY = {
    "mean": "Mean",
    "euclidean": "Euclidean",
    "dtw": "DTW",
    "sax": "SAX",
    "sfa": "SFA",
}
DEFAULT_HOLDOUT_BLOCKS = (3, 7, 10, 14, 17, 21, 24, 26)

TASK_KINDS = ("up_down", "high_low")
VARIANTS = ("raw", "filtered")


class TaskError(RuntimeError):
    """A task failed; the message carries the task context."""


@dataclass(frozen=True)
class TaskSpec:
    """One classification task: what to classify and how to split."""

    kind: str
    variant: str = "raw"
    classes: tuple[tuple[int, ...], ...] = ()
    total_layers: int = 250
    test_layers: int = 38
    band_layers: int = 10
    holdout_blocks: tuple[int, ...] = DEFAULT_HOLDOUT_BLOCKS

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.total_layers < 1:
            raise ValueError("total_layers must be >= 1")
        if self.kind == "up_down":
            groups = tuple(tuple(sorted(set(g))) for g in self.classes)
            object.__setattr__(self, "classes", groups)
            if len(groups) < 2:
                raise ValueError("up_down task needs at least two classes")
            if any(not g for g in groups):
                raise ValueError("class block sets must be nonempty")
            seen: set[int] = set()
            for g in groups:
                if seen & set(g):
                    raise ValueError("class block sets must be disjoint")
                seen |= set(g)
            if not (1 <= self.test_layers < self.total_layers):
                raise ValueError("test_layers must lie in [1, total_layers)")
        else:
            holdout = tuple(sorted(set(self.holdout_blocks)))
            object.__setattr__(self, "holdout_blocks", holdout)
            if not holdout:
                raise ValueError("high_low task needs held-out blocks")
            if self.band_layers < 1 or 2 * self.band_layers > self.total_layers:
                raise ValueError(
                    "band_layers must satisfy 2*band_layers <= total_layers"
                )

    @property
    def display_name(self) -> str:
        if self.kind == "up_down":
            body = " vs ".join(self._group_label(g) for g in self.classes)
        else:
            body = "high-low"
        return f"{body} ({self.variant})"

    @staticmethod
    def _group_label(group: tuple[int, ...]) -> str:
        return "+".join(str(b) for b in group)


def _block_layer_map(ds: LabeledDataset) -> dict[int, dict[int, SeriesRecord]]:
    out: dict[int, dict[int, SeriesRecord]] = {}
    for rec in ds.records:
        out.setdefault(rec.block_id, {})[rec.layer_index] = rec
    return out


def _require_layers(layers_present: set[int], needed: Sequence[int],
                    block: int) -> None:
    gaps = sorted(set(needed) - layers_present)
    if gaps:
        raise ValueError(
            f"block {block} is missing layers {gaps[:10]}"
            + (" ..." if len(gaps) > 10 else "")
        )


def _relabel(rec: SeriesRecord, label: str) -> SeriesRecord:
    return SeriesRecord(rec.series, label, rec.block_id, rec.layer_index)


def split_updown(ds: LabeledDataset, task: TaskSpec
                 ) -> tuple[list[SeriesRecord], list[SeriesRecord]]:
    """Bottom-layers train / top-layers test split for block-identity tasks."""
    if task.kind != "up_down":
        raise ValueError("split_updown requires an up_down task")
    by_block = _block_layer_map(ds)
    cut = task.total_layers - task.test_layers
    train: list[SeriesRecord] = []
    test: list[SeriesRecord] = []
    for group in task.classes:
        label = TaskSpec._group_label(group)
        for block in group:
            if block not in by_block:
                raise ValueError(f"dataset has no block {block}")
            layers = by_block[block]
            _require_layers(set(layers), range(task.total_layers), block)
            extra = sorted(set(layers) - set(range(task.total_layers)))
            if extra:
                raise ValueError(
                    f"block {block} has unexpected layers {extra[:10]}"
                )
            for layer in range(task.total_layers):
                rec = _relabel(layers[layer], label)
                (train if layer < cut else test).append(rec)
    return train, test


def split_highlow(ds: LabeledDataset, task: TaskSpec
                  ) -> tuple[list[SeriesRecord], list[SeriesRecord]]:
    """Bottom-band vs top-band layer split with whole blocks held out."""
    if task.kind != "high_low":
        raise ValueError("split_highlow requires a high_low task")
    by_block = _block_layer_map(ds)
    blocks = sorted(by_block)
    missing = sorted(set(task.holdout_blocks) - set(blocks))
    if missing:
        raise ValueError(f"held-out blocks {missing} are not in the dataset")
    low_layers = range(task.band_layers)
    high_layers = range(task.total_layers - task.band_layers,
                        task.total_layers)
    train: list[SeriesRecord] = []
    test: list[SeriesRecord] = []
    holdout = set(task.holdout_blocks)
    for block in blocks:
        layers = by_block[block]
        _require_layers(set(layers), list(low_layers) + list(high_layers),
                        block)
        bucket = test if block in holdout else train
        for layer in low_layers:
            bucket.append(_relabel(layers[layer], "low"))
        for layer in high_layers:
            bucket.append(_relabel(layers[layer], "high"))
    if not train:
        raise ValueError("holding out every block leaves no training data")
    if not test:
        raise ValueError("no held-out blocks: test split is empty")
    return train, test


def make_cv_folds(records: Sequence[SeriesRecord], n_folds: int = 6
                  ) -> np.ndarray:
    """Assign each record to a fold: contiguous layer runs within each block.

    A block with c records is cut into n_folds contiguous chunks whose
    sizes differ by at most one, larger chunks first (212 layers with 6
    folds gives 36,36,35,35,35,35).
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    records = list(records)
    class_counts: dict[str, int] = {}
    for rec in records:
        class_counts[rec.label] = class_counts.get(rec.label, 0) + 1
    for label, count in sorted(class_counts.items()):
        if count < n_folds:
            raise ValueError(
                f"class {label!r} has {count} records, fewer than "
                f"{n_folds} folds"
            )
    assignment = np.empty(len(records), dtype=np.int64)
    by_block: dict[int, list[int]] = {}
    for i, rec in enumerate(records):
        by_block.setdefault(rec.block_id, []).append(i)
    for block in sorted(by_block):
        idx = sorted(by_block[block],
                     key=lambda i: records[i].layer_index)
        count = len(idx)
        base, rem = divmod(count, n_folds)
        pos = 0
        for f in range(n_folds):
            size = base + (1 if f < rem else 0)
            for i in idx[pos:pos + size]:
                assignment[i] = f
            pos += size
    return assignment


@dataclass(frozen=True)
class PredictionEntry:
    query_uid: tuple[int, int]
    true_label: str
    predicted_label: str
    neighbors: tuple[Neighbor, ...]


@dataclass(frozen=True)
class ModelResult:
    """One model's outcome on one task."""

    kind: str
    spec: DistanceSpec
    k: int
    cv_accuracy: float
    correct: int
    total: int
    predictions: tuple[PredictionEntry, ...]
    notes: tuple[str, ...] = ()

    @property
    def accuracy_pct(self) -> float:
        return round(100.0 * self.correct / self.total, 2)

    def confusion(self) -> dict[tuple[str, str], int]:
        out: dict[tuple[str, str], int] = {}
        for p in self.predictions:
            key = (p.true_label, p.predicted_label)
            out[key] = out.get(key, 0) + 1
        return out


@dataclass(frozen=True)
class EvalReport:
    """Per-task accuracy report, recomputable from its own prediction log."""

    task_name: str
    task_kind: str
    variant: str
    class_labels: tuple[str, ...]
    train_size: int
    test_size: int
    models: tuple[ModelResult, ...]

    def model(self, kind: str) -> ModelResult | None:
        for m in self.models:
            if m.kind == kind:
                return m
        return None

    def assert_consistent(self) -> None:
        """Accuracies must be recomputable from the stored predictions and
        be exact multiples of one test count."""
        for m in self.models:
            recomputed = sum(
                1 for p in m.predictions if p.true_label == p.predicted_label
            )
            if recomputed != m.correct or len(m.predictions) != m.total:
                raise AssertionError(
                    f"{self.task_name}/{m.kind}: stored accuracy does not "
                    "match the prediction log"
                )
            if m.total != self.test_size:
                raise AssertionError(
                    f"{self.task_name}/{m.kind}: prediction count differs "
                    "from the test split size"
                )
            pct = m.accuracy_pct
            if pct != round(100.0 * m.correct / m.total, 2):
                raise AssertionError("accuracy is not a multiple of 1/total")

    def to_json_dict(self) -> dict:
        return {
            "task": self.task_name,
            "kind": self.task_kind,
            "variant": self.variant,
            "classes": list(self.class_labels),
            "train_size": self.train_size,
            "test_size": self.test_size,
            "models": [
                {
                    "model": m.kind,
                    "accuracy_pct": m.accuracy_pct,
                    "correct": m.correct,
                    "total": m.total,
                    "cv_accuracy": round(m.cv_accuracy, 6),
                    "k": m.k,
                    "params": m.spec.to_dict(),
                    "confusion": {
                        f"{t}->{p}": c
                        for (t, p), c in sorted(m.confusion().items())
                    },
                    "notes": list(m.notes),
                }
                for m in self.models
            ],
        }

    def to_text(self) -> str:
        lines = [f"Task: {self.task_name}",
                 f"train={self.train_size} test={self.test_size} "
                 f"classes={'/'.join(self.class_labels)}"]
        for m in self.models:
            lines.append(
                f"  {MODEL_DISPLAY[m.kind]:<10} {m.accuracy_pct:6.2f}  "
                f"[{m.spec.describe()}, k={m.k}]"
            )
        return "\n".join(lines)

    def prediction_log_lines(self) -> list[str]:
        lines = []
        for m in self.models:
            for p in m.predictions:
                neigh = ";".join(
                    f"{n.uid[0]}:{n.uid[1]}:{n.distance!r}"
                    for n in p.neighbors
                )
                lines.append(
                    f"{self.task_name}\t{m.kind}\t"
                    f"{p.query_uid[0]}:{p.query_uid[1]}\t{p.true_label}\t"
                    f"{p.predicted_label}\t{neigh}"
                )
        return lines


def _filter_dataset(ds: LabeledDataset, spec: ButterworthSpec
                    ) -> LabeledDataset:
    records = tuple(
        SeriesRecord(butterworth_filter(r.series, spec), r.label,
                     r.block_id, r.layer_index)
        for r in ds.records
    )
    return LabeledDataset(records)


def run_task(ds: LabeledDataset, task: TaskSpec,
             model_grids: Mapping[str, Sequence[DistanceSpec]],
             butterworth: ButterworthSpec | None = None,
             k_grid: Sequence[int] = (1, 3, 5),
             n_folds: int = 6,
             workers: int | None = None) -> EvalReport:
    """Run one task: preprocess, split, tune on train only, evaluate on test.

    Tuning touches only training records; the run asserts that the records
    used for model selection are disjoint from the test split.
    """
    try:
        return _run_task(ds, task, model_grids, butterworth, k_grid,
                         n_folds, workers)
    except Exception as exc:
        raise TaskError(f"task {task.display_name!r}: {exc}") from exc


def _run_task(ds, task, model_grids, butterworth, k_grid, n_folds, workers):
    if task.variant == "filtered":
        ds = _filter_dataset(ds, butterworth or ButterworthSpec())
    if task.kind == "up_down":
        train, test = split_updown(ds, task)
    else:
        train, test = split_highlow(ds, task)
    folds = make_cv_folds(train, n_folds)

    test_uids = {r.uid for r in test}
    touched: set[tuple[int, int]] = set()

    results: list[ModelResult] = []
    for kind in MODEL_ORDER:
        if kind not in model_grids:
            continue
        grid = list(model_grids[kind])
        if not grid:
            continue
        search = tune(train, folds, grid, k_grid, workers, touched)
        model = knn_fit(train, search.best.k, search.best.spec)
        labels, neighbor_lists = knn_predict_batch(
            model, [r.series for r in test], [r.uid for r in test], workers
        )
        predictions = tuple(
            PredictionEntry(rec.uid, rec.label, labels[i], neighbor_lists[i])
            for i, rec in enumerate(test)
        )
        correct = sum(1 for p in predictions
                      if p.true_label == p.predicted_label)
        results.append(ModelResult(
            kind=kind,
            spec=search.best.spec,
            k=search.best.k,
            cv_accuracy=search.best.mean_accuracy,
            correct=correct,
            total=len(test),
            predictions=predictions,
            notes=model.engine.notes(),
        ))

    leaked = touched & test_uids
    if leaked:
        raise AssertionError(
            f"tuning touched test records: {sorted(leaked)[:5]}"
        )

    class_labels = tuple(sorted({r.label for r in train}))
    report = EvalReport(
        task_name=task.display_name,
        task_kind=task.kind,
        variant=task.variant,
        class_labels=class_labels,
        train_size=len(train),
        test_size=len(test),
        models=tuple(results),
    )
    report.assert_consistent()
    return report


@dataclass(frozen=True)
class Summary:
    """Unweighted per-model mean accuracy across tasks."""

    rows: tuple[tuple[str, float, int], ...]  # (kind, mean pct, task count)
    warnings: tuple[str, ...] = ()

    def to_text(self) -> str:
        lines = ["Average model accuracy across all tasks"]
        for kind, pct, count in self.rows:
            lines.append(
                f"  {MODEL_DISPLAY[kind]:<10} {pct:6.2f}   ({count} tasks)"
            )
        for w in self.warnings:
            lines.append(f"  note: {w}")
        return "\n".join(lines)

    def accuracy(self, kind: str) -> float | None:
        for row_kind, pct, _ in self.rows:
            if row_kind == kind:
                return pct
        return None


def summarize(reports: Sequence[EvalReport]) -> Summary:
    """Fig.-6-style summary: per-model unweighted mean over all reports.

    A model missing from any report is excluded with a warning rather than
    imputed.
    """
    if not reports:
        raise ValueError("need at least one report to summarize")
    present: dict[str, list[float]] = {}
    for rep in reports:
        for m in rep.models:
            present.setdefault(m.kind, []).append(m.accuracy_pct)
    rows = []
    warnings: list[str] = []
    for kind in MODEL_ORDER:
        if kind not in present:
            continue
        values = present[kind]
        if len(values) != len(reports):
            warnings.append(
                f"model {MODEL_DISPLAY[kind]} missing from "
                f"{len(reports) - len(values)} report(s); excluded from "
                "the summary"
            )
            continue
        rows.append((kind, round(float(np.mean(values)), 2), len(values)))
    return Summary(tuple(rows), tuple(warnings))
