"""Benchmark run configuration: a versioned JSON document.

Schema (schema_version 1)::

    {
      "schema_version": 1,
      "seed": 0,
      "dataset": {"path": "data.mps"}            # exactly one of path /
                 | {"generator": { GenSpec fields }},   # generator
      "filter": {"order": 4, "cutoff": 0.05, "zero_phase": true},
      "tasks": [
        {"kind": "up_down", "classes": [[0],[22]],
         "variants": ["raw","filtered"],
         "total_layers": 250, "test_layers": 38},
        {"kind": "high_low", "variants": ["raw"],
         "total_layers": 250, "band_layers": 10,
         "holdout_blocks": [3,7,10,14,17,21,24,26]}
      ],
      "models": {
        "mean": {},
        "euclidean": {"common_length": [null]},
        "dtw": {"band_fraction": [0.05, 0.1, 0.2, 1.0]},
        "sax": {"alphabet_size": [4,6,8], "word_length": [4,8,16],
                "window_size": [32,64,128], "metric": "bag",
                "per_window_znorm": true, "numerosity_reduction": true},
        "sfa": {"alphabet_size": [4,6,8], "coeff_count": [4,8,16],
                "window_size": [32,64,128], "metric": "bag",
                "per_window_znorm": true, "numerosity_reduction": true}
      },
      "k_grid": [1, 3, 5],
      "cv_folds": 6,
      "workers": null,            # null = one per CPU
      "output_dir": "out"
    }

Omitted model-grid lists fall back to the defaults above. Command-line
flags override seed, dataset path, workers and output_dir.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .datagen import GenSpec
from .distances import (DistanceSpec, dtw_spec, euclidean_spec, mean_spec,
                        sax_spec, sfa_spec)
from .preprocess import ButterworthSpec
from .protocol import TaskSpec
from .symbolic import SaxSpec, SfaSpec

SCHEMA_VERSION = 1

DEFAULT_K_GRID = (1, 3, 5)
DEFAULT_DTW_BANDS = (0.05, 0.1, 0.2, 1.0)
DEFAULT_ALPHABETS = (4, 6, 8)
DEFAULT_WORD_LENGTHS = (4, 8, 16)
DEFAULT_WINDOWS = (32, 64, 128)


class ConfigError(ValueError):
    """Raised for malformed run configurations."""


@dataclass(frozen=True)
class RunConfig:
    seed: int
    dataset_path: str | None
    generator: GenSpec | None
    butterworth: ButterworthSpec
    tasks: tuple[TaskSpec, ...]
    model_grids: Mapping[str, tuple[DistanceSpec, ...]]
    k_grid: tuple[int, ...]
    cv_folds: int
    workers: int | None
    output_dir: str


def default_model_grids() -> dict[str, tuple[DistanceSpec, ...]]:
    return {
        "mean": (mean_spec(),),
        "euclidean": (euclidean_spec(None),),
        "dtw": tuple(dtw_spec(b) for b in DEFAULT_DTW_BANDS),
        "sax": _sax_grid({}),
        "sfa": _sfa_grid({}),
    }


def _as_list(value, name: str) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a nonempty list")
    return value


def _sax_grid(entry: Mapping[str, Any]) -> tuple[DistanceSpec, ...]:
    alphabets = entry.get("alphabet_size", list(DEFAULT_ALPHABETS))
    words = entry.get("word_length", list(DEFAULT_WORD_LENGTHS))
    windows = entry.get("window_size", list(DEFAULT_WINDOWS))
    metric = entry.get("metric", "bag")
    znorm = entry.get("per_window_znorm", True)
    nr = entry.get("numerosity_reduction", True)
    specs = []
    for a, w, win in itertools.product(
            _as_list(alphabets, "sax.alphabet_size"),
            _as_list(words, "sax.word_length"),
            _as_list(windows, "sax.window_size")):
        if w > win:
            continue  # invalid combination, not an error in a grid
        specs.append(sax_spec(
            SaxSpec(a, w, win, per_window_znorm=znorm,
                    numerosity_reduction=nr),
            metric=metric,
        ))
    if not specs:
        raise ConfigError("sax grid is empty after dropping invalid combos")
    return tuple(specs)


def _sfa_grid(entry: Mapping[str, Any]) -> tuple[DistanceSpec, ...]:
    alphabets = entry.get("alphabet_size", list(DEFAULT_ALPHABETS))
    coeffs = entry.get("coeff_count", list(DEFAULT_WORD_LENGTHS))
    windows = entry.get("window_size", list(DEFAULT_WINDOWS))
    metric = entry.get("metric", "bag")
    znorm = entry.get("per_window_znorm", True)
    nr = entry.get("numerosity_reduction", True)
    specs = []
    for a, l, win in itertools.product(
            _as_list(alphabets, "sfa.alphabet_size"),
            _as_list(coeffs, "sfa.coeff_count"),
            _as_list(windows, "sfa.window_size")):
        if l > win:
            continue
        specs.append(sfa_spec(
            SfaSpec(a, l, win, per_window_znorm=znorm,
                    numerosity_reduction=nr),
            metric=metric,
        ))
    if not specs:
        raise ConfigError("sfa grid is empty after dropping invalid combos")
    return tuple(specs)


def _model_grids(data: Mapping[str, Any]) -> dict[str, tuple[DistanceSpec, ...]]:
    grids: dict[str, tuple[DistanceSpec, ...]] = {}
    for kind, entry in data.items():
        if entry is None:
            entry = {}
        if kind == "mean":
            grids[kind] = (mean_spec(),)
        elif kind == "euclidean":
            lengths = entry.get("common_length", [None])
            grids[kind] = tuple(
                euclidean_spec(v) for v in _as_list(lengths,
                                                    "euclidean.common_length")
            )
        elif kind == "dtw":
            bands = entry.get("band_fraction", list(DEFAULT_DTW_BANDS))
            grids[kind] = tuple(
                dtw_spec(b) for b in _as_list(bands, "dtw.band_fraction")
            )
        elif kind == "sax":
            grids[kind] = _sax_grid(entry)
        elif kind == "sfa":
            grids[kind] = _sfa_grid(entry)
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
    if not grids:
        raise ConfigError("config lists no models")
    return grids


def _tasks(entries: Sequence[Mapping[str, Any]]) -> tuple[TaskSpec, ...]:
    if not entries:
        raise ConfigError("config lists no tasks")
    tasks: list[TaskSpec] = []
    for i, entry in enumerate(entries):
        kind = entry.get("kind")
        if kind not in ("up_down", "high_low"):
            raise ConfigError(f"tasks[{i}]: unknown kind {kind!r}")
        variants = entry.get("variants", ["raw"])
        for variant in _as_list(variants, f"tasks[{i}].variants"):
            try:
                if kind == "up_down":
                    tasks.append(TaskSpec(
                        kind="up_down",
                        variant=variant,
                        classes=tuple(tuple(g) for g in
                                      entry.get("classes", ())),
                        total_layers=entry.get("total_layers", 250),
                        test_layers=entry.get("test_layers", 38),
                    ))
                else:
                    tasks.append(TaskSpec(
                        kind="high_low",
                        variant=variant,
                        total_layers=entry.get("total_layers", 250),
                        band_layers=entry.get("band_layers", 10),
                        holdout_blocks=tuple(entry.get(
                            "holdout_blocks",
                            TaskSpec.__dataclass_fields__["holdout_blocks"]
                            .default,
                        )),
                    ))
            except ValueError as exc:
                raise ConfigError(f"tasks[{i}]: {exc}") from exc
    return tuple(tasks)


def _generator(entry: Mapping[str, Any]) -> GenSpec:
    kwargs = dict(entry)
    for key in ("block_offsets", "dip_depth", "dip_phase_offsets"):
        if isinstance(kwargs.get(key), list):
            kwargs[key] = tuple(kwargs[key])
    try:
        return GenSpec(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"generator: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"generator: {exc}") from exc


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {version!r}; expected "
            f"{SCHEMA_VERSION}"
        )
    dataset = data.get("dataset")
    if not isinstance(dataset, Mapping):
        raise ConfigError("config needs a dataset section")
    path = dataset.get("path")
    gen_entry = dataset.get("generator")
    if (path is None) == (gen_entry is None):
        raise ConfigError(
            "dataset section must contain exactly one of 'path' or "
            "'generator'"
        )
    generator = None
    if gen_entry is not None:
        # The single config seed drives generation unless overridden.
        merged = dict(gen_entry)
        merged.setdefault("seed", data.get("seed", 0))
        generator = _generator(merged)

    filt = data.get("filter", {})
    try:
        butter = ButterworthSpec(
            order=filt.get("order", 4),
            cutoff=filt.get("cutoff", 0.05),
            zero_phase=filt.get("zero_phase", True),
        )
    except ValueError as exc:
        raise ConfigError(f"filter: {exc}") from exc

    models = data.get("models")
    grids = _model_grids(models) if models is not None \
        else default_model_grids()

    k_grid = tuple(data.get("k_grid", DEFAULT_K_GRID))
    if not k_grid or any(k < 1 for k in k_grid):
        raise ConfigError("k_grid must list positive integers")
    cv_folds = data.get("cv_folds", 6)
    if cv_folds < 2:
        raise ConfigError("cv_folds must be >= 2")
    workers = data.get("workers")
    if workers is not None and workers < 1:
        raise ConfigError("workers must be >= 1 or null")

    return RunConfig(
        seed=data.get("seed", 0),
        dataset_path=path,
        generator=generator,
        butterworth=butter,
        tasks=_tasks(data.get("tasks", [])),
        model_grids=grids,
        k_grid=k_grid,
        cv_folds=cv_folds,
        workers=workers,
        output_dir=data.get("output_dir", "meltseries-out"),
    )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(data)
