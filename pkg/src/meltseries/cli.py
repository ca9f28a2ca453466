"""Command-line interface: generate / bench / distance / filter.

Exit status is 0 only when every requested piece of work succeeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .datagen import GenSpec, generate
from .dataset import (DatasetFormatError, LabeledDataset, SeriesRecord,
                      TimeSeries, load_dataset, save_dataset)
from .distances import (DistanceSpec, dtw_spec, euclidean_spec, make_engine,
                        mean_spec, sax_spec, sfa_spec)
from .preprocess import ButterworthSpec, butterworth_filter
from .protocol import TaskError, run_task, summarize
from .symbolic import SaxSpec, SfaSpec

REPORT_VERSION = 1


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _add_generate_parser(sub) -> None:
    p = sub.add_parser("generate", help="write a synthetic dataset file")
    p.add_argument("-o", "--output", required=True, help="output dataset path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blocks", type=int, default=27)
    p.add_argument("--layers", type=int, default=250)
    p.add_argument("--base-length", type=int, default=2000)
    p.add_argument("--length-jitter", type=float, default=0.0)
    p.add_argument("--base-level", type=float, default=1000.0)
    p.add_argument("--layer-trend", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=5.0)
    p.add_argument("--block-offsets", type=_parse_float_list, default=None,
                   help="comma-separated per-block level offsets")
    p.add_argument("--dip-depth", type=_parse_float_list, default=(120.0,),
                   help="dip depth, scalar or one value per block")
    p.add_argument("--dip-width", type=float, default=0.015)
    p.add_argument("--dip-phase-offsets", type=_parse_float_list,
                   default=None,
                   help="comma-separated per-block dip phase offsets")
    p.add_argument("--dip-phase-jitter", type=float, default=0.01)


def _add_bench_parser(sub) -> None:
    p = sub.add_parser("bench", help="run the benchmark described by a config")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--output-dir", default=None, help="override output dir")
    p.add_argument("--dataset", default=None, help="override dataset path")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)


def _add_distance_parser(sub) -> None:
    p = sub.add_parser("distance",
                       help="print one distance between two series")
    p.add_argument("--kind", required=True,
                   choices=("mean", "euclidean", "dtw", "sax", "sfa"))
    p.add_argument("--a", help="first series as comma-separated values")
    p.add_argument("--b", help="second series as comma-separated values")
    p.add_argument("--a-file", help="file with the first series")
    p.add_argument("--b-file", help="file with the second series")
    p.add_argument("--band-fraction", type=float, default=1.0)
    p.add_argument("--common-length", type=int, default=None)
    p.add_argument("--alphabet-size", type=int, default=4)
    p.add_argument("--word-length", type=int, default=8)
    p.add_argument("--coeff-count", type=int, default=8)
    p.add_argument("--window-size", type=int, default=32)
    p.add_argument("--metric", choices=("bag", "word"), default="bag")
    p.add_argument("--no-window-znorm", action="store_true")
    p.add_argument("--no-numerosity-reduction", action="store_true")


def _add_filter_parser(sub) -> None:
    p = sub.add_parser("filter",
                       help="Butterworth-filter a dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--cutoff", type=float, default=0.05)
    p.add_argument("--causal", action="store_true",
                   help="single forward pass instead of zero-phase")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meltseries",
        description="Melt-pool time-series distances and k-NN benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate_parser(sub)
    _add_bench_parser(sub)
    _add_distance_parser(sub)
    _add_filter_parser(sub)
    return parser


def _cmd_generate(args) -> int:
    depth = args.dip_depth
    spec = GenSpec(
        blocks=args.blocks,
        layers=args.layers,
        base_length=args.base_length,
        length_jitter=args.length_jitter,
        base_level=args.base_level,
        block_offsets=args.block_offsets,
        layer_trend=args.layer_trend,
        dip_depth=depth if len(depth) > 1 else depth[0],
        dip_width=args.dip_width,
        dip_phase_offsets=args.dip_phase_offsets,
        dip_phase_jitter=args.dip_phase_jitter,
        noise=args.noise,
        seed=args.seed,
    )
    ds = generate(spec)
    save_dataset(ds, args.output)
    print(f"wrote {len(ds)} records to {args.output}")
    return 0


def _read_series_arg(inline: str | None, path: str | None,
                     name: str) -> TimeSeries:
    if (inline is None) == (path is None):
        raise ValueError(f"give exactly one of --{name} / --{name}-file")
    if path is not None:
        inline = Path(path).read_text(encoding="utf-8").strip()
        inline = inline.replace("\n", ",").replace(" ", ",")
        inline = ",".join(tok for tok in inline.split(",") if tok)
    try:
        values = [float(tok) for tok in inline.split(",")]
    except ValueError as exc:
        raise ValueError(f"series --{name}: {exc}") from None
    return TimeSeries(np.asarray(values))


def _distance_spec_from_args(args) -> DistanceSpec:
    if args.kind == "mean":
        return mean_spec()
    if args.kind == "euclidean":
        return euclidean_spec(args.common_length)
    if args.kind == "dtw":
        return dtw_spec(args.band_fraction)
    znorm = not args.no_window_znorm
    nr = not args.no_numerosity_reduction
    if args.kind == "sax":
        return sax_spec(
            SaxSpec(args.alphabet_size, args.word_length, args.window_size,
                    per_window_znorm=znorm, numerosity_reduction=nr),
            metric=args.metric,
        )
    return sfa_spec(
        SfaSpec(args.alphabet_size, args.coeff_count, args.window_size,
                per_window_znorm=znorm, numerosity_reduction=nr),
        metric=args.metric,
    )


def _cmd_distance(args) -> int:
    a = _read_series_arg(args.a, args.a_file, "a")
    b = _read_series_arg(args.b, args.b_file, "b")
    spec = _distance_spec_from_args(args)
    engine = make_engine(spec)
    # For SFA the MCB thresholds are fitted on the two inputs themselves;
    # this command is a debugging aid, not a classification protocol.
    engine.fit([a, b])
    d = engine.distance(engine.prepare(a), engine.prepare(b))
    print(f"{d:.9g}")
    return 0


def _cmd_filter(args) -> int:
    ds = load_dataset(args.input)
    spec = ButterworthSpec(order=args.order, cutoff=args.cutoff,
                           zero_phase=not args.causal)
    records = tuple(
        SeriesRecord(butterworth_filter(r.series, spec), r.label,
                     r.block_id, r.layer_index)
        for r in ds.records
    )
    save_dataset(LabeledDataset(records), args.output)
    print(f"filtered {len(records)} records into {args.output}")
    return 0


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir is not None:
        cfg = _replace_cfg(cfg, output_dir=args.output_dir)
    if args.workers is not None:
        cfg = _replace_cfg(cfg, workers=args.workers)
    if args.seed is not None:
        cfg = _replace_cfg(cfg, seed=args.seed)
        if cfg.generator is not None:
            from dataclasses import replace as _rep
            cfg = _replace_cfg(cfg, generator=_rep(cfg.generator,
                                                   seed=args.seed))
    if args.dataset is not None:
        cfg = _replace_cfg(cfg, dataset_path=args.dataset, generator=None)

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if cfg.dataset_path is not None:
        ds = load_dataset(cfg.dataset_path)
    else:
        ds = generate(cfg.generator)
        save_dataset(ds, out_dir / "dataset.mps")

    reports = []
    failures = []
    for task in cfg.tasks:
        try:
            reports.append(run_task(
                ds, task, cfg.model_grids,
                butterworth=cfg.butterworth,
                k_grid=cfg.k_grid,
                n_folds=cfg.cv_folds,
                workers=cfg.workers,
            ))
        except TaskError as exc:
            failures.append(str(exc))
            print(f"error: {exc}", file=sys.stderr)

    payload = {
        "report_version": REPORT_VERSION,
        "seed": cfg.seed,
        "tasks": [r.to_json_dict() for r in reports],
        "failures": failures,
    }
    if reports:
        summary = summarize(reports)
        payload["summary"] = {
            "average_accuracy_pct": {kind: pct for kind, pct, _ in
                                     summary.rows},
            "tasks_counted": len(reports),
            "warnings": list(summary.warnings),
        }
    _write_text(out_dir / "report.json",
                json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _write_text(out_dir / "tables.txt", _tables_text(reports))
    _write_text(out_dir / "predictions.log", _prediction_log(reports))

    if reports:
        print(summary.to_text())
    return 0 if not failures else 1


def _replace_cfg(cfg, **kw):
    from dataclasses import replace
    return replace(cfg, **kw)


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _tables_text(reports) -> str:
    """Combined accuracy tables, one per (kind, variant) group."""
    from .protocol import MODEL_DISPLAY, MODEL_ORDER

    blocks = []
    for kind, title in (("up_down", "Up Wind versus Down Wind"),
                        ("high_low", "High versus Low")):
        for variant in ("raw", "filtered"):
            group = [r for r in reports
                     if r.task_kind == kind and r.variant == variant]
            if not group:
                continue
            title_v = f"{title} ({variant.capitalize()})"
            cols = [r.task_name.replace(f" ({variant})", "") for r in group]
            width = max(12, max(len(c) for c in cols) + 2)
            header = "Model".ljust(12) + "".join(c.rjust(width) for c in cols)
            lines = [title_v, header, "-" * len(header)]
            kinds_present = [k for k in MODEL_ORDER
                             if any(r.model(k) for r in group)]
            for mk in kinds_present:
                row = MODEL_DISPLAY[mk].ljust(12)
                for r in group:
                    m = r.model(mk)
                    cell = f"{m.accuracy_pct:.2f}" if m else "-"
                    row += cell.rjust(width)
                lines.append(row)
            blocks.append("\n".join(lines))
    if not blocks:
        return "no completed tasks\n"
    return "\n\n".join(blocks) + "\n"


def _prediction_log(reports) -> str:
    lines = ["# task\tmodel\tquery\ttrue\tpredicted\tneighbors(uid:dist)"]
    for r in reports:
        lines.extend(r.prediction_log_lines())
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "distance":
            return _cmd_distance(args)
        if args.command == "filter":
            return _cmd_filter(args)
    except (ValueError, ConfigError, DatasetFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
