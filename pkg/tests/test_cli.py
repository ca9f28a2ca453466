import json

import numpy as np
import pytest

from meltseries import load_dataset
from meltseries.cli import main


def run_cli(*argv):
    return main(list(argv))


BENCH_CONFIG = {
    "schema_version": 1,
    "seed": 5,
    "dataset": {
        "generator": {
            "blocks": 2,
            "layers": 12,
            "base_length": 32,
            "base_level": 0.0,
            "block_offsets": [0.0, 10.0],
            "dip_depth": 0.0,
            "noise": 0.5,
        }
    },
    "tasks": [
        {"kind": "up_down", "classes": [[0], [1]], "variants": ["raw"],
         "total_layers": 12, "test_layers": 3}
    ],
    "models": {
        "mean": {},
        "euclidean": {"common_length": [32]},
        "dtw": {"band_fraction": [1.0]},
    },
    "k_grid": [1],
    "cv_folds": 3,
    "workers": 1,
}


def write_config(tmp_path, extra=None, **overrides):
    cfg = json.loads(json.dumps(BENCH_CONFIG))
    cfg.update(overrides)
    if extra:
        cfg.update(extra)
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


class TestConsoleScript:
    def test_entry_point_help(self):
        import subprocess
        import sys
        proc = subprocess.run(
            [sys.executable, "-m", "meltseries.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        for command in ("generate", "bench", "distance", "filter"):
            assert command in proc.stdout


class TestGenerateCommand:
    def test_writes_expected_record_count(self, tmp_path, capsys):
        out = tmp_path / "data.mps"
        code = run_cli("generate", "--seed", "42", "--blocks", "4",
                       "--layers", "30", "--base-length", "32",
                       "-o", str(out))
        assert code == 0
        assert "wrote 120 records" in capsys.readouterr().out
        assert len(load_dataset(out)) == 120

    def test_repeat_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.mps", tmp_path / "b.mps"
        args = ["generate", "--seed", "9", "--blocks", "2", "--layers", "5",
                "--base-length", "24", "--length-jitter", "0.2"]
        assert run_cli(*args, "-o", str(a)) == 0
        assert run_cli(*args, "-o", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_output(self, tmp_path, capsys):
        target = tmp_path / "no-such-dir" / "data.mps"
        code = run_cli("generate", "--blocks", "1", "--layers", "1",
                       "--base-length", "16", "-o", str(target))
        assert code == 1
        assert not target.exists()
        assert "error" in capsys.readouterr().err


class TestDistanceCommand:
    def test_identical_series_zero(self, capsys):
        code = run_cli("distance", "--kind", "euclidean",
                       "--common-length", "3",
                       "--a", "1,2,3", "--b", "1,2,3")
        assert code == 0
        assert capsys.readouterr().out.strip() == "0"

    def test_dtw_spike_pair_zero(self, capsys):
        code = run_cli("distance", "--kind", "dtw", "--band-fraction", "1.0",
                       "--a", "0,0,1,0,0", "--b", "0,0,0,1,0")
        assert code == 0
        assert capsys.readouterr().out.strip() == "0"

    def test_nine_significant_digits(self, capsys):
        code = run_cli("distance", "--kind", "mean",
                       "--a", "0,0", "--b", "1,1.1234567891")
        assert code == 0
        out = capsys.readouterr().out.strip()
        assert out == "1.06172839"

    def test_unknown_kind_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("distance", "--kind", "hamming", "--a", "1", "--b", "2")
        assert exc.value.code == 2

    def test_malformed_series(self, capsys):
        code = run_cli("distance", "--kind", "mean",
                       "--a", "1,zz", "--b", "1,2")
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_series_from_file(self, tmp_path, capsys):
        f1 = tmp_path / "a.txt"
        f1.write_text("1.0, 2.0\n3.0\n")
        code = run_cli("distance", "--kind", "mean",
                       "--a-file", str(f1), "--b", "2,2,2")
        assert code == 0
        assert capsys.readouterr().out.strip() == "0"

    def test_sax_and_sfa_kinds_run(self, capsys):
        a = ",".join(str(np.sin(i / 3.0)) for i in range(40))
        b = ",".join(str(np.cos(i / 5.0)) for i in range(40))
        for kind in ("sax", "sfa"):
            code = run_cli("distance", "--kind", kind,
                           "--alphabet-size", "4", "--word-length", "4",
                           "--coeff-count", "4", "--window-size", "16",
                           "--a", a, "--b", b)
            assert code == 0
            float(capsys.readouterr().out.strip())


class TestFilterCommand:
    def test_filters_dataset(self, tmp_path, capsys):
        raw = tmp_path / "raw.mps"
        run_cli("generate", "--blocks", "1", "--layers", "3",
                "--base-length", "64", "--noise", "5", "-o", str(raw))
        out = tmp_path / "filtered.mps"
        code = run_cli("filter", "--input", str(raw), "--output", str(out),
                       "--order", "4", "--cutoff", "0.1")
        assert code == 0
        ds_raw, ds_filt = load_dataset(raw), load_dataset(out)
        assert len(ds_filt) == len(ds_raw)
        assert [r.uid for r in ds_filt.records] == \
            [r.uid for r in ds_raw.records]
        assert ds_filt.records[0].series.values.var() < \
            ds_raw.records[0].series.values.var()

    def test_missing_input(self, tmp_path, capsys):
        code = run_cli("filter", "--input", str(tmp_path / "nope.mps"),
                       "--output", str(tmp_path / "out.mps"))
        assert code == 1
        assert "nope.mps" in capsys.readouterr().err


class TestBenchCommand:
    def test_end_to_end(self, tmp_path, capsys):
        cfg = write_config(tmp_path, output_dir=str(tmp_path / "out"))
        code = run_cli("bench", "--config", str(cfg))
        assert code == 0
        out = capsys.readouterr().out
        assert "Average model accuracy across all tasks" in out

        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["report_version"] == 1
        task = report["tasks"][0]
        assert [m["model"] for m in task["models"]] == \
            ["mean", "euclidean", "dtw"]
        assert task["train_size"] == 18
        assert task["test_size"] == 6
        for m in task["models"]:
            assert m["accuracy_pct"] == 100.0
        assert (tmp_path / "out" / "tables.txt").exists()
        log = (tmp_path / "out" / "predictions.log").read_text()
        assert len(log.strip().split("\n")) == 1 + 3 * 6

    def test_raw_and_filtered_variants(self, tmp_path):
        cfg = write_config(
            tmp_path,
            extra={
                "dataset": {"generator": {
                    "blocks": 2, "layers": 12, "base_length": 48,
                    "base_level": 0.0, "block_offsets": [0.0, 10.0],
                    "dip_depth": 0.0, "noise": 0.5,
                }},
                "filter": {"order": 2, "cutoff": 0.2},
                "tasks": [{"kind": "up_down", "classes": [[0], [1]],
                           "variants": ["raw", "filtered"],
                           "total_layers": 12, "test_layers": 3}],
                "models": {"mean": {}},
                "k_grid": [1],
                "cv_folds": 3,
            },
            output_dir=str(tmp_path / "out"),
        )
        assert run_cli("bench", "--config", str(cfg)) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert [t["variant"] for t in report["tasks"]] == \
            ["raw", "filtered"]
        tables = (tmp_path / "out" / "tables.txt").read_text()
        assert "(Raw)" in tables and "(Filtered)" in tables

    def test_high_low_task_via_config(self, tmp_path):
        cfg = write_config(
            tmp_path,
            extra={
                "dataset": {"generator": {
                    "blocks": 4, "layers": 30, "base_length": 32,
                    "base_level": 0.0, "layer_trend": 25.0,
                    "dip_depth": 0.0, "noise": 1.0,
                }},
                "tasks": [{"kind": "high_low", "variants": ["raw"],
                           "total_layers": 30, "band_layers": 5,
                           "holdout_blocks": [1, 3]}],
                "models": {"mean": {}},
                "k_grid": [1],
                "cv_folds": 3,
            },
            output_dir=str(tmp_path / "out"),
        )
        assert run_cli("bench", "--config", str(cfg)) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        task = report["tasks"][0]
        assert task["kind"] == "high_low"
        assert sorted(task["classes"]) == ["high", "low"]
        assert (task["train_size"], task["test_size"]) == (20, 20)
        tables = (tmp_path / "out" / "tables.txt").read_text()
        assert "High versus Low" in tables

    def test_mean_only_chance_band(self, tmp_path):
        # balanced 2-class data with no level signal: accuracy must sit
        # inside the binomial band around chance for 76 test points
        cfg = write_config(
            tmp_path,
            extra={
                "seed": 606,
                "dataset": {"generator": {
                    "blocks": 2, "layers": 250, "base_length": 16,
                    "base_level": 10.0, "dip_depth": 0.0, "noise": 1.0,
                }},
                "tasks": [{"kind": "up_down", "classes": [[0], [1]],
                           "variants": ["raw"]}],
                "models": {"mean": {}},
                "k_grid": [1, 3],
                "cv_folds": 6,
            },
            output_dir=str(tmp_path / "out"),
        )
        assert run_cli("bench", "--config", str(cfg)) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        task = report["tasks"][0]
        assert (task["train_size"], task["test_size"]) == (424, 76)
        acc = task["models"][0]["accuracy_pct"]
        assert 40.0 <= acc <= 60.0

    def test_missing_dataset_path(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            extra={"dataset": {"path": str(tmp_path / "absent.mps")}},
            output_dir=str(tmp_path / "out"),
        )
        code = run_cli("bench", "--config", str(cfg))
        assert code == 1
        assert "absent.mps" in capsys.readouterr().err

    def test_failing_task_continues_others(self, tmp_path, capsys):
        tasks = [
            {"kind": "up_down", "classes": [[0], [9]], "variants": ["raw"],
             "total_layers": 12, "test_layers": 3},
            {"kind": "up_down", "classes": [[0], [1]], "variants": ["raw"],
             "total_layers": 12, "test_layers": 3},
        ]
        cfg = write_config(tmp_path, extra={"tasks": tasks},
                           output_dir=str(tmp_path / "out"))
        code = run_cli("bench", "--config", str(cfg))
        assert code == 1
        err = capsys.readouterr().err
        assert "no block 9" in err
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert len(report["tasks"]) == 1
        assert len(report["failures"]) == 1

    def test_bad_config_schema(self, tmp_path, capsys):
        cfg = write_config(tmp_path, schema_version=99)
        code = run_cli("bench", "--config", str(cfg))
        assert code == 1
        assert "schema_version" in capsys.readouterr().err

    def test_flag_overrides(self, tmp_path):
        cfg = write_config(tmp_path, output_dir=str(tmp_path / "ignored"))
        out = tmp_path / "flagged"
        code = run_cli("bench", "--config", str(cfg),
                       "--output-dir", str(out), "--workers", "2")
        assert code == 0
        assert (out / "report.json").exists()
        assert not (tmp_path / "ignored").exists()
