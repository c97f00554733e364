"""Command-line contract: exit codes, artifacts, determinism, sweeps."""

import csv
import hashlib
import json
import os

import pytest

import nusacl.verify as verify_mod
from nusacl.cli import main


def _write_config(path, out_dir, **overrides):
    document = {
        "stream": {"num_tasks": 3, "samples_per_class_train": 30,
                   "samples_per_class_test": 20},
        "adapter": {"r_max": 4},
        "training": {"iterations": 30, "seeds": [0]},
        "outputs": {"directory": str(out_dir)},
    }
    for section, values in overrides.items():
        document.setdefault(section, {}).update(values)
    with open(path, "w") as fh:
        json.dump(document, fh)
    return document


def test_run_minimal_config_writes_one_metrics_row(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "out"
    _write_config(cfg, out)
    assert main(["run", "--config", str(cfg)]) == 0
    with open(out / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["seed"] == "0"
    assert (out / "report_seed0.json").exists()
    assert (out / "ledger.csv").exists()
    assert (out / "spectra.csv").exists()


def test_run_malformed_json_exits_2_without_artifacts(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "out"
    cfg.write_text("{not json")
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_run_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    document = _write_config(cfg, tmp_path / "out")
    document["adapter"]["rank"] = 4
    cfg.write_text(json.dumps(document))
    assert main(["run", "--config", str(cfg)]) == 2
    assert "adapter" in capsys.readouterr().err


def test_run_bad_value_reports_field_path(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    _write_config(cfg, tmp_path / "out", adapter={"rho": 1.5})
    assert main(["run", "--config", str(cfg)]) == 2
    assert "adapter.rho" in capsys.readouterr().err


def test_run_does_not_mutate_config(tmp_path):
    cfg = tmp_path / "c.json"
    _write_config(cfg, tmp_path / "out")
    before = cfg.read_bytes()
    assert main(["run", "--config", str(cfg)]) == 0
    assert cfg.read_bytes() == before


def test_run_determinism_replay(tmp_path):
    cfg = tmp_path / "c.json"
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        _write_config(cfg, out)
        assert main(["run", "--config", str(cfg)]) == 0
        digests.append(hashlib.sha256((out / "metrics.csv").read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_run_report_timestamp_is_isolated(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "out"
    _write_config(cfg, out)
    assert main(["run", "--config", str(cfg)]) == 0
    payload = json.loads((out / "report_seed0.json").read_text())
    without = {k: v for k, v in payload.items() if k != "timestamp"}
    assert "timestamp" in payload
    assert json.dumps(without, sort_keys=True)  # serializable sans timestamp


def test_sweep_mode_axis_aggregates(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "sweep"
    _write_config(cfg, out)
    rc = main([
        "sweep", "--config", str(cfg), "--axis", "mode",
        "--values", "tail", "top", "random",
    ])
    assert rc == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["tail", "top", "random"]
    assert all("forgetting_mean" in r for r in rows)
    for value in ("tail", "top", "random"):
        assert (out / f"mode_{value}" / "metrics.csv").exists()


def test_sweep_rho_axis_rows(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "sweep"
    _write_config(cfg, out)
    values = ["0.80", "0.90", "0.95", "0.99", "0.999"]
    rc = main(["sweep", "--config", str(cfg), "--axis", "rho", "--values"] + values)
    assert rc == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5


def test_single_value_sweep_matches_run(tmp_path):
    cfg = tmp_path / "c.json"
    run_out = tmp_path / "run"
    sweep_out = tmp_path / "sweep"
    _write_config(cfg, run_out)
    assert main(["run", "--config", str(cfg)]) == 0
    rc = main([
        "sweep", "--config", str(cfg), "--out", str(sweep_out),
        "--axis", "mode", "--values", "tail",
    ])
    assert rc == 0
    with open(sweep_out / "sweep.csv") as fh:
        row = next(csv.DictReader(fh))
    with open(run_out / "metrics.csv") as fh:
        run_row = next(csv.DictReader(fh))
    assert float(row["forgetting_mean"]) == pytest.approx(
        float(run_row["forgetting"])
    )


def test_sweep_bad_axis_value_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    _write_config(cfg, tmp_path / "out")
    rc = main(["sweep", "--config", str(cfg), "--axis", "r", "--values", "four"])
    assert rc == 2


def test_verify_default_battery_passes(capsys):
    assert main(["verify", "--trials", "200"]) == 0
    out = capsys.readouterr().out
    assert "svd_oracle" in out and "PASS" in out and "FAIL" not in out


def test_verify_zero_trials_is_usage_error():
    assert main(["verify", "--trials", "0"]) == 2


def test_verify_corrupted_bound_exits_1(capsys, monkeypatch):
    monkeypatch.setattr(verify_mod, "_BOUND_SCALE", 0.4)
    assert main(["verify", "--trials", "200"]) == 1
    captured = capsys.readouterr()
    assert "interference_bound" in captured.out
    assert "interference_bound" in captured.err


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == 2


def test_nusa_threads_validation(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    _write_config(cfg, tmp_path / "out")
    monkeypatch.setenv("NUSA_THREADS", "zero")
    assert main(["run", "--config", str(cfg)]) == 2


def test_nusa_threads_parallel_matches_serial(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    _write_config(cfg, serial, training={"seeds": [0, 1]})
    assert main(["run", "--config", str(cfg)]) == 0
    _write_config(cfg, parallel, training={"seeds": [0, 1]})
    monkeypatch.setenv("NUSA_THREADS", "2")
    assert main(["run", "--config", str(cfg)]) == 0
    assert (serial / "metrics.csv").read_bytes() == (
        parallel / "metrics.csv"
    ).read_bytes()
