import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import FIXTURE_DIR, make_record
from spi.cli import main
from spi.store import record_filename, write_record


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# --- exit-code contract ---

def test_no_subcommand_is_usage_error():
    assert main([]) == 2


def test_simulate_without_mode_is_usage_error(capsys):
    assert main(["simulate", "--out", "/tmp/unused-spi-out"]) == 2
    assert "choose at least one" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert main(["simulate", "--lemma", "--out", "/tmp/x", "--bogus"]) == 2


def test_metrics_empty_dir_is_domain_failure(tmp_path):
    out = tmp_path / "out"
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["metrics", str(empty), "--out", str(out)]) == 1


def test_compare_without_pairs_is_domain_failure(tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    write_record(make_record(np.ones((4, 4)), condition="clean"), data / "only_clean.spac")
    assert main(["compare", str(data), "--out", str(tmp_path / "out")]) == 1


def test_phase_without_final_layer_data_is_domain_failure(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["phase", str(empty), "--out", str(tmp_path / "out")]) == 1


# --- simulate ---

def test_simulate_lemma_small_run(tmp_path):
    out = tmp_path / "out"
    code = main([
        "simulate", "--lemma", "--depth", "6", "--dim", "8", "--trials", "3",
        "--seed", "7", "--out", str(out), "--no-timestamp",
    ])
    assert code == 0
    report = json.loads((out / "simulate.json").read_text())
    assert report["satisfied"] is True
    assert len(report["lemma"]["per_m"]) == 6
    assert report["manifest"]["parameters"]["lemma"]["trials"] == 3
    assert "timestamp" not in report["manifest"]


def test_simulate_regime_attractor(tmp_path):
    out = tmp_path / "out"
    code = main([
        "simulate", "--regime", "attractor", "--depth", "16", "--dim", "32",
        "--seed", "1", "--out", str(out), "--no-timestamp",
    ])
    assert code == 0
    report = json.loads((out / "simulate.json").read_text())
    assert report["regime"]["regime"] == "attractor"
    assert report["regime"]["rank1_dominance"] <= 2 * report["regime"]["predicted_noise_bound"]


def test_simulate_regime_dispersive(tmp_path):
    out = tmp_path / "out"
    code = main([
        "simulate", "--regime", "dispersive", "--depth", "40", "--dim", "16",
        "--out", str(out), "--no-timestamp",
    ])
    assert code == 0
    report = json.loads((out / "simulate.json").read_text())
    assert report["regime"]["regime"] == "disintegration"
    norms = [n for _, n in report["regime"]["norm_curve"]]
    assert max(norms) < 2.0


def test_simulate_alignment(tmp_path):
    out = tmp_path / "out"
    code = main([
        "simulate", "--alignment", "--dim", "64", "--trials", "2000",
        "--seed", "0", "--out", str(out), "--no-timestamp",
    ])
    assert code == 0
    report = json.loads((out / "simulate.json").read_text())
    section = report["alignment"]
    assert abs(section["mean"] - section["exact_expectation"]) <= 3 * section["standard_error"]


def test_simulate_timestamp_present_by_default(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--alignment", "--dim", "8", "--trials", "200",
                 "--out", str(out)]) == 0
    report = json.loads((out / "simulate.json").read_text())
    assert "timestamp" in report["manifest"]


# --- metrics ---

def test_metrics_single_record_single_k(tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    record = make_record(np.diag(np.arange(20, 0, -1.0)))
    write_record(record, data / record_filename(record))
    out = tmp_path / "out"
    assert main(["metrics", str(data), "--out", str(out), "--topk", "10"]) == 0
    rows = read_csv(out / "metrics.csv")
    assert len(rows) == 1
    assert set(rows[0]) == {
        "model_id", "component", "layer_index", "sample_id", "condition",
        "k", "n_eff", "alpha", "kf",
    }
    assert rows[0]["k"] == "10"


def test_metrics_two_k_levels_give_two_rows(tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    record = make_record(np.diag(np.arange(20, 0, -1.0)))
    write_record(record, data / record_filename(record))
    out = tmp_path / "out"
    assert main(["metrics", str(data), "--out", str(out), "--topk", "10,15"]) == 0
    assert len(read_csv(out / "metrics.csv")) == 2


def test_metrics_corrupt_file_among_valid_is_warning_not_failure(tmp_path, capsys):
    data = tmp_path / "data"
    data.mkdir()
    record = make_record(np.diag(np.arange(20, 0, -1.0)))
    write_record(record, data / record_filename(record))
    (data / "corrupt.spac").write_bytes(b"XXXX not a container")
    out = tmp_path / "out"
    assert main(["metrics", str(data), "--out", str(out), "--topk", "10"]) == 0
    err = capsys.readouterr().err
    assert "corrupt.spac" in err
    manifest = json.loads((out / "metrics.manifest.json").read_text())
    assert manifest["warnings"] == 1
    assert len(read_csv(out / "metrics.csv")) == 1


# --- compare and phase on the committed fixtures ---

def test_compare_on_fixtures(tmp_path, fixture_dir):
    out = tmp_path / "out"
    assert main(["compare", str(fixture_dir), "--out", str(out), "--no-timestamp"]) == 0
    rows = read_csv(out / "cells.csv")
    assert list(rows[0]) == [
        "model", "component", "k", "d_n_eff_pct", "d_log10_kf", "d_alpha", "n_pairs",
    ]
    cell = next(r for r in rows if r["model"] == "small-sim"
                and r["component"] == "cross_attn" and r["k"] == "50")
    assert float(cell["d_n_eff_pct"]) == pytest.approx(-13.40, abs=0.01)
    assert int(cell["n_pairs"]) == 4
    detail = json.loads((out / "cells_detail.json").read_text())
    layers = {
        c["component"]: [p["layer_index"] for p in c["per_layer"]]
        for c in detail["cells"] if c["model"] == "small-sim" and c["k"] == 50
    }
    assert layers["cross_attn"] == [0, 1]


def test_phase_on_fixtures(tmp_path, fixture_dir):
    out = tmp_path / "out"
    assert main(["phase", str(fixture_dir), "--out", str(out), "--no-timestamp"]) == 0
    rows = {(r["model"], r["condition"]): r for r in read_csv(out / "phase.csv")}
    assert rows[("large-sim", "adversarial")]["cluster"] == "attractor"
    assert rows[("small-sim", "clean")]["cluster"] == "dispersive"
    svg = (out / "phase.svg").read_text()
    assert svg.startswith("<svg")
    assert "#d62728" in svg and "#2ca02c" in svg


def test_phase_single_point_and_all_unassigned(tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    record = make_record(np.diag(np.arange(20, 0, -1.0)), model_id="solo")
    write_record(record, data / record_filename(record))
    out = tmp_path / "out"
    assert main(["phase", str(data), "--out", str(out), "--topk", "10",
                 "--n-eff-threshold", "100", "--no-timestamp"]) == 0
    rows = read_csv(out / "phase.csv")
    assert len(rows) == 1
    assert rows[0]["cluster"] == "unassigned"
    assert (out / "phase.svg").exists()


# --- reproducibility ---

def run_twice(args_builder, tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(args_builder(out)) == 0
        outputs.append(out)
    return outputs


def test_simulate_reruns_are_byte_identical(tmp_path):
    a, b = run_twice(
        lambda out: ["simulate", "--lemma", "--alignment", "--depth", "5", "--dim", "8",
                     "--trials", "120", "--seed", "11", "--out", str(out), "--no-timestamp"],
        tmp_path,
    )
    assert (a / "simulate.json").read_bytes() == (b / "simulate.json").read_bytes()


def test_simulate_bad_parameter_is_usage_error(capsys):
    # alignment needs at least 100 trials
    assert main(["simulate", "--alignment", "--dim", "8", "--trials", "3",
                 "--out", "/tmp/unused-spi-out"]) == 2
    assert "trials" in capsys.readouterr().err


def test_compare_reruns_are_byte_identical(tmp_path, fixture_dir):
    a, b = run_twice(
        lambda out: ["compare", str(fixture_dir), "--out", str(out), "--no-timestamp"],
        tmp_path,
    )
    assert (a / "cells.csv").read_bytes() == (b / "cells.csv").read_bytes()
    assert (a / "cells_detail.json").read_bytes() == (b / "cells_detail.json").read_bytes()


def test_thread_cap_does_not_change_output(tmp_path, fixture_dir, monkeypatch):
    args = lambda out: ["metrics", str(fixture_dir), "--out", str(out), "--no-timestamp"]
    monkeypatch.setenv("SPI_THREADS", "1")
    out1 = tmp_path / "t1"
    assert main(args(out1)) == 0
    monkeypatch.setenv("SPI_THREADS", "4")
    out4 = tmp_path / "t4"
    assert main(args(out4)) == 0
    assert (out1 / "metrics.csv").read_bytes() == (out4 / "metrics.csv").read_bytes()


def test_compare_reports_group_with_no_valid_metrics_as_warning(tmp_path, capsys):
    data = tmp_path / "data"
    data.mkdir()
    # one healthy pair and one whose adversarial record has a single row,
    # which cannot support the tail fit at any K
    healthy_clean = make_record(np.diag(np.arange(20, 0, -1.0)), model_id="ok", condition="clean")
    healthy_adv = make_record(np.diag(np.arange(20, 0, -1.0)) * 0.5, model_id="ok",
                              condition="adversarial")
    broken_clean = make_record(np.diag(np.arange(20, 0, -1.0)), model_id="bad", condition="clean")
    broken_adv = make_record(np.ones((1, 20)), model_id="bad", condition="adversarial")
    for record in (healthy_clean, healthy_adv, broken_clean, broken_adv):
        write_record(record, data / record_filename(record))
    out = tmp_path / "out"
    assert main(["compare", str(data), "--out", str(out), "--topk", "10",
                 "--no-timestamp"]) == 0
    rows = read_csv(out / "cells.csv")
    assert {r["model"] for r in rows} == {"ok"}  # no zero-filled row for "bad"
    detail = json.loads((out / "cells_detail.json").read_text())
    assert ["bad", "cross_attn", 10] in detail["empty_groups"]
    assert len(detail["pair_failures"]) == 1


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "spi", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.1.0"
