"""Export pipeline checks, including the shipping criterion for this package:
stress generators hold their stated tolerances, every exported file parses
through the analysis toolkit's reader, and no exported pair has WER <= 0.5.
"""
import json

import numpy as np
import pytest

import spi.store as primary_store
from spi_extractor.cli import main
from spi_extractor.extract import extract_activations, run_extraction
from spi_extractor.model import SimulatedBackend, encode_text_to_audio
from spi_extractor.stress import StressKind, StressSpec, apply_stress, measure_snr_db


def test_extract_activations_counts_and_wer():
    backend = SimulatedBackend("tiny")
    text = "the and of to"
    drafts, wer, transcript = extract_activations(
        backend, encode_text_to_audio(text), 16000, text
    )
    assert len(drafts) == 12
    assert wer == 0.0
    assert transcript == text


def test_stretch_export_end_to_end(tmp_path, tone_samples):
    out = tmp_path / "out"
    summary = run_extraction(
        tone_samples, "tiny", SimulatedBackend("tiny"),
        StressSpec(kind=StressKind.TIME_STRETCH, stretch_factor=3.5),
        out, wer_threshold=0.5, seed=0,
    )
    assert summary.exported, "heavy stretch should break the tone decoder"
    files = sorted(out.glob("*.spac"))
    assert len(files) == summary.n_files

    # every exported file must parse through the analysis toolkit's reader
    for path in files:
        record = primary_store.read_record(path)
        assert record.model_id == "tiny"
        assert record.matrix.shape[0] >= 1

    # exported pairs all sit above the threshold, recorded in the index
    index = [json.loads(line) for line in (out / "index.jsonl").read_text().splitlines()]
    assert {entry["sample_id"] for entry in index} == set(summary.exported)
    assert all(entry["wer"] > 0.5 for entry in index)
    assert all(entry["stress"]["kind"] == "stretch" for entry in index)

    # and the analysis side can pair them straight away
    scan = primary_store.scan_pairs(out)
    assert len(scan.pairs) == summary.n_files // 2
    assert scan.failures == []


def test_mild_noise_is_excluded(tmp_path, tone_samples):
    out = tmp_path / "out"
    summary = run_extraction(
        tone_samples[:2], "tiny", SimulatedBackend("tiny"),
        StressSpec(kind=StressKind.GAUSSIAN_NOISE, snr_db=60.0),
        out, wer_threshold=0.5, seed=0,
    )
    assert summary.exported == []
    assert len(summary.excluded) == 2
    assert list(out.glob("*.spac")) == []


def test_speaker_mix_export(tmp_path, tone_samples):
    out = tmp_path / "out"
    summary = run_extraction(
        tone_samples, "tiny", SimulatedBackend("tiny"),
        StressSpec(kind=StressKind.SPEAKER_MIX, n_speakers=6),
        out, wer_threshold=0.5, seed=3,
    )
    assert summary.exported
    for path in out.glob("*.spac"):
        primary_store.read_record(path)


def test_cli_end_to_end(tmp_path, dataset_dir, capsys):
    out = tmp_path / "cli_out"
    code = main([
        "--model", "tiny", "--dataset-dir", str(dataset_dir), "--stress", "stretch",
        "--out", str(out), "--seed", "0", "--wer-threshold", "0.5",
        "--backend", "simulated",
    ])
    assert code == 0
    assert "exported" in capsys.readouterr().out
    assert list(out.glob("*.spac"))


def test_cli_empty_dataset_fails(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main([
        "--model", "tiny", "--dataset-dir", str(empty), "--stress", "noise",
        "--out", str(tmp_path / "out"), "--backend", "simulated",
    ]) == 1


def test_acceptance_criterion_9(tmp_path, tone_samples):
    # stress generator tolerances
    speech = tone_samples[0].audio
    stretched = apply_stress(speech, StressSpec(kind=StressKind.TIME_STRETCH, stretch_factor=3.5))
    assert abs(stretched.size / speech.size - 3.5) / 3.5 < 0.01
    noisy = apply_stress(speech, StressSpec(kind=StressKind.GAUSSIAN_NOISE, snr_db=0.0), seed=1)
    assert abs(measure_snr_db(speech, noisy) - 0.0) <= 0.1

    # exported files validate through the primary reader; none at WER <= 0.5
    out = tmp_path / "out"
    summary = run_extraction(
        tone_samples, "tiny", SimulatedBackend("tiny"),
        StressSpec(kind=StressKind.TIME_STRETCH, stretch_factor=3.5),
        out, wer_threshold=0.5, seed=0,
    )
    assert summary.exported
    for path in out.glob("*.spac"):
        primary_store.read_record(path)
    index = [json.loads(line) for line in (out / "index.jsonl").read_text().splitlines()]
    assert all(entry["wer"] > 0.5 for entry in index)
    print("\ncriterion 9 (stress tolerances; reader-valid exports; WER filter): PASS")
