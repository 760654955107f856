"""Dataset traversal, stress application, activation capture and export.

Only sample pairs whose adversarial transcript scores a word error rate
above the threshold are exported: a pair that the model still transcribes
correctly carries no failure signal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import read_wav
from .spac import spac_filename, write_spac
from .stress import StressSpec, apply_stress
from .wer import word_error_rate


@dataclass
class DatasetSample:
    sample_id: str
    audio: np.ndarray
    rate: int
    reference_text: str


@dataclass
class SamplePair:
    """Clean and stressed audio for one utterance, with the adversarial WER."""

    sample_id: str
    clean_audio: np.ndarray
    adv_audio: np.ndarray
    reference_text: str
    wer: float


@dataclass
class ActivationDraft:
    component: str
    layer_index: int
    matrix: np.ndarray


@dataclass
class ExtractionSummary:
    exported: list[str] = field(default_factory=list)
    excluded: list[str] = field(default_factory=list)
    n_files: int = 0


def load_dataset(dataset_dir: str | Path) -> list[DatasetSample]:
    """Samples are wav files with a same-stem .txt transcript next to them."""
    samples = []
    for wav_path in sorted(Path(dataset_dir).glob("*.wav")):
        txt_path = wav_path.with_suffix(".txt")
        if not txt_path.exists():
            continue
        audio, rate = read_wav(wav_path)
        samples.append(
            DatasetSample(
                sample_id=wav_path.stem,
                audio=audio,
                rate=rate,
                reference_text=txt_path.read_text(encoding="utf-8").strip(),
            )
        )
    return samples


def extract_activations(
    backend, audio: np.ndarray, rate: int, reference_text: str
) -> tuple[list[ActivationDraft], float, str]:
    """One draft per (decoder layer x component), plus the WER of the transcript."""
    result = backend.transcribe(audio, rate)
    drafts = [
        ActivationDraft(component=component, layer_index=layer, matrix=matrix)
        for (component, layer), matrix in sorted(result.activations.items())
    ]
    return drafts, word_error_rate(reference_text, result.text), result.text


def run_extraction(
    samples: list[DatasetSample],
    model_id: str,
    backend,
    stress_spec: StressSpec,
    out_dir: str | Path,
    wer_threshold: float = 0.5,
    seed: int = 0,
) -> ExtractionSummary:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = ExtractionSummary()
    index_path = out_dir / "index.jsonl"
    with open(index_path, "w", encoding="utf-8") as index:
        for offset, sample in enumerate(samples):
            pool = [s.audio for s in samples if s.sample_id != sample.sample_id]
            adv_audio = apply_stress(sample.audio, stress_spec, pool, seed=seed + offset)
            pair = SamplePair(
                sample_id=sample.sample_id,
                clean_audio=sample.audio,
                adv_audio=adv_audio,
                reference_text=sample.reference_text,
                wer=0.0,
            )
            clean_drafts, _, _ = extract_activations(
                backend, pair.clean_audio, sample.rate, sample.reference_text
            )
            adv_drafts, adv_wer, adv_text = extract_activations(
                backend, pair.adv_audio, sample.rate, sample.reference_text
            )
            pair.wer = adv_wer
            if not pair.wer > wer_threshold:
                summary.excluded.append(sample.sample_id)
                continue
            files = []
            for condition, drafts in (("clean", clean_drafts), ("adversarial", adv_drafts)):
                for draft in drafts:
                    name = spac_filename(
                        model_id, draft.component, draft.layer_index,
                        sample.sample_id, condition,
                    )
                    write_spac(
                        out_dir / name, model_id, draft.component, draft.layer_index,
                        sample.sample_id, condition, draft.matrix,
                    )
                    files.append(name)
            index.write(
                json.dumps(
                    {
                        "sample_id": sample.sample_id,
                        "wer": pair.wer,
                        "transcript": adv_text,
                        "stress": stress_spec.as_dict(),
                        "n_files": len(files),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            summary.exported.append(sample.sample_id)
            summary.n_files += len(files)
    return summary
