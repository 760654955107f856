"""Acoustic stress generators: time stretch, speaker mixing, additive noise.

All three are deterministic given (audio, spec, seed) and expose exactly
measurable properties: the stretch changes duration by the requested
factor, the noise lands on the requested signal-to-noise ratio, and the
mix sums the requested number of energy-equalized utterances.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class StressKind(enum.Enum):
    TIME_STRETCH = "stretch"
    SPEAKER_MIX = "mix"
    GAUSSIAN_NOISE = "noise"


@dataclass(frozen=True)
class StressSpec:
    """Which stress to apply and how hard."""

    kind: StressKind
    stretch_factor: float = 3.5
    n_speakers: int = 6
    snr_db: float = 0.0

    def __post_init__(self):
        # factor 1.0 is the degenerate pass-through
        if self.stretch_factor < 1.0:
            raise ValueError("stretch_factor must be >= 1")
        if self.n_speakers < 2:
            raise ValueError("n_speakers must be >= 2")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "stretch_factor": self.stretch_factor,
            "n_speakers": self.n_speakers,
            "snr_db": self.snr_db,
        }


def _power(samples: np.ndarray) -> float:
    return float(np.mean(samples**2))


def measure_snr_db(signal: np.ndarray, noisy: np.ndarray) -> float:
    """SNR of ``noisy`` against the known clean ``signal`` (same length)."""
    noise = noisy[: signal.size] - signal
    return 10.0 * math.log10(_power(signal) / _power(noise))


def _time_stretch(audio: np.ndarray, factor: float) -> np.ndarray:
    out_len = int(round(audio.size * factor))
    positions = np.arange(out_len) / factor
    return np.interp(positions, np.arange(audio.size), audio)


def _gaussian_noise(audio: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    signal_power = _power(audio)
    if signal_power == 0.0:
        raise ValueError("silent input: signal-to-noise ratio is undefined")
    noise = rng.standard_normal(audio.size)
    target_power = signal_power / (10.0 ** (snr_db / 10.0))
    noise *= math.sqrt(target_power / _power(noise))
    return audio + noise


def _speaker_mix(
    audio: np.ndarray, n_speakers: int, pool: list[np.ndarray], rng: np.random.Generator
) -> np.ndarray:
    if len(pool) < n_speakers - 1:
        raise ValueError(
            f"mix pool holds {len(pool)} utterances; need >= {n_speakers - 1}"
        )
    rms = math.sqrt(_power(audio))
    if rms == 0.0:
        raise ValueError("silent input: cannot equalize mix energy")
    picks = rng.choice(len(pool), size=n_speakers - 1, replace=False)
    mix = audio.copy()
    for index in picks:
        other = pool[int(index)]
        if other.size < audio.size:
            reps = -(-audio.size // other.size)
            other = np.tile(other, reps)
        other = other[: audio.size]
        other_rms = math.sqrt(_power(other))
        if other_rms == 0.0:
            raise ValueError("silent utterance in mix pool")
        mix += other * (rms / other_rms)
    peak = float(np.max(np.abs(mix)))
    if peak > 0.99:
        mix *= 0.99 / peak
    return mix


def apply_stress(
    audio: np.ndarray,
    spec: StressSpec,
    mix_pool: list[np.ndarray] | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Stressed copy of ``audio``; bit-identical for identical inputs and seed."""
    audio = np.asarray(audio, dtype=np.float64)
    if audio.size == 0:
        raise ValueError("empty input audio")
    rng = np.random.default_rng(seed)
    if spec.kind is StressKind.TIME_STRETCH:
        return _time_stretch(audio, spec.stretch_factor)
    if spec.kind is StressKind.GAUSSIAN_NOISE:
        return _gaussian_noise(audio, spec.snr_db, rng)
    return _speaker_mix(audio, spec.n_speakers, mix_pool or [], rng)
