"""Speech model backends with per-layer decoder activation capture.

Two interchangeable backends produce a transcript plus one activation
matrix (generated tokens x feature dim) per decoder layer and component:

* :class:`WhisperBackend` drives a pretrained Whisper checkpoint through
  forward hooks (requires the ``whisper`` extra: torch + transformers).
* :class:`SimulatedBackend` is a self-contained stand-in for offline use:
  audio is treated as a tone code (one sinusoid per word), decoded by FFT
  peak-picking, and pushed through a fixed seeded decoder stack. The
  coupling between audio and transcript is real, so acoustic stress
  degrades its word error rate the same way it would degrade a real
  model's.

Both decode greedily, so identical audio yields identical activations.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .wer import normalize_words

SAMPLE_RATE = 16000
WORD_SAMPLES = 1280  # 80 ms tone
GAP_SAMPLES = 320  # 20 ms silence
CELL_SAMPLES = WORD_SAMPLES + GAP_SAMPLES
BASE_FREQ = 500.0
FREQ_STEP = 60.0

VOCAB = (
    "the", "a", "and", "of", "to", "in", "was", "he", "she", "it",
    "that", "his", "her", "with", "for", "as", "had", "you", "not", "be",
    "at", "on", "by", "but",
)
START_TOKEN = "<s>"
UNKNOWN_TOKEN = "???"

# (decoder layers, feature dim) per supported model scale
MODEL_SPECS = {
    "tiny": (4, 384),
    "small": (12, 768),
    "large-v3-turbo": (4, 1280),
}

COMPONENTS = ("cross_attn", "self_attn", "ffn")


@dataclass
class TranscriptionResult:
    text: str
    # (component, layer_index) -> tokens x dim matrix
    activations: dict[tuple[str, int], np.ndarray]


class BackendUnavailableError(RuntimeError):
    pass


def _stable_seed(*parts: str) -> int:
    digest = hashlib.sha256("/".join(parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def encode_text_to_audio(text: str, rate: int = SAMPLE_RATE) -> np.ndarray:
    """Synthesize the tone code for ``text``; inverse of the simulated decoder."""
    if rate != SAMPLE_RATE:
        raise ValueError(f"tone codec is defined at {SAMPLE_RATE} Hz")
    pieces = []
    ramp = np.linspace(0.0, 1.0, 80)
    for word in normalize_words(text):
        try:
            index = VOCAB.index(word)
        except ValueError:
            raise ValueError(f"word {word!r} is outside the codec vocabulary") from None
        t = np.arange(WORD_SAMPLES) / rate
        tone = 0.5 * np.sin(2.0 * np.pi * (BASE_FREQ + FREQ_STEP * index) * t)
        tone[:80] *= ramp
        tone[-80:] *= ramp[::-1]
        pieces.append(tone)
        pieces.append(np.zeros(GAP_SAMPLES))
    if not pieces:
        raise ValueError("cannot encode empty text")
    return np.concatenate(pieces)


def _decode_windows(audio: np.ndarray, rate: int) -> tuple[list[str], list[np.ndarray]]:
    """Tokens and their magnitude spectra, one per non-silent analysis window."""
    scale = rate / SAMPLE_RATE
    cell = max(1, int(round(CELL_SAMPLES * scale)))
    word_len = max(8, int(round(WORD_SAMPLES * scale)))
    tokens: list[str] = []
    spectra: list[np.ndarray] = []
    for start in range(0, audio.size, cell):
        window = audio[start:start + word_len]
        if window.size < 8:
            continue
        if float(np.sqrt(np.mean(window**2))) < 1e-4:
            continue
        magnitude = np.abs(np.fft.rfft(window, n=word_len))
        magnitude[0] = 0.0
        peak_bin = int(np.argmax(magnitude))
        freq = peak_bin * rate / word_len
        index = int(round((freq - BASE_FREQ) / FREQ_STEP))
        if 0 <= index < len(VOCAB) and abs(freq - (BASE_FREQ + FREQ_STEP * index)) <= 25.0:
            tokens.append(VOCAB[index])
        else:
            tokens.append(UNKNOWN_TOKEN)
        spectra.append(magnitude)
    return tokens, spectra


class SimulatedBackend:
    """Deterministic tone-codec decoder with a seeded activation stack."""

    def __init__(self, model_id: str):
        if model_id not in MODEL_SPECS:
            raise ValueError(f"unknown model {model_id!r}")
        self.model_id = model_id
        self.n_layers, self.dim = MODEL_SPECS[model_id]

    def _token_id(self, token: str) -> int:
        if token == START_TOKEN:
            return len(VOCAB)
        if token == UNKNOWN_TOKEN:
            return len(VOCAB) + 1
        return VOCAB.index(token)

    def transcribe(self, audio: np.ndarray, rate: int = SAMPLE_RATE) -> TranscriptionResult:
        audio = np.asarray(audio, dtype=np.float64)
        tokens, spectra = _decode_windows(audio, rate)
        all_tokens = [START_TOKEN] + tokens
        n_tokens = len(all_tokens)

        embed_rng = np.random.default_rng(_stable_seed(self.model_id, "embeddings"))
        embeddings = embed_rng.standard_normal((len(VOCAB) + 2, self.dim)) / np.sqrt(self.dim)

        # per-token acoustic features: projected window spectra; start token
        # hears the pooled spectrum
        n_bins = WORD_SAMPLES // 2 + 1
        proj = embed_rng.standard_normal((n_bins, self.dim)) / np.sqrt(n_bins)
        feats = np.zeros((n_tokens, self.dim))
        for i, spectrum in enumerate(spectra, start=1):
            padded = np.zeros(n_bins)
            padded[: min(n_bins, spectrum.size)] = spectrum[:n_bins]
            feats[i] = padded @ proj
        if spectra:
            feats[0] = feats[1:].mean(axis=0)

        positions = np.arange(n_tokens)[:, None] / 64.0
        phase = np.arange(self.dim)[None, :]
        hidden = embeddings[[self._token_id(t) for t in all_tokens]] + 0.1 * np.sin(
            positions + phase
        )

        activations: dict[tuple[str, int], np.ndarray] = {}
        for layer in range(self.n_layers):
            rng = np.random.default_rng(_stable_seed(self.model_id, f"layer{layer}"))
            w_cross = rng.standard_normal((self.dim, self.dim)) / np.sqrt(self.dim)
            w_self = rng.standard_normal((self.dim, self.dim)) / np.sqrt(self.dim)
            w_ffn = rng.standard_normal((self.dim, self.dim)) / np.sqrt(self.dim)
            cross = np.tanh(feats @ w_cross + hidden)
            self_out = np.tanh((cross + hidden) @ w_self)
            ffn = np.tanh(self_out @ w_ffn)
            hidden = hidden + ffn
            activations[("cross_attn", layer)] = cross
            activations[("self_attn", layer)] = self_out
            activations[("ffn", layer)] = ffn

        return TranscriptionResult(text=" ".join(tokens), activations=activations)


class WhisperBackend:
    """Pretrained Whisper decoder with forward hooks; needs torch + transformers."""

    CHECKPOINTS = {
        "tiny": "openai/whisper-tiny",
        "small": "openai/whisper-small",
        "large-v3-turbo": "openai/whisper-large-v3-turbo",
    }

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch  # noqa: F401
            from transformers import WhisperForConditionalGeneration, WhisperProcessor
        except ImportError as exc:
            raise BackendUnavailableError(
                "whisper backend needs the optional torch/transformers dependencies"
            ) from exc
        if model_id not in self.CHECKPOINTS:
            raise ValueError(f"unknown model {model_id!r}")
        self.model_id = model_id
        self.device = device
        self.processor = WhisperProcessor.from_pretrained(self.CHECKPOINTS[model_id])
        self.model = (
            WhisperForConditionalGeneration.from_pretrained(self.CHECKPOINTS[model_id])
            .to(device)
            .eval()
        )

    def transcribe(self, audio: np.ndarray, rate: int = SAMPLE_RATE) -> TranscriptionResult:
        import torch

        captured: dict[tuple[str, int], list] = {}

        def keep(component: str, layer: int):
            def hook(_module, _inputs, output):
                tensor = output[0] if isinstance(output, tuple) else output
                captured.setdefault((component, layer), []).append(
                    tensor.detach().to("cpu", torch.float32)[0]
                )

            return hook

        handles = []
        for layer_index, layer in enumerate(self.model.model.decoder.layers):
            handles.append(layer.encoder_attn.register_forward_hook(keep("cross_attn", layer_index)))
            handles.append(layer.self_attn.register_forward_hook(keep("self_attn", layer_index)))
            handles.append(layer.fc2.register_forward_hook(keep("ffn", layer_index)))
        try:
            features = self.processor(
                audio, sampling_rate=rate, return_tensors="pt"
            ).input_features.to(self.device)
            with torch.no_grad():
                generated = self.model.generate(features, do_sample=False)
            text = self.processor.batch_decode(generated, skip_special_tokens=True)[0]
        finally:
            for handle in handles:
                handle.remove()

        activations = {
            key: torch.cat(chunks, dim=0).numpy() for key, chunks in captured.items()
        }
        return TranscriptionResult(text=text.strip(), activations=activations)


def get_backend(name: str, model_id: str):
    if name == "simulated":
        return SimulatedBackend(model_id)
    if name == "whisper":
        return WhisperBackend(model_id)
    if name == "auto":
        try:
            return WhisperBackend(model_id)
        except BackendUnavailableError:
            return SimulatedBackend(model_id)
    raise ValueError(f"unknown backend {name!r}")
