"""Adversarial audio generation and decoder activation export."""

__version__ = "0.1.0"

from .extract import (  # noqa: F401
    ActivationDraft,
    DatasetSample,
    ExtractionSummary,
    SamplePair,
    extract_activations,
    load_dataset,
    run_extraction,
)
from .model import (  # noqa: F401
    MODEL_SPECS,
    SimulatedBackend,
    TranscriptionResult,
    WhisperBackend,
    encode_text_to_audio,
    get_backend,
)
from .stress import StressKind, StressSpec, apply_stress, measure_snr_db  # noqa: F401
from .wer import normalize_words, word_error_rate  # noqa: F401
