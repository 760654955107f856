import numpy as np
import pytest

from spi_extractor.audio import write_wav
from spi_extractor.extract import DatasetSample
from spi_extractor.model import SAMPLE_RATE, encode_text_to_audio

SENTENCES = [
    "the a and of to in",
    "was he she it that his",
    "her with for as had you",
    "not be at on by but",
    "the of and a to in was",
    "he that she it his her with",
    "for you as had not be at",
]


@pytest.fixture(scope="session")
def tone_samples():
    return [
        DatasetSample(
            sample_id=f"utt{i}",
            audio=encode_text_to_audio(text),
            rate=SAMPLE_RATE,
            reference_text=text,
        )
        for i, text in enumerate(SENTENCES)
    ]


@pytest.fixture
def dataset_dir(tmp_path, tone_samples):
    for sample in tone_samples:
        write_wav(tmp_path / f"{sample.sample_id}.wav", sample.audio, sample.rate)
        (tmp_path / f"{sample.sample_id}.txt").write_text(sample.reference_text)
    return tmp_path
