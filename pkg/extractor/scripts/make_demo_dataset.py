#!/usr/bin/env python3
"""Synthesize a tone-coded demo dataset for offline extraction runs.

Writes wav/txt sample pairs that the simulated backend transcribes
perfectly when clean, so the whole stress -> transcribe -> filter ->
export pipeline can run without model weights or real speech.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from spi_extractor.audio import write_wav
from spi_extractor.model import SAMPLE_RATE, VOCAB, encode_text_to_audio

import numpy as np


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--samples", type=int, default=8)
    parser.add_argument("--words", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(args.samples):
        words = rng.choice(len(VOCAB), size=args.words, replace=True)
        text = " ".join(VOCAB[w] for w in words)
        write_wav(out / f"demo{i:03d}.wav", encode_text_to_audio(text), SAMPLE_RATE)
        (out / f"demo{i:03d}.txt").write_text(text + "\n", encoding="utf-8")
    print(f"wrote {args.samples} samples to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
