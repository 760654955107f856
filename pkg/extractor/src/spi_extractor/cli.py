"""Command line: stress a dataset, capture decoder activations, export SPAC files."""
from __future__ import annotations

import argparse
import sys

from .extract import load_dataset, run_extraction
from .model import MODEL_SPECS, BackendUnavailableError, get_backend
from .stress import StressKind, StressSpec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spi-extract",
        description="Generate stressed audio, run a speech model with decoder "
        "hooks, filter by word error rate and export activation containers.",
    )
    parser.add_argument("--model", required=True, choices=sorted(MODEL_SPECS))
    parser.add_argument("--dataset-dir", required=True,
                        help="directory of .wav files with sibling .txt transcripts")
    parser.add_argument("--stress", required=True, choices=[k.value for k in StressKind])
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--wer-threshold", type=float, default=0.5)
    parser.add_argument("--backend", choices=("auto", "whisper", "simulated"), default="auto")
    parser.add_argument("--stretch-factor", type=float, default=3.5)
    parser.add_argument("--n-speakers", type=int, default=6)
    parser.add_argument("--snr-db", type=float, default=0.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = StressSpec(
            kind=StressKind(args.stress),
            stretch_factor=args.stretch_factor,
            n_speakers=args.n_speakers,
            snr_db=args.snr_db,
        )
        backend = get_backend(args.backend, args.model)
        samples = load_dataset(args.dataset_dir)
        if not samples:
            print("error: no wav/txt samples found", file=sys.stderr)
            return 1
        summary = run_extraction(
            samples, args.model, backend, spec, args.out,
            wer_threshold=args.wer_threshold, seed=args.seed,
        )
    except BackendUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"exported {len(summary.exported)} sample(s) "
        f"({summary.n_files} files), excluded {len(summary.excluded)} "
        f"with WER <= {args.wer_threshold}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
