"""Command-line surface: simulate, metrics, compare, phase.

Exit codes: 0 success, 1 domain failure (failed verification, empty
input), 2 usage error. Every output file embeds or sits next to a run
manifest recording all parameters that affect it; with ``--no-timestamp``
identical flags and seed produce byte-identical outputs. The environment
variable ``SPI_THREADS`` caps internal parallelism (0 = auto).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SpiError
from .metrics import compute_metrics
from .pipeline import PhaseSample, aggregate_table, evaluate_pairs, phase_points
from .propagator import (
    ChainConfig,
    Regime,
    build_chain,
    classify_regime,
    expected_alignment,
    random_alignment_baseline,
    verify_dominant_path_bound,
)
from .store import compute_spectrum, read_record, scan_pairs
from .svgplot import render_phase_svg

_BOUND_TOL = 1e-9


def thread_count() -> int:
    raw = os.environ.get("SPI_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _map_ordered(fn, items):
    """Apply fn preserving order, threading when SPI_THREADS allows."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _parse_topk(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad K list {text!r}")
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("K values must be positive")
    return ks


def _parse_tail(text: str) -> tuple[int, int]:
    try:
        start, stop = text.split("..")
        tail = (int(start), int(stop))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tail range {text!r}, expected START..END")
    if tail[0] < 1 or tail[1] < tail[0]:
        raise argparse.ArgumentTypeError(f"bad tail range {text!r}")
    return tail


def _manifest(command: str, parameters: dict, stamp: bool) -> dict:
    manifest = {
        "command": command,
        "parameters": parameters,
        "tool_version": __version__,
    }
    if stamp:
        manifest["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return manifest


def _sanitize(obj):
    """JSON cannot carry non-finite floats; map them to None."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(_sanitize(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_records(input_dir: Path):
    """All parseable records under input_dir with per-file failures."""
    records, failures = [], []
    for path in sorted(input_dir.rglob("*.spac")):
        try:
            records.append((path, read_record(path)))
        except Exception as exc:  # noqa: BLE001
            failures.append((path, exc))
    return records, failures


# --- simulate -----------------------------------------------------------


def _run_lemma(args) -> dict:
    xi = args.xi if args.xi is not None else 1e-3
    kappa = args.kappa if args.kappa is not None else 0.9999
    gain = args.gain if args.gain is not None else 1.0
    trials = args.trials if args.trials is not None else 100

    def one_trial(trial: int):
        cfg = ChainConfig(
            depth=args.depth,
            dim=args.dim,
            xi=xi,
            kappa_target=kappa,
            gain_schedule=(gain,),
            gamma=args.gamma,
            injection_norm=args.injection_norm,
            seed=args.seed + trial,
        )
        return verify_dominant_path_bound(build_chain(cfg), args.depth, args.slack)

    all_verdicts = _map_ordered(one_trial, range(trials))
    per_m = []
    for m_index in range(args.depth):
        ratios = [v[m_index].measured_ratio for v in all_verdicts]
        per_m.append(
            {
                "m": m_index + 1,
                "max_measured_ratio": max(ratios),
                "mean_measured_ratio": sum(ratios) / len(ratios),
                "bound": all_verdicts[0][m_index].bound,
                "satisfied": all(v[m_index].satisfied for v in all_verdicts),
            }
        )
    failures = [
        args.seed + t for t, vs in enumerate(all_verdicts) if not all(v.satisfied for v in vs)
    ]
    return {
        "parameters": {
            "depth": args.depth,
            "dim": args.dim,
            "xi": xi,
            "kappa": kappa,
            "gain": gain,
            "trials": trials,
            "seed": args.seed,
            "slack": args.slack,
        },
        "per_m": per_m,
        "failing_seeds": failures,
        "satisfied": not failures,
    }


def _run_regime(args) -> dict:
    requested = args.regime
    if requested == "attractor":
        xi = args.xi if args.xi is not None else 1e-4
        kappa = args.kappa if args.kappa is not None else 0.9999
        gain = args.gain if args.gain is not None else 1.0 / abs(kappa)
        stationary = False
    else:
        xi = args.xi if args.xi is not None else 1e-3
        kappa = args.kappa if args.kappa is not None else 1.0
        gain = args.gain if args.gain is not None else 0.5 / abs(kappa)
        stationary = True
    cfg = ChainConfig(
        depth=args.depth,
        dim=args.dim,
        xi=xi,
        kappa_target=kappa,
        gain_schedule=(gain,),
        gamma=args.gamma,
        injection_norm=args.injection_norm,
        seed=args.seed,
        stationary=stationary,
    )
    report = classify_regime(build_chain(cfg))
    norms = [norm for _, norm in report.jacobian_norm_curve]
    if requested == "attractor":
        satisfied = (
            report.regime is Regime.ATTRACTOR
            and report.rank1_dominance <= 2.0 * report.predicted_noise_bound
        )
    else:
        mu = report.measured.get("rho_max", float("inf"))
        bound = args.injection_norm / (1.0 - mu) if mu < 1.0 else float("inf")
        satisfied = report.regime is Regime.DISINTEGRATION and max(norms) < bound + _BOUND_TOL
    return {
        "parameters": {
            "requested": requested,
            "depth": args.depth,
            "dim": args.dim,
            "xi": xi,
            "kappa": kappa,
            "gain": gain,
            "gamma": args.gamma,
            "injection_norm": args.injection_norm,
            "seed": args.seed,
            "stationary": stationary,
        },
        "regime": report.regime.value,
        "conditions_met": report.conditions_met,
        "rank1_dominance": report.rank1_dominance,
        "predicted_noise_bound": report.predicted_noise_bound,
        "dominant_alignment": report.dominant_alignment,
        "measured": report.measured,
        "norm_curve": [[layer, norm] for layer, norm in report.jacobian_norm_curve],
        "satisfied": satisfied,
    }


def _run_alignment(args) -> dict:
    trials = args.trials if args.trials is not None else 10000
    mean, se = random_alignment_baseline(args.dim, trials, args.seed)
    exact = expected_alignment(args.dim)
    return {
        "parameters": {"dim": args.dim, "trials": trials, "seed": args.seed},
        "mean": mean,
        "standard_error": se,
        "exact_expectation": exact,
        "asymptotic": math.sqrt(2.0 / (math.pi * args.dim)),
        "satisfied": abs(mean - exact) <= 3.0 * se,
    }


def cmd_simulate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {}
    if args.lemma:
        report["lemma"] = _run_lemma(args)
    if args.regime:
        report["regime"] = _run_regime(args)
    if args.alignment:
        report["alignment"] = _run_alignment(args)
    satisfied = all(section["satisfied"] for section in report.values())
    report["satisfied"] = satisfied
    report["manifest"] = _manifest(
        "simulate",
        {name: section["parameters"] for name, section in report.items() if isinstance(section, dict)},
        stamp=not args.no_timestamp,
    )
    _write_json(out_dir / "simulate.json", report)
    for name in ("lemma", "regime", "alignment"):
        if name in report:
            verdict = "ok" if report[name]["satisfied"] else "FAILED"
            print(f"simulate --{name}: {verdict}")
    return 0 if satisfied else 1


# --- metrics ------------------------------------------------------------


def cmd_metrics(args) -> int:
    input_dir = Path(args.input_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, file_failures = _load_records(input_dir)
    for path, exc in file_failures:
        print(f"warning: skipping {path}: {exc}", file=sys.stderr)
    if not records:
        print("error: no valid container files found", file=sys.stderr)
        return 1

    rows, metric_failures = [], []
    for path, record in records:
        spectrum = compute_spectrum(record)
        for k in args.topk:
            try:
                m = compute_metrics(spectrum, k, args.tail, args.kf_floor)
            except (SpiError, ValueError) as exc:
                metric_failures.append((path, k, exc))
                print(f"warning: {path} at k={k}: {exc}", file=sys.stderr)
                continue
            rows.append(
                [
                    record.model_id,
                    record.component.value,
                    record.layer_index,
                    record.sample_id,
                    record.condition.value,
                    m.k_used,
                    _fmt(m.n_eff),
                    _fmt(m.alpha),
                    _fmt(m.kf),
                ]
            )
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4], r[5]))
    _write_csv(
        out_dir / "metrics.csv",
        ["model_id", "component", "layer_index", "sample_id", "condition", "k", "n_eff", "alpha", "kf"],
        rows,
    )
    manifest = _manifest(
        "metrics",
        {
            "input_dir": str(input_dir),
            "seed": args.seed,
            "topk": list(args.topk),
            "tail": list(args.tail) if args.tail else None,
            "kf_floor": args.kf_floor,
        },
        stamp=not args.no_timestamp,
    )
    _write_json(
        out_dir / "metrics.manifest.json",
        {
            "manifest": manifest,
            "n_files": len(records) + len(file_failures),
            "n_valid_files": len(records),
            "n_rows": len(rows),
            "warnings": len(file_failures) + len(metric_failures),
            "failed_files": [str(p) for p, _ in file_failures],
        },
    )
    print(f"metrics: {len(rows)} rows, {len(file_failures) + len(metric_failures)} warnings")
    return 0


# --- compare ------------------------------------------------------------


def cmd_compare(args) -> int:
    input_dir = Path(args.input_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scan = scan_pairs(input_dir)
    for path, exc in scan.failures:
        print(f"warning: skipping {path}: {exc}", file=sys.stderr)
    if not scan.pairs:
        print("error: no clean/adversarial pairs found", file=sys.stderr)
        return 1

    metrics_rows, failures = evaluate_pairs(scan.pairs, args.topk, args.tail, args.kf_floor)
    for key, k, exc in failures:
        print(f"warning: {exc}", file=sys.stderr)

    csv_rows = []
    detail_cells = []
    for k in args.topk:
        cells = aggregate_table(metrics_rows, k)
        for cell in cells:
            csv_rows.append(
                [
                    cell.model_id,
                    cell.component,
                    cell.k,
                    _fmt(cell.mean_delta.d_n_eff_pct),
                    _fmt(cell.mean_delta.d_log10_kf),
                    _fmt(cell.mean_delta.d_alpha),
                    cell.n_pairs,
                ]
            )
            detail_cells.append(
                {
                    "model": cell.model_id,
                    "component": cell.component,
                    "k": cell.k,
                    "d_n_eff_pct": cell.mean_delta.d_n_eff_pct,
                    "d_log10_kf": cell.mean_delta.d_log10_kf,
                    "d_alpha": cell.mean_delta.d_alpha,
                    "n_pairs": cell.n_pairs,
                    "per_layer": [
                        {
                            "layer_index": layer,
                            "d_n_eff_pct": delta.d_n_eff_pct,
                            "d_log10_kf": delta.d_log10_kf,
                            "d_alpha": delta.d_alpha,
                        }
                        for layer, delta in cell.per_layer
                    ],
                }
            )
    _write_csv(
        out_dir / "cells.csv",
        ["model", "component", "k", "d_n_eff_pct", "d_log10_kf", "d_alpha", "n_pairs"],
        csv_rows,
    )

    # groups whose every pair failed would otherwise vanish silently
    succeeded = {(m.model_id, m.component, m.k) for m in metrics_rows}
    warnings = sorted(
        {
            (key[0], key[1], k)
            for key, k, _ in failures
            if (key[0], key[1], k) not in succeeded
        }
    )
    manifest = _manifest(
        "compare",
        {
            "input_dir": str(input_dir),
            "seed": args.seed,
            "topk": list(args.topk),
            "tail": list(args.tail) if args.tail else None,
            "kf_floor": args.kf_floor,
        },
        stamp=not args.no_timestamp,
    )
    _write_json(
        out_dir / "cells_detail.json",
        {
            "manifest": manifest,
            "cells": detail_cells,
            "n_pairs": len(scan.pairs),
            "unpaired": [str(p) for p, _ in scan.unpaired],
            "failed_files": [str(p) for p, _ in scan.failures],
            "empty_groups": [list(w) for w in warnings],
            "pair_failures": [
                {"key": list(key), "k": k, "error": str(exc)} for key, k, exc in failures
            ],
        },
    )
    print(
        f"compare: {len(scan.pairs)} pairs, {len(csv_rows)} cells, "
        f"{len(scan.unpaired)} unpaired, {len(failures)} failures"
    )
    return 0


# --- phase --------------------------------------------------------------


def cmd_phase(args) -> int:
    input_dir = Path(args.input_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, file_failures = _load_records(input_dir)
    for path, exc in file_failures:
        print(f"warning: skipping {path}: {exc}", file=sys.stderr)

    k = args.topk[0]
    final_layer: dict[str, int] = {}
    for _, record in records:
        final_layer[record.model_id] = max(
            final_layer.get(record.model_id, -1), record.layer_index
        )
    groups: dict[tuple[str, str], list] = {}
    for _, record in records:
        if record.layer_index == final_layer[record.model_id]:
            groups.setdefault((record.model_id, record.condition.value), []).append(record)

    samples = []
    for (model_id, condition) in sorted(groups):
        n_effs, alphas = [], []
        for record in groups[(model_id, condition)]:
            try:
                m = compute_metrics(compute_spectrum(record), k, args.tail, args.kf_floor)
            except (SpiError, ValueError) as exc:
                print(f"warning: {model_id}/{condition}: {exc}", file=sys.stderr)
                continue
            n_effs.append(m.n_eff)
            alphas.append(m.alpha)
        if n_effs:
            samples.append(
                PhaseSample(
                    model_id=model_id,
                    condition=condition,
                    n_eff=sum(n_effs) / len(n_effs),
                    alpha=sum(alphas) / len(alphas),
                )
            )
    if not samples:
        print("error: no final-layer metrics available", file=sys.stderr)
        return 1

    result = phase_points(samples, args.alpha_threshold, args.n_eff_threshold)
    _write_csv(
        out_dir / "phase.csv",
        ["model", "condition", "n_eff", "alpha", "cluster"],
        [
            [p.model_id, p.condition, _fmt(p.n_eff), _fmt(p.alpha), p.cluster.value]
            for p in result.points
        ],
    )
    (out_dir / "phase.svg").write_text(
        render_phase_svg(list(result.points), result.alpha_threshold, result.n_eff_threshold),
        encoding="utf-8",
    )
    manifest = _manifest(
        "phase",
        {
            "input_dir": str(input_dir),
            "seed": args.seed,
            "k": k,
            "tail": list(args.tail) if args.tail else None,
            "kf_floor": args.kf_floor,
            "alpha_threshold": result.alpha_threshold,
            "n_eff_threshold": result.n_eff_threshold,
        },
        stamp=not args.no_timestamp,
    )
    _write_json(out_dir / "phase.manifest.json", {"manifest": manifest, "n_points": len(result.points)})
    print(f"phase: {len(result.points)} points (alpha_threshold={result.alpha_threshold}, "
          f"n_eff_threshold={result.n_eff_threshold:.4g})")
    return 0


# --- parser -------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, topk_default: str) -> None:
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0,
                        help="recorded in the manifest; these commands are deterministic")
    parser.add_argument("--topk", type=_parse_topk, default=_parse_topk(topk_default),
                        help=f"comma-separated truncation levels (default {topk_default})")
    parser.add_argument("--tail", type=_parse_tail, default=None,
                        help="alpha fit range START..END (default 2..K per level)")
    parser.add_argument("--kf-floor", type=float, default=None,
                        help="absolute eigenvalue floor (default: 1e-12 relative to the top)")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp for byte-identical reruns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spi",
        description="Spectral propagation instability toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthetic chain experiments")
    sim.add_argument("--lemma", action="store_true",
                     help="verify the dominant-path error bound over random chains")
    sim.add_argument("--regime", choices=("attractor", "dispersive"),
                     help="build a preset chain and classify its failure mode")
    sim.add_argument("--alignment", action="store_true",
                     help="Monte Carlo baseline for random direction alignment")
    sim.add_argument("--depth", type=int, default=24)
    sim.add_argument("--dim", type=int, default=64)
    sim.add_argument("--xi", type=float, default=None, help="spectral gap (per-mode default)")
    sim.add_argument("--kappa", type=float, default=None, help="alignment (per-mode default)")
    sim.add_argument("--gamma", type=float, default=0.8)
    sim.add_argument("--gain", type=float, default=None, help="sigma1 per layer (per-mode default)")
    sim.add_argument("--injection-norm", type=float, default=1.0)
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--slack", type=float, default=2.0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--no-timestamp", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    met = sub.add_parser("metrics", help="per-record spectral metrics from container files")
    met.add_argument("input_dir")
    _add_common(met, "10,50")
    met.set_defaults(func=cmd_metrics)

    cmp_ = sub.add_parser("compare", help="clean-vs-adversarial delta tables")
    cmp_.add_argument("input_dir")
    _add_common(cmp_, "10,50")
    cmp_.set_defaults(func=cmd_compare)

    pha = sub.add_parser("phase", help="final-layer phase diagram")
    pha.add_argument("input_dir")
    _add_common(pha, "50")
    pha.add_argument("--alpha-threshold", type=float, default=9.0)
    pha.add_argument("--n-eff-threshold", type=float, default=None)
    pha.set_defaults(func=cmd_phase)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "simulate" and not (args.lemma or args.regime or args.alignment):
        print("error: choose at least one of --lemma, --regime, --alignment", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
