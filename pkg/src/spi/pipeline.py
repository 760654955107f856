"""Aggregation of per-pair spectral shifts into summary artifacts.

Per record pair the three observables are computed on the clean and the
adversarial spectrum and differenced; cells average those deltas over all
pairs and layers of a (model, component) group, layer curves keep the
depth profile, and phase points classify final-layer geometry into a
dispersive or attractor cluster.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import InsufficientDepthError, PairMetricsError, SpiError
from .metrics import MetricDelta, SpectralMetrics, compute_metrics, metric_delta
from .store import RecordPair, compute_spectrum


@dataclass(frozen=True)
class PairMetrics:
    """One pair's metrics at one truncation level, with its identity."""

    model_id: str
    component: str
    layer_index: int
    sample_id: str
    k: int
    clean: SpectralMetrics
    adv: SpectralMetrics
    delta: MetricDelta


@dataclass(frozen=True)
class CellAggregate:
    """Mean shift for one (model, component, K) cell of the delta table."""

    model_id: str
    component: str
    k: int
    mean_delta: MetricDelta
    n_pairs: int
    per_layer: tuple[tuple[int, MetricDelta], ...]


class Cluster(enum.Enum):
    DISPERSIVE = "dispersive"
    ATTRACTOR = "attractor"
    UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class PhaseSample:
    """Final-layer geometry of one (model, condition) group."""

    model_id: str
    condition: str
    n_eff: float
    alpha: float


@dataclass(frozen=True)
class PhasePoint:
    model_id: str
    condition: str
    n_eff: float
    alpha: float
    cluster: Cluster


@dataclass(frozen=True)
class PhaseResult:
    points: tuple[PhasePoint, ...]
    alpha_threshold: float
    n_eff_threshold: float


def pair_metrics(
    pair: RecordPair,
    k: int,
    tail: tuple[int, int] | None = None,
    floor: float | None = None,
) -> tuple[SpectralMetrics, SpectralMetrics, MetricDelta]:
    """Spectrum -> truncation -> observables for both conditions, then delta.

    The two records may hold different numbers of sequence positions, so
    their spectra can be shorter than k on either side; both are truncated
    to the pair's common level min(k, len(clean), len(adv)) so the delta
    compares equal numbers of modes. Metric failures are re-raised tagged
    with the pair key so a batch run can report exactly which pair
    degenerated.
    """
    try:
        clean_spectrum = compute_spectrum(pair.clean)
        adv_spectrum = compute_spectrum(pair.adversarial)
        k_pair = min(k, len(clean_spectrum), len(adv_spectrum))
        clean = compute_metrics(clean_spectrum, k_pair, tail, floor)
        adv = compute_metrics(adv_spectrum, k_pair, tail, floor)
        return clean, adv, metric_delta(clean, adv)
    except SpiError as exc:
        raise PairMetricsError(f"pair {pair.key} at k={k}: {exc}") from exc


def evaluate_pairs(
    pairs: list[RecordPair],
    ks: tuple[int, ...],
    tail: tuple[int, int] | None = None,
    floor: float | None = None,
) -> tuple[list[PairMetrics], list[tuple[tuple, int, Exception]]]:
    """Run pair_metrics for every pair at every K, collecting failures."""
    rows: list[PairMetrics] = []
    failures: list[tuple[tuple, int, Exception]] = []
    for pair in pairs:
        model_id, component, layer_index, sample_id = pair.key
        for k in ks:
            try:
                clean, adv, delta = pair_metrics(pair, k, tail, floor)
            except PairMetricsError as exc:
                failures.append((pair.key, k, exc))
                continue
            rows.append(
                PairMetrics(model_id, component, layer_index, sample_id, k, clean, adv, delta)
            )
    return rows, failures


def _mean_delta(deltas: list[MetricDelta]) -> MetricDelta:
    n = len(deltas)
    return MetricDelta(
        d_n_eff_pct=sum(d.d_n_eff_pct for d in deltas) / n,
        d_log10_kf=sum(d.d_log10_kf for d in deltas) / n,
        d_alpha=sum(d.d_alpha for d in deltas) / n,
    )


def aggregate_table(
    pairs_metrics: list[PairMetrics],
    k: int,
    group_by: tuple[str, str] = ("model_id", "component"),
) -> list[CellAggregate]:
    """Mean of every delta field per group, pooling pairs and layers.

    Group members are sorted by identity before averaging so the result is
    independent of input order; per-layer sub-means are retained for the
    depth curves.
    """
    selected = [m for m in pairs_metrics if m.k == k]
    groups: dict[tuple, list[PairMetrics]] = {}
    for m in selected:
        groups.setdefault(tuple(getattr(m, f) for f in group_by), []).append(m)

    cells = []
    for key in sorted(groups):
        members = sorted(
            groups[key], key=lambda m: (m.layer_index, m.sample_id, m.model_id, m.component)
        )
        layers: dict[int, list[MetricDelta]] = {}
        for m in members:
            layers.setdefault(m.layer_index, []).append(m.delta)
        per_layer = tuple((layer, _mean_delta(layers[layer])) for layer in sorted(layers))
        group_fields = dict(zip(group_by, key))
        cells.append(
            CellAggregate(
                model_id=group_fields.get("model_id", ""),
                component=group_fields.get("component", ""),
                k=k,
                mean_delta=_mean_delta([m.delta for m in members]),
                n_pairs=len(members),
                per_layer=per_layer,
            )
        )
    return cells


def layer_curves(
    pairs_metrics: list[PairMetrics],
    model_id: str,
    component: str,
    k: int,
) -> list[tuple[int, float]]:
    """Mean effective-rank shift per layer, sorted by depth, no interpolation."""
    layers: dict[int, list[float]] = {}
    for m in pairs_metrics:
        if m.k == k and m.model_id == model_id and m.component == component:
            layers.setdefault(m.layer_index, []).append(m.delta.d_n_eff_pct)
    if len(layers) < 2:
        raise InsufficientDepthError(
            f"({model_id}, {component}, k={k}) spans {len(layers)} layer(s); need >= 2"
        )
    return [(layer, sum(vals) / len(vals)) for layer, vals in sorted(layers.items())]


def phase_points(
    samples: list[PhaseSample],
    alpha_threshold: float = 9.0,
    n_eff_threshold: float | None = None,
) -> PhaseResult:
    """Classify final-layer geometry into clusters.

    Attractor: alpha above threshold and effective rank below threshold.
    Dispersive: alpha below threshold and effective rank at or above it.
    Anything else stays unassigned. When no rank threshold is given it
    defaults to the midpoint between the mean ranks of the two alpha-split
    groups of the batch (or the overall mean if one side is empty), and the
    resolved value is returned so outputs can record it.
    """
    if n_eff_threshold is None:
        high = [s.n_eff for s in samples if s.alpha > alpha_threshold]
        low = [s.n_eff for s in samples if s.alpha <= alpha_threshold]
        if high and low:
            n_eff_threshold = (sum(high) / len(high) + sum(low) / len(low)) / 2.0
        elif samples:
            n_eff_threshold = sum(s.n_eff for s in samples) / len(samples)
        else:
            n_eff_threshold = 0.0

    points = []
    for s in samples:
        if s.alpha > alpha_threshold and s.n_eff < n_eff_threshold:
            cluster = Cluster.ATTRACTOR
        elif s.alpha < alpha_threshold and s.n_eff >= n_eff_threshold:
            cluster = Cluster.DISPERSIVE
        else:
            cluster = Cluster.UNASSIGNED
        points.append(PhasePoint(s.model_id, s.condition, s.n_eff, s.alpha, cluster))
    return PhaseResult(
        points=tuple(points),
        alpha_threshold=alpha_threshold,
        n_eff_threshold=n_eff_threshold,
    )
