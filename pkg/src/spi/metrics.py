"""Spectral observables of a singular-value spectrum.

Three diagnostics summarize how energy spreads across the spectrum of an
activation (or Jacobian) matrix:

* ``effective_rank`` -- exponential of the Shannon entropy of the
  normalized spectrum; a continuous count of active modes.
* ``spectral_alpha`` -- power-law decay exponent of the tail, fitted by
  ordinary least squares in log-log coordinates.
* ``kirchhoff_index`` -- sum of inverse squared singular values; the
  effective resistance of the latent activation graph.

All metrics are computed per truncation level K so head (K=10) and tail
(K=50) analyses stay independent, and clean-vs-adversarial shifts are
expressed as a :class:`MetricDelta`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    DivisionDegenerateError,
    IncompatibleMetricsError,
    InsufficientTailError,
)

#: Relative eigenvalue floor applied before inversion in the Kirchhoff index.
DEFAULT_KF_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Ordered singular values of one matrix.

    ``values`` are sorted non-increasing and non-negative; ``source_rank``
    is min(rows, cols) of the matrix they came from, so truncated spectra
    remember how large the full spectrum could have been.
    """

    values: np.ndarray
    source_rank: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("spectrum must be a non-empty 1-D sequence")
        if np.any(v < 0):
            raise ValueError("singular values must be non-negative")
        if np.any(np.diff(v) > 0):
            raise ValueError("singular values must be sorted non-increasing")
        if self.source_rank < 1:
            raise ValueError("source_rank must be positive")
        if v.size > self.source_rank:
            raise ValueError("spectrum longer than source_rank")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SpectralMetrics:
    """The three observables evaluated at one truncation level."""

    n_eff: float
    alpha: float
    kf: float
    k_used: int

    def __post_init__(self):
        if self.k_used < 1:
            raise ValueError("k_used must be positive")
        if not (1.0 <= self.n_eff <= self.k_used):
            raise ValueError("n_eff out of [1, k_used]")
        if not self.kf > 0:
            raise ValueError("kf must be positive")


@dataclass(frozen=True)
class MetricDelta:
    """Clean-vs-adversarial shift for one (model, component, layer, K) cell."""

    d_n_eff_pct: float
    d_log10_kf: float
    d_alpha: float


def effective_rank(s: Spectrum) -> float:
    """Exponential of the entropy of the normalized spectrum.

    With p_i = sigma_i / sum(sigma), returns exp(-sum p_i ln p_i); zero
    entries contribute nothing. Always lands in [1, len(s)].
    """
    v = s.values
    total = float(v.sum())
    if total == 0.0:
        raise DegenerateSpectrumError("all singular values are zero")
    p = v / total
    p = p[p > 0]  # after normalization: tiny values may underflow to zero
    h = float(-(p * np.log(p)).sum())
    # clamp float excess so the [1, k] bound holds exactly
    return min(max(math.exp(h), 1.0), float(len(s)))


def spectral_alpha(s: Spectrum, tail: tuple[int, int]) -> float:
    """Power-law decay exponent of the tail.

    Fits ln sigma_i against ln i by unweighted ordinary least squares over
    the 1-based inclusive index range ``tail`` and returns the negated
    slope, so a decaying spectrum yields a positive alpha. Indices with a
    zero singular value are dropped; at least three positive values must
    remain.
    """
    start, stop = tail
    if not (1 <= start <= stop <= len(s)):
        raise ValueError(f"tail {tail} out of range for spectrum of length {len(s)}")
    idx = np.arange(start, stop + 1, dtype=np.float64)
    vals = s.values[start - 1:stop]
    mask = vals > 0
    if int(mask.sum()) < 3:
        raise InsufficientTailError(
            f"tail {tail} has {int(mask.sum())} positive values; need >= 3"
        )
    x = np.log(idx[mask])
    y = np.log(vals[mask])
    xc = x - x.mean()
    slope = float((xc @ (y - y.mean())) / (xc @ xc))
    return -slope


def kirchhoff_index(s: Spectrum, k: int, floor: float | None = None) -> float:
    """Sum of inverse eigenvalues lambda_i = sigma_i^2 over the top k.

    Eigenvalues below ``floor`` are clamped to it before inversion so
    near-null modes keep the index finite. ``floor=None`` selects the
    relative default ``DEFAULT_KF_FLOOR_REL * lambda_1``; an explicit
    ``floor=0.0`` disables clamping and raises if a zero eigenvalue is met.
    """
    if not (1 <= k <= len(s)):
        raise ValueError(f"k={k} out of range for spectrum of length {len(s)}")
    lam = s.values[:k] ** 2
    if floor is None:
        floor = DEFAULT_KF_FLOOR_REL * float(lam[0])
    if floor < 0:
        raise ValueError("floor must be non-negative")
    if floor == 0.0 and np.any(lam == 0.0):
        raise DivisionDegenerateError("zero eigenvalue among top k with zero floor")
    lam = np.maximum(lam, floor)
    return float(np.sum(1.0 / lam))


def truncate_top_k(s: Spectrum, k: int) -> Spectrum:
    """First min(k, len) values, order preserved; source_rank unchanged."""
    if k < 1:
        raise ValueError("k must be positive")
    return Spectrum(s.values[: min(k, len(s))].copy(), s.source_rank)


def metric_delta(clean: SpectralMetrics, adv: SpectralMetrics) -> MetricDelta:
    """Signed shifts from clean to adversarial, clean as the baseline."""
    if clean.k_used != adv.k_used:
        raise IncompatibleMetricsError(
            f"k_used mismatch: clean={clean.k_used} adv={adv.k_used}"
        )
    return MetricDelta(
        d_n_eff_pct=100.0 * (adv.n_eff - clean.n_eff) / clean.n_eff,
        d_log10_kf=math.log10(adv.kf) - math.log10(clean.kf),
        d_alpha=adv.alpha - clean.alpha,
    )


def compute_metrics(
    s: Spectrum,
    k: int,
    tail: tuple[int, int] | None = None,
    floor: float | None = None,
) -> SpectralMetrics:
    """Truncate to the top k values and evaluate all three observables.

    ``tail=None`` fits alpha over indices 2..k_used, skipping the dominant
    mode; k_used = min(k, len(s)).
    """
    t = truncate_top_k(s, k)
    k_used = len(t)
    if tail is None:
        tail = (min(2, k_used), k_used)
    return SpectralMetrics(
        n_eff=effective_rank(t),
        alpha=spectral_alpha(t, tail),
        kf=kirchhoff_index(t, k_used, floor),
        k_used=k_used,
    )
