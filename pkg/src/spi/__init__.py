"""Spectral propagation instability toolkit.

Simulates depth-wise propagator chains with controlled spectral geometry
to verify dispersive-vs-attractor failure modes of the context Jacobian,
and runs the matching spectral diagnostics (effective rank, spectral
alpha, Kirchhoff index) over stored clean/adversarial activation matrices.
"""

__version__ = "0.1.0"

from .metrics import (  # noqa: F401
    MetricDelta,
    SpectralMetrics,
    Spectrum,
    compute_metrics,
    effective_rank,
    kirchhoff_index,
    metric_delta,
    spectral_alpha,
    truncate_top_k,
)
from .propagator import (  # noqa: F401
    ChainConfig,
    ChainRealization,
    DominantPathVerdict,
    PropagatorLayer,
    Regime,
    RegimeReport,
    build_chain,
    chain_product,
    classify_regime,
    expected_alignment,
    random_alignment_baseline,
    simulate_jacobian,
    verify_dominant_path_bound,
)
from .store import (  # noqa: F401
    ActivationRecord,
    Component,
    Condition,
    RecordPair,
    ScanResult,
    compute_spectrum,
    read_record,
    record_filename,
    scan_pairs,
    write_record,
)
