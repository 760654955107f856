"""Synthetic propagator chains with controlled spectral geometry.

A chain is a stack of layer propagators W_j = sigma1_j * u_j v_j^T + E_j
whose geometry is dialed in exactly:

* the residual E_j lives in the orthogonal complement of span(u_j, v_j)
  and has spectral norm exactly xi * sigma1_j, so the spectral gap is xi
  by construction;
* consecutive dominant directions obey v_{j+1} = kappa * u_j +
  sqrt(1 - kappa^2) * w_j with w_j a random unit vector orthogonal to
  u_j, so the alignment is kappa by construction;
* context injections G_k have Frobenius norm G_bar, project onto v_{k+1}
  with ratio exactly gamma, point within 45 degrees of the coherence
  direction psi0, and carry signs that make every dominant-path
  contribution interfere constructively.

On top of a realized chain the module measures, rather than assumes, the
two failure modes of the depth-wise Jacobian recurrence
J_l = W_l J_{l-1} + G_l: dispersive decay (effective gain below one,
sensitivity saturates) and attractor collapse (gain and alignment high,
J_L - G_L crushes to rank one).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DominantPathDegenerateError

# operational reading of the "much less than one" hypotheses
ALIGNMENT_SLACK_THRESHOLD = 0.1
PURITY_THRESHOLD = 0.1
_TOL = 1e-9


@dataclass(frozen=True)
class PropagatorLayer:
    """One layer's decomposition: dominant rank-1 part plus residual."""

    sigma1: float
    u: np.ndarray
    v: np.ndarray
    e: np.ndarray

    def matrix(self) -> np.ndarray:
        return self.sigma1 * np.outer(self.u, self.v) + self.e


@dataclass
class ChainConfig:
    """Generator parameters for a synthetic chain.

    gain_schedule holds sigma1 per layer (a single entry is broadcast).
    ``stationary=True`` reuses one layer geometry and one injection across
    the whole depth, which makes the depth-independent saturation of the
    dispersive regime exact instead of merely bounded.
    """

    depth: int
    dim: int
    xi: float
    kappa_target: float
    gain_schedule: tuple[float, ...] = (1.0,)
    gamma: float = 0.8
    psi0: np.ndarray | None = None
    injection_norm: float = 1.0
    seed: int = 0
    stationary: bool = False
    context_dim: int | None = None

    def __post_init__(self):
        if isinstance(self.gain_schedule, (int, float)):
            self.gain_schedule = (float(self.gain_schedule),)
        else:
            self.gain_schedule = tuple(float(g) for g in self.gain_schedule)
        if self.depth < 1:
            raise ConstructionError("depth must be >= 1")
        if self.dim < 3:
            raise ConstructionError("dim must be >= 3 to host the orthogonal residual")
        if not (0.0 <= self.xi < 1.0):
            raise ConstructionError("xi must lie in [0, 1)")
        if abs(self.kappa_target) > 1.0:
            raise ConstructionError("kappa_target must lie in [-1, 1]")
        if len(self.gain_schedule) not in (1, self.depth):
            raise ConstructionError("gain_schedule length must be 1 or depth")
        if any(g <= 0 for g in self.gain_schedule):
            raise ConstructionError("gains must be positive")
        if not (0.0 < self.gamma <= 1.0):
            raise ConstructionError("gamma must lie in (0, 1]")
        if self.injection_norm < 0:
            raise ConstructionError("injection_norm must be non-negative")
        if self.context_dim is None:
            self.context_dim = self.dim
        if self.context_dim < 2:
            raise ConstructionError("context_dim must be >= 2")
        if self.psi0 is not None:
            p = np.asarray(self.psi0, dtype=np.float64)
            if p.shape != (self.context_dim,):
                raise ConstructionError("psi0 must be a context_dim vector")
            if abs(np.linalg.norm(p) - 1.0) > 1e-12:
                raise ConstructionError("psi0 must be a unit vector")
            self.psi0 = p

    def gains(self) -> np.ndarray:
        g = np.asarray(self.gain_schedule, dtype=np.float64)
        return np.repeat(g, self.depth) if g.size == 1 else g


@dataclass
class ChainRealization:
    """Concrete matrices built from a config; immutable once constructed."""

    layers: list[PropagatorLayer]
    injections: list[np.ndarray]
    config: ChainConfig
    psi0: np.ndarray | None = field(repr=False, default=None)

    @property
    def depth(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class DominantPathVerdict:
    """One product length's measured error ratio against its bound."""

    m: int
    measured_ratio: float
    bound: float
    satisfied: bool


class Regime(enum.Enum):
    DISINTEGRATION = "disintegration"
    ATTRACTOR = "attractor"
    UNCLASSIFIED = "unclassified"


CONDITION_NAMES = (
    "stability",
    "cumulative_gain",
    "alignment",
    "projection_bound",
    "directionality",
    "sign_consistency",
    "spectral_purity",
)


@dataclass
class RegimeReport:
    """Measured verdict on which failure mode a realized chain exhibits."""

    regime: Regime
    jacobian_norm_curve: list[tuple[int, float]]
    rank1_dominance: float
    predicted_noise_bound: float
    conditions_met: dict[str, bool]
    dominant_alignment: float
    measured: dict[str, float]


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        g = rng.standard_normal(dim)
        n = np.linalg.norm(g)
        if n > 1e-6:
            return g / n


def _unit_orthogonal(rng: np.random.Generator, basis: list[np.ndarray]) -> np.ndarray:
    """Random unit vector orthogonal to every vector in ``basis``."""
    dim = basis[0].size
    while True:
        g = rng.standard_normal(dim)
        for b in basis:
            g -= (b @ g) * b
        n = np.linalg.norm(g)
        if n > 1e-6:
            return g / n


def _orthonormalize(u: np.ndarray, v: np.ndarray) -> list[np.ndarray]:
    """Orthonormal basis of span(u, v); collapses to one vector if parallel."""
    basis = [u]
    residual = v - (u @ v) * u
    n = np.linalg.norm(residual)
    if n > 1e-9:
        basis.append(residual / n)
    return basis


def _residual_matrix(
    rng: np.random.Generator, dim: int, span_basis: list[np.ndarray], norm: float
) -> np.ndarray:
    """Random matrix supported on the complement of span_basis, spectral norm ``norm``."""
    if norm == 0.0:
        return np.zeros((dim, dim))
    proj = np.eye(dim)
    for b in span_basis:
        proj -= np.outer(b, b)
    raw = proj @ rng.standard_normal((dim, dim)) @ proj
    top = np.linalg.svd(raw, compute_uv=False)[0]
    if top < 1e-12:
        raise ConstructionError("residual projection degenerated; dim too small")
    return raw * (norm / top)


def _dominant_amplitudes(gains: np.ndarray, kappas: np.ndarray) -> np.ndarray:
    """Amplitude of the rank-1 path from injection k to the last layer.

    For 0-based injection index k in 0..L-2 the amplitude is
    gains[L-1] * prod_{j=k+1}^{L-2} gains[j] * kappas[j], with kappas[j]
    the alignment between layers j and j+1.
    """
    depth = gains.size
    amps = np.empty(depth - 1)
    acc = gains[depth - 1]
    for k in range(depth - 2, -1, -1):
        amps[k] = acc
        if k > 0:
            acc *= gains[k] * kappas[k]
    return amps


def _build_injection(
    rng: np.random.Generator,
    v_next: np.ndarray,
    psi0: np.ndarray,
    gamma: float,
    g_bar: float,
    sign: float,
    context_dim: int,
) -> np.ndarray:
    """Injection with ||G||_F = g_bar, ||v^T G|| = gamma * g_bar exactly,
    and projected row within 45 degrees of psi0 carrying ``sign``."""
    dim = v_next.size
    if g_bar == 0.0:
        return np.zeros((dim, context_dim))
    # row direction: cos(theta) uniform in [1/sqrt(2), 1] toward psi0
    cos_t = rng.uniform(1.0 / np.sqrt(2.0), 1.0)
    zeta = _unit_orthogonal(rng, [psi0])
    d = cos_t * psi0 + np.sqrt(max(0.0, 1.0 - cos_t**2)) * zeta
    r = sign * gamma * g_bar * d
    g = np.outer(v_next, r)
    if gamma < 1.0:
        remainder = rng.standard_normal((dim, context_dim))
        remainder -= np.outer(v_next, v_next @ remainder)
        fro = np.linalg.norm(remainder)
        if fro < 1e-12:
            raise ConstructionError("injection remainder degenerated")
        g += remainder * (g_bar * np.sqrt(1.0 - gamma**2) / fro)
    return g


def build_chain(cfg: ChainConfig) -> ChainRealization:
    """Realize a config as concrete matrices; deterministic given cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    depth, dim = cfg.depth, cfg.dim
    kappa = cfg.kappa_target
    gains = cfg.gains()
    psi0 = cfg.psi0 if cfg.psi0 is not None else _unit(rng, cfg.context_dim)

    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    if cfg.stationary:
        u = _unit(rng, dim)
        w = _unit_orthogonal(rng, [u])
        v = kappa * u + np.sqrt(max(0.0, 1.0 - kappa**2)) * w
        us = [u] * depth
        vs = [v] * depth
    else:
        vs.append(_unit(rng, dim))
        for j in range(depth):
            us.append(_unit(rng, dim))
            if j + 1 < depth:
                w = _unit_orthogonal(rng, [us[j]])
                vs.append(kappa * us[j] + np.sqrt(max(0.0, 1.0 - kappa**2)) * w)

    layers: list[PropagatorLayer] = []
    stationary_e: np.ndarray | None = None
    for j in range(depth):
        sigma1 = float(gains[j])
        if cfg.stationary and stationary_e is not None:
            e = stationary_e * (sigma1 / gains[0])
        else:
            e = _residual_matrix(rng, dim, _orthonormalize(us[j], vs[j]), cfg.xi * sigma1)
            if cfg.stationary:
                stationary_e = e
        layers.append(PropagatorLayer(sigma1=sigma1, u=us[j], v=vs[j], e=e))

    kappas = np.array([vs[j + 1] @ us[j] for j in range(depth - 1)])
    amps = _dominant_amplitudes(gains, kappas) if depth > 1 else np.empty(0)

    injections: list[np.ndarray] = []
    stationary_g: dict[float, np.ndarray] = {}
    for k in range(depth):
        if k + 1 < depth:
            v_next = vs[k + 1]
            sign = float(np.sign(amps[k])) if amps[k] != 0 else 1.0
        else:
            # the last injection has no alignment constraint; stationary
            # chains reuse the common direction so every layer is identical
            v_next = vs[0] if cfg.stationary else _unit(rng, dim)
            sign = 1.0
        if cfg.stationary and sign in stationary_g:
            injections.append(stationary_g[sign])
            continue
        g = _build_injection(rng, v_next, psi0, cfg.gamma, cfg.injection_norm, sign, cfg.context_dim)
        if cfg.stationary:
            stationary_g[sign] = g
        injections.append(g)

    return ChainRealization(layers=layers, injections=injections, config=cfg, psi0=psi0)


def chain_product(chain: ChainRealization, m: int) -> np.ndarray:
    """Product of the first m propagators, later layers on the left."""
    if not (1 <= m <= chain.depth):
        raise ValueError(f"m={m} out of range 1..{chain.depth}")
    product = chain.layers[0].matrix()
    for layer in chain.layers[1:m]:
        product = layer.matrix() @ product
    return product


def verify_dominant_path_bound(
    chain: ChainRealization, m_max: int, slack: float = 2.0
) -> list[DominantPathVerdict]:
    """Measure how far each prefix product strays from its rank-1 path.

    For every M in 1..m_max the residual R = product - dominant_path is
    compared, in spectral norm relative to the dominant path, against
    slack * (M * xi + M^2 * xi * eps_kappa) with eps_kappa =
    1 - |kappa_target|. The slack absorbs the unstated constant of the
    second-order term.
    """
    if not (1 <= m_max <= chain.depth):
        raise ValueError(f"m_max={m_max} out of range 1..{chain.depth}")
    if slack < 1.0:
        raise ValueError("slack must be >= 1")
    cfg = chain.config
    xi = cfg.xi
    eps_kappa = 1.0 - abs(cfg.kappa_target)

    verdicts = []
    product = np.eye(cfg.dim)
    dom_scale = 1.0
    v_first = chain.layers[0].v
    for m in range(1, m_max + 1):
        layer = chain.layers[m - 1]
        product = layer.matrix() @ product
        dom_scale *= layer.sigma1
        if m >= 2:
            kappa_m = float(chain.layers[m - 1].v @ chain.layers[m - 2].u)
            # alignments at float-noise level mean the rank-1 path is gone
            if abs(kappa_m) < 1e-12:
                raise DominantPathDegenerateError(
                    f"dominant path vanished at M={m} (alignment {kappa_m:.2e})"
                )
            dom_scale *= kappa_m
        dom_norm = abs(dom_scale)
        if dom_norm == 0.0:
            raise DominantPathDegenerateError(
                f"dominant path vanished at M={m} (zero gain or alignment)"
            )
        residual = product - dom_scale * np.outer(layer.u, v_first)
        ratio = float(np.linalg.svd(residual, compute_uv=False)[0]) / dom_norm
        bound = slack * (m * xi + m * m * xi * eps_kappa)
        verdicts.append(
            DominantPathVerdict(m=m, measured_ratio=ratio, bound=bound, satisfied=ratio <= bound)
        )
    return verdicts


def simulate_jacobian(chain: ChainRealization) -> tuple[np.ndarray, list[tuple[int, float]]]:
    """Iterate J_l = W_l J_{l-1} + G_l from J_0 = 0; returns J_L and the norm curve."""
    jac = np.zeros((chain.config.dim, chain.config.context_dim))
    curve: list[tuple[int, float]] = []
    for l, (layer, injection) in enumerate(zip(chain.layers, chain.injections), start=1):
        jac = layer.matrix() @ jac + injection
        curve.append((l, float(np.linalg.svd(jac, compute_uv=False)[0])))
    return jac, curve


def expected_alignment(dim: int) -> float:
    """Exact mean of |u . v| for independent uniform unit vectors in R^dim.

    Equals 2*Gamma(dim/2) / ((dim-1) * sqrt(pi) * Gamma((dim-1)/2)), which
    the familiar sqrt(2 / (pi * dim)) approximates from below as dim grows.
    """
    import math

    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim == 1:
        return 1.0
    return 2.0 * math.exp(math.lgamma(dim / 2) - math.lgamma((dim - 1) / 2)) / (
        (dim - 1) * math.sqrt(math.pi)
    )


def random_alignment_baseline(
    dim: int, trials: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo mean of |u . v| for independent uniform unit vectors.

    Returns (mean, standard error); deterministic given the seed.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if trials < 100:
        raise ValueError("trials must be >= 100")
    rng = np.random.default_rng(seed)
    samples = np.empty(trials)
    for t in range(trials):
        samples[t] = abs(_unit(rng, dim) @ _unit(rng, dim))
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(trials))
    return mean, se


def _measure_layers(chain: ChainRealization):
    """Re-derive (sigma1, u, v, sigma2) per layer from the realized matrices."""
    measured = []
    for layer in chain.layers:
        left, svals, right_t = np.linalg.svd(layer.matrix())
        measured.append((float(svals[0]), left[:, 0], right_t[0, :],
                         float(svals[1]) if svals.size > 1 else 0.0))
    return measured


def classify_regime(chain: ChainRealization) -> RegimeReport:
    """Evaluate both failure-mode hypothesis sets against the realized chain.

    Every quantity is measured from the matrices: per-layer SVDs give
    gains and spectral gaps, consecutive singular vectors give alignments,
    and the injections are projected onto the measured directions. The
    chain is an attractor only when all seven conditions hold; it is
    dispersive only when every effective gain is below one and depth-wise
    transport still concentrates on the dominant path (alignment holds) --
    a misaligned chain is outside both hypothesis sets and stays
    unclassified.
    """
    depth = chain.depth
    jac, curve = simulate_jacobian(chain)
    residual_jac = jac - chain.injections[-1]
    r_left, r_svals, _ = np.linalg.svd(residual_jac)
    if r_svals[0] > 1e-300:
        rank1_dominance = float(r_svals[1] / r_svals[0]) if r_svals.size > 1 else 0.0
    else:
        rank1_dominance = 0.0

    if depth < 2:
        return RegimeReport(
            regime=Regime.UNCLASSIFIED,
            jacobian_norm_curve=curve,
            rank1_dominance=rank1_dominance,
            predicted_noise_bound=float("nan"),
            conditions_met={name: False for name in CONDITION_NAMES},
            dominant_alignment=0.0,
            measured={},
        )

    layers = _measure_layers(chain)
    sigma1 = np.array([m[0] for m in layers])
    sigma2 = np.array([m[3] for m in layers])
    kappas = np.array([layers[j + 1][2] @ layers[j][1] for j in range(depth - 1)])
    rho = sigma1[:-1] * np.abs(kappas)
    xi_hat = float(np.max(sigma2 / sigma1))
    eps_kappa_hat = float(np.max(1.0 - np.abs(kappas)))

    projected = [layers[k + 1][2] @ chain.injections[k] for k in range(depth - 1)]
    proj_norms = np.array([np.linalg.norm(r) for r in projected])
    fro_norms = np.array([np.linalg.norm(g) for g in chain.injections[:-1]])
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(fro_norms > 0, proj_norms / fro_norms, 0.0)
    gamma_hat = float(np.min(ratios)) if ratios.size else 0.0

    psi_dots = np.array([r @ chain.psi0 for r in projected])
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(proj_norms > 0, np.abs(psi_dots) / proj_norms, 0.0)
    amps = _dominant_amplitudes(sigma1, kappas)
    signed = amps * psi_dots

    # suffix gain products over layers k+1..L for every injection k
    suffix_gains = np.cumprod(sigma1[::-1])[::-1][1:]
    conditions = {
        "stability": bool(np.all(rho >= 1.0 - _TOL)),
        "cumulative_gain": bool(np.all(suffix_gains >= 1.0 - _TOL)),
        "alignment": eps_kappa_hat * depth < ALIGNMENT_SLACK_THRESHOLD,
        "projection_bound": gamma_hat > 0.0,
        "directionality": bool(np.all(direction >= 1.0 / np.sqrt(2.0) - _TOL)),
        "sign_consistency": bool(np.all(signed > 0.0) or np.all(signed < 0.0)),
        "spectral_purity": gamma_hat > 0.0
        and xi_hat * depth / gamma_hat < PURITY_THRESHOLD,
    }

    predicted_noise_bound = xi_hat * depth / gamma_hat if gamma_hat > 0 else float("inf")
    dominant_alignment = float(abs(r_left[:, 0] @ layers[-1][1])) if r_svals[0] > 1e-300 else 0.0

    if all(conditions.values()):
        regime = Regime.ATTRACTOR
    elif float(np.max(rho)) < 1.0 and conditions["alignment"]:
        regime = Regime.DISINTEGRATION
    else:
        regime = Regime.UNCLASSIFIED

    return RegimeReport(
        regime=regime,
        jacobian_norm_curve=curve,
        rank1_dominance=rank1_dominance,
        predicted_noise_bound=predicted_noise_bound,
        conditions_met=conditions,
        dominant_alignment=dominant_alignment,
        measured={
            "xi": xi_hat,
            "eps_kappa": eps_kappa_hat,
            "gamma": gamma_hat,
            "rho_max": float(np.max(rho)),
            "rho_min": float(np.min(rho)),
        },
    )
