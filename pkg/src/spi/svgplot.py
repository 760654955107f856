"""Self-contained SVG scatter plot for the phase diagram."""
from __future__ import annotations

from .pipeline import Cluster, PhasePoint

_COLORS = {
    Cluster.DISPERSIVE: "#2ca02c",
    Cluster.ATTRACTOR: "#d62728",
    Cluster.UNASSIGNED: "#7f7f7f",
}

_W, _H = 640, 480
_MARGIN = 60


def _domain(values: list[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.08 * (hi - lo)
    return lo - pad, hi + pad


def render_phase_svg(
    points: list[PhasePoint], alpha_threshold: float, n_eff_threshold: float
) -> str:
    """Scatter of effective rank against spectral alpha, cluster-colored."""
    if not points:
        raise ValueError("no points to plot")
    x_lo, x_hi = _domain([p.alpha for p in points] + [alpha_threshold])
    y_lo, y_hi = _domain([p.n_eff for p in points] + [n_eff_threshold])

    def sx(x: float) -> float:
        return _MARGIN + (x - x_lo) / (x_hi - x_lo) * (_W - 2 * _MARGIN)

    def sy(y: float) -> float:
        return _H - _MARGIN - (y - y_lo) / (y_hi - y_lo) * (_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_W - 2 * _MARGIN}" '
        f'height="{_H - 2 * _MARGIN}" fill="none" stroke="#333"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">Spectral phase diagram (final layer)</text>',
        f'<text x="{_W / 2:.1f}" y="{_H - 14}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">spectral alpha</text>',
        f'<text x="18" y="{_H / 2:.1f}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif" transform="rotate(-90 18 {_H / 2:.1f})">'
        f'effective rank</text>',
    ]

    for i in range(5):
        fx = x_lo + (x_hi - x_lo) * i / 4
        fy = y_lo + (y_hi - y_lo) * i / 4
        parts.append(
            f'<text x="{sx(fx):.1f}" y="{_H - _MARGIN + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{fx:.2f}</text>'
        )
        parts.append(
            f'<text x="{_MARGIN - 8}" y="{sy(fy) + 4:.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{fy:.2f}</text>'
        )

    parts.append(
        f'<line x1="{sx(alpha_threshold):.1f}" y1="{_MARGIN}" '
        f'x2="{sx(alpha_threshold):.1f}" y2="{_H - _MARGIN}" '
        f'stroke="#999" stroke-dasharray="5,4"/>'
    )
    parts.append(
        f'<line x1="{_MARGIN}" y1="{sy(n_eff_threshold):.1f}" '
        f'x2="{_W - _MARGIN}" y2="{sy(n_eff_threshold):.1f}" '
        f'stroke="#999" stroke-dasharray="5,4"/>'
    )

    for p in points:
        parts.append(
            f'<circle cx="{sx(p.alpha):.2f}" cy="{sy(p.n_eff):.2f}" r="6" '
            f'fill="{_COLORS[p.cluster]}" fill-opacity="0.85" stroke="#222"/>'
        )
        parts.append(
            f'<text x="{sx(p.alpha) + 9:.2f}" y="{sy(p.n_eff) + 4:.2f}" font-size="10" '
            f'font-family="sans-serif">{p.model_id}/{p.condition}</text>'
        )

    for i, cluster in enumerate(Cluster):
        y = _MARGIN + 16 + 18 * i
        parts.append(
            f'<circle cx="{_W - _MARGIN - 110}" cy="{y}" r="6" fill="{_COLORS[cluster]}"/>'
        )
        parts.append(
            f'<text x="{_W - _MARGIN - 98}" y="{y + 4}" font-size="11" '
            f'font-family="sans-serif">{cluster.value}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
