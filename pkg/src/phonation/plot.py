"""Self-contained, deterministic SVG line charts for layer sweeps.

Hand-rolled on purpose: the output must be byte-identical across reruns, so
no plotting library (timestamps, library-version metadata) is involved.
"""

from __future__ import annotations


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def sweep_svg(layers: list[int], means: list[float], stds: list[float], title: str) -> str:
    """Line chart of mean accuracy per layer with a +-std band, percent scale."""
    width, height = 640, 400
    ml, mr, mt, mb = 60, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    lo = min(m - s for m, s in zip(means, stds))
    hi = max(m + s for m, s in zip(means, stds))
    pad = max(0.01, (hi - lo) * 0.1)
    lo, hi = max(0.0, lo - pad), min(1.0, hi + pad)
    if hi <= lo:
        hi = lo + 0.01
    span = max(layers) - min(layers) or 1

    def sx(layer: float) -> float:
        return ml + (layer - min(layers)) / span * pw

    def sy(v: float) -> float:
        return mt + (hi - v) / (hi - lo) * ph

    band = [(sx(l), sy(m + s)) for l, m, s in zip(layers, means, stds)]
    band += [(sx(l), sy(m - s)) for l, m, s in reversed(list(zip(layers, means, stds)))]
    band_pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in band)
    line_pts = " ".join(f"{_fmt(sx(l))},{_fmt(sy(m))}" for l, m in zip(layers, means))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
        f'<polygon points="{band_pts}" fill="#9ecae1" fill-opacity="0.45" stroke="none"/>',
        f'<polyline points="{line_pts}" fill="none" stroke="#08519c" stroke-width="2"/>',
    ]
    for l, m in zip(layers, means):
        parts.append(f'<circle cx="{_fmt(sx(l))}" cy="{_fmt(sy(m))}" r="3" fill="#08519c"/>')
    # axes
    parts.append(f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>')
    step = max(1, len(layers) // 13)
    for l in layers[::step]:
        parts.append(f'<text x="{_fmt(sx(l))}" y="{mt + ph + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{l}</text>')
    for j in range(5):
        v = lo + (hi - lo) * j / 4
        parts.append(f'<line x1="{ml - 4}" y1="{_fmt(sy(v))}" x2="{ml}" y2="{_fmt(sy(v))}" stroke="black"/>')
        parts.append(f'<text x="{ml - 8}" y="{_fmt(sy(v) + 4)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{100 * v:.1f}</text>')
    parts.append(f'<text x="{ml + pw / 2:.0f}" y="{height - 12}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">layer</text>')
    parts.append(f'<text x="16" y="{mt + ph / 2:.0f}" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13" transform="rotate(-90 16 {mt + ph / 2:.0f})">accuracy (%)</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
