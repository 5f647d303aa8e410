"""Dependency-free SVG rendering of per-user SE CDFs."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

COLORS = {"hmmimo": "#d62728", "cfmmimo": "#1f77b4", "cmmimo": "#2ca02c"}
WIDTH, HEIGHT = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60


def _ticks(hi: float, n: int = 6) -> np.ndarray:
    raw = hi / n
    mag = 10 ** np.floor(np.log10(raw)) if raw > 0 else 1.0
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=mag)
    return np.arange(0, hi + step * 1e-9, step)


def cdf_points(sorted_values: np.ndarray, max_points: int = 1500) -> tuple[np.ndarray, np.ndarray]:
    """Step-CDF vertices, thinned to at most ``max_points`` quantiles."""
    n = sorted_values.size
    p = np.arange(1, n + 1) / n
    if n > max_points:
        idx = np.unique(np.linspace(0, n - 1, max_points).round().astype(int))
        return sorted_values[idx], p[idx]
    return sorted_values, p


def cdf_svg(curves: dict[str, np.ndarray], title: str, q: float = 0.05) -> str:
    """SVG with one CDF per entry of ``curves`` (name -> sorted SE values) and a line at ``q``."""
    xmax = max((float(v[-1]) for v in curves.values() if v.size), default=1.0)
    xmax = xmax * 1.05 if xmax > 0 else 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + pw * np.asarray(x) / xmax

    def sy(y):
        return TOP + ph * (1 - np.asarray(y))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for t in _ticks(xmax):
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP}" x2="{x:.2f}" y2="{TOP + ph}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in np.linspace(0, 1, 6):
        y = sy(t)
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{t:.1f}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">'
               f'per-user SE (bit/s/Hz)</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2})">cumulative probability</text>')
    yq = sy(q)
    out.append(f'<line x1="{LEFT}" y1="{yq:.2f}" x2="{LEFT + pw}" y2="{yq:.2f}" stroke="black" '
               f'stroke-dasharray="5,4"/>')
    out.append(f'<text x="{LEFT + pw - 4}" y="{yq - 5:.2f}" text-anchor="end">'
               f'{int(round(q * 100))}th percentile</text>')

    for i, (name, values) in enumerate(curves.items()):
        color = COLORS.get(name, "#7f7f7f")
        if values.size:
            xs, ps = cdf_points(values)
            # horizontal run then vertical jump at each sample
            px = np.repeat(xs, 2)
            py = np.concatenate([[0.0], np.repeat(ps, 2)[:-1]])
            px = np.concatenate([[0.0], px])
            py = np.concatenate([[0.0], py])
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(px), sy(py)))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{pts}"/>')
        ly = TOP + 18 + 18 * i
        out.append(f'<line x1="{LEFT + 12}" y1="{ly}" x2="{LEFT + 36}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{LEFT + 42}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
