"""Minimal SVG line charts (fixed 960x480 viewBox, one polyline per series)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 960, 480
MARGIN = 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_chart(series: dict, title: str = "", x=None) -> str:
    """Render named equal-length series; NaNs break nothing, they are skipped."""
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in series.items()}
    n = max((a.size for a in arrays.values()), default=0)
    finite = np.concatenate([a[np.isfinite(a)] for a in arrays.values()]) if arrays else np.empty(0)
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    xs = np.arange(n, dtype=np.float64) if x is None else np.asarray(x, dtype=np.float64)
    x_lo, x_hi = (float(xs[0]), float(xs[-1])) if n > 1 else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(i):
        return MARGIN + (xs[i] - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return MARGIN + (hi - v) / (hi - lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
        f'<text x="{WIDTH // 2}" y="{MARGIN - 20}" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<text x="{MARGIN - 5}" y="{MARGIN + 5}" text-anchor="end" font-size="11">{hi:.4g}</text>',
        f'<text x="{MARGIN - 5}" y="{HEIGHT - MARGIN}" text-anchor="end" font-size="11">{lo:.4g}</text>',
    ]
    for j, (name, a) in enumerate(arrays.items()):
        color = PALETTE[j % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(i))},{_fmt(py(v))}" for i, v in enumerate(a) if math.isfinite(v))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN + 15 + 16 * j
        out.append(f'<text x="{WIDTH - MARGIN - 10}" y="{ly}" text-anchor="end" font-size="12" fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
