"""Minimal SVG line and step charts written as plain text."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = {"left": 64, "right": 150, "top": 36, "bottom": 48}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    step: bool = False


def _label(v):
    return f"{v:.3g}"


def _bounds(values):
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi - lo < 1e-12:
        pad = max(abs(hi), 1.0) * 0.05
        return lo - pad, hi + pad
    return lo, hi


def _points(series, sx, sy):
    x = np.asarray(series.x, dtype=float)
    y = np.asarray(series.y, dtype=float)
    pts = []
    runs = []
    for i in range(len(x)):
        if not (math.isfinite(x[i]) and math.isfinite(y[i])):
            if pts:
                runs.append(pts)
                pts = []
            continue
        if series.step and pts:
            pts.append((sx(x[i]), pts[-1][1]))
        pts.append((sx(x[i]), sy(y[i])))
    if pts:
        runs.append(pts)
    return runs


def line_chart(series, title="", xlabel="", ylabel="", ticks=5) -> str:
    """Render series as polylines (steps when ``step``) in one SVG document."""
    series = list(series)
    xs = np.concatenate([np.asarray(s.x, dtype=float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s.y, dtype=float) for s in series]) if series else np.zeros(1)
    x0, x1 = _bounds(xs)
    y0, y1 = _bounds(ys)
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for k in range(ticks + 1):
        xv = x0 + (x1 - x0) * k / ticks
        yv = y0 + (y1 - y0) * k / ticks
        out.append(f'<line x1="{sx(xv):.2f}" y1="{top + ph}" x2="{sx(xv):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{sx(xv):.2f}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{_label(xv)}</text>'
        )
        out.append(f'<line x1="{left - 5}" y1="{sy(yv):.2f}" x2="{left}" y2="{sy(yv):.2f}" stroke="black"/>')
        out.append(
            f'<text x="{left - 8}" y="{sy(yv) + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{_label(yv)}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        for run in _points(s, sx, sy):
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in run)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = top + 14 + 18 * i
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = ["Series", "line_chart"]
