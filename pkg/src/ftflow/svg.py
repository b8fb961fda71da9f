"""Minimal SVG line plots with a logarithmic y axis."""
from __future__ import annotations

import math

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
WIDTH, HEIGHT = 720, 460
MARGIN = dict(left=70, right=170, top=30, bottom=50)
MAX_POINTS = 1500


def _fmt(v):
    return f"{v:.2f}"


def _thin(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, x.size - 1, MAX_POINTS).round().astype(int))
    return x[idx], y[idx]


def log_plot(series, title="", xlabel="t", ylabel="", floor=1e-16) -> str:
    """Render ``series`` as polylines.

    ``series`` is a list of ``(label, x, y, dashed)``; values of ``y`` below
    ``floor`` are clipped so every point can be drawn on the log scale.
    Long series are thinned to ``MAX_POINTS`` evenly spaced samples.
    """
    series = [(label, *_thin(x, y), dashed) for label, x, y, dashed in series]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    xs = [np.asarray(s[1], dtype=float) for s in series]
    ys = [np.log10(np.maximum(np.asarray(s[2], dtype=float), floor)) for s in series]
    x_lo = min((float(x.min()) for x in xs if x.size), default=0.0)
    x_hi = max((float(x.max()) for x in xs if x.size), default=1.0)
    y_lo = math.floor(min((float(y.min()) for y in ys if y.size), default=0.0))
    y_hi = math.ceil(max((float(y.max()) for y in ys if y.size), default=1.0))
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1

    def px(x):
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return MARGIN["top"] + (y_hi - y) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle">{title}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           'fill="none" stroke="black"/>']
    step = max(1, (y_hi - y_lo) // 8)
    for e in range(y_lo, y_hi + 1, step):
        y = py(e)
        out.append(f'<line x1="{MARGIN["left"]}" x2="{MARGIN["left"] + pw}" y1="{_fmt(y)}" '
                   f'y2="{_fmt(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{_fmt(y + 4)}" '
                   f'text-anchor="end">1e{e}</text>')
    for i in range(6):
        xv = x_lo + i * (x_hi - x_lo) / 5
        out.append(f'<text x="{_fmt(px(xv))}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{xv:.3g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.0f}" y="{HEIGHT - 10}" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.0f})">{ylabel}</text>')
    for i, ((label, _, _, dashed), x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                   f'points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 16 * i
        lx = MARGIN["left"] + pw + 10
        out.append(f'<line x1="{lx}" x2="{lx + 24}" y1="{ly - 4}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
