"""Minimal deterministic SVG line plots for RD curves."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def render(series, title="", xlabel="rate (bits/sample)", ylabel="SNR (dB)", width=640, height=440):
    """``series``: list of (label, [(x, y), ...], marker flag). Returns SVG text."""
    pts = [p for _, data, _ in series for p in data if all(map(math.isfinite, p))]
    if pts:
        xs, ys = zip(*pts)
        xt, yt = _nice_ticks(min(xs), max(xs)), _nice_ticks(min(ys), max(ys))
    else:
        xt, yt = [0.0, 1.0], [0.0, 1.0]
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    left, right, top, bottom = 60, 170, 30, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - x0) / ((x1 - x0) or 1) * pw

    def sy(v):
        return top + ph - (v - y0) / ((y1 - y0) or 1) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in xt:
        out.append(f'<line x1="{sx(v):.2f}" y1="{top + ph}" x2="{sx(v):.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(v):.2f}" y="{top + ph + 16}" text-anchor="middle">{v:g}</text>')
    for v in yt:
        out.append(f'<line x1="{left - 4}" y1="{sy(v):.2f}" x2="{left}" y2="{sy(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for j, (label, data, markers) in enumerate(series):
        color = PALETTE[j % len(PALETTE)]
        data = [p for p in data if all(map(math.isfinite, p))]
        if data:
            path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in data)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            if markers:
                for a, b in data:
                    out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{color}"/>')
        ly = top + 14 + 16 * j
        out.append(f'<line x1="{width - right + 10}" y1="{ly - 4}" x2="{width - right + 30}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{width - right + 34}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def rd_plot(curves, title=""):
    """Plot RDCurve objects as SNR against rate, marking sampled points."""
    series = []
    for c in curves:
        data = sorted((p.rate, p.snr_db) for p in c.points)
        series.append((c.label, data, c.metadata.get("method") not in ("closed form",
                                                                         "reverse water-filling")))
    return render(series, title)
