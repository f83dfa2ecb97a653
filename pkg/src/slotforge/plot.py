"""Dependency-free SVG line charts (target vs achieved spectra)."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=60, right=20, top=30, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _ticks(lo: float, hi: float, n: int = 6) -> np.ndarray:
    return np.linspace(lo, hi, n)


def line_chart_svg(
    x: np.ndarray,
    series: list[tuple[str, np.ndarray]],
    title: str = "",
    xlabel: str = "Frequency (GHz)",
    ylabel: str = "S11 (dB)",
    ylim: tuple[float, float] = (-40.0, 0.0),
) -> str:
    x = np.asarray(x, dtype=float)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = ylim

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#444"/>',
    ]
    for v in _ticks(x0, x1):
        px = sx(v)
        out.append(f'<line x1="{px:.2f}" y1="{MARGIN["top"]}" x2="{px:.2f}" '
                   f'y2="{MARGIN["top"] + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{px:.2f}" y="{MARGIN["top"] + ph + 16}" text-anchor="middle">{v:.2f}</text>')
    for v in _ticks(y0, y1, 5):
        py = sy(v)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{py:.2f}" x2="{MARGIN["left"] + pw}" '
                   f'y2="{py:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{py + 4:.2f}" text-anchor="end">{v:.0f}</text>')
    for k, (name, y) in enumerate(series):
        y = np.clip(np.asarray(y, dtype=float), y0, y1)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        color = COLORS[k % len(COLORS)]
        dash = ' stroke-dasharray="6,3"' if k % 2 else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = MARGIN["top"] + 16 + 16 * k
        lx = MARGIN["left"] + pw - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{escape(name)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">'
               f"{escape(xlabel)}</text>")
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">'
                   f"{escape(title)}</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path: str | Path, x, series, **kwargs) -> Path:
    path = Path(path)
    path.write_text(line_chart_svg(x, series, **kwargs), encoding="utf-8")
    return path
