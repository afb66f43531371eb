"""Minimal self-contained SVG line plots (no rendering dependencies)."""

from __future__ import annotations

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 16, 36, 48  # margins


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, n)
    return raw


def _fmt(v: float) -> str:
    return format(float(v), ".4g")


def curve_plot_svg(
    path,
    curves: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]],
    xlabel: str = "iteration",
    ylabel: str = "value",
    title: str = "",
) -> None:
    """Write one SVG with a mean polyline and shaded band per series.

    ``curves`` maps a label to (mean, band_low, band_high) arrays of equal
    length; the x axis is the 1-based index.
    """
    if not curves:
        raise ValueError("nothing to plot")
    ys = []
    length = 0
    for mean, lo, hi in curves.values():
        ys.extend([np.min(lo), np.max(hi), np.min(mean), np.max(mean)])
        length = max(length, len(mean))
    y_lo, y_hi = float(min(ys)), float(max(ys))
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo -= pad
    y_hi += pad
    x_lo, x_hi = 1.0, float(max(length, 2))

    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return _MT + (y_hi - y) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W / 2}" y="20" text-anchor="middle" '
            f'font-size="14">{title}</text>'
        )
    # axes
    parts.append(
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" '
        'stroke="black"/>'
    )
    parts.append(
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" stroke="black"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{sx(tx):.1f}" y1="{_MT + ph}" x2="{sx(tx):.1f}" '
            f'y2="{_MT + ph + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{sx(tx):.1f}" y="{_MT + ph + 18}" '
            f'text-anchor="middle">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{_ML - 5}" y1="{sy(ty):.1f}" x2="{_ML}" '
            f'y2="{sy(ty):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{sy(ty) + 4:.1f}" '
            f'text-anchor="end">{_fmt(ty)}</text>'
        )
    parts.append(
        f'<text x="{_ML + pw / 2}" y="{_H - 10}" text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{_MT + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MT + ph / 2})">{ylabel}</text>'
    )

    for idx, (label, (mean, blo, bhi)) in enumerate(curves.items()):
        color = _COLORS[idx % len(_COLORS)]
        xs = np.arange(1, len(mean) + 1, dtype=float)
        band = " ".join(
            f"{sx(x):.1f},{sy(v):.1f}" for x, v in zip(xs, bhi)
        ) + " " + " ".join(
            f"{sx(x):.1f},{sy(v):.1f}" for x, v in zip(xs[::-1], np.asarray(blo)[::-1])
        )
        parts.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.15"/>')
        line = " ".join(f"{sx(x):.1f},{sy(v):.1f}" for x, v in zip(xs, mean))
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>'
        )
        ly = _MT + 14 + 16 * idx
        parts.append(
            f'<line x1="{_ML + pw - 150}" y1="{ly - 4}" x2="{_ML + pw - 126}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{_ML + pw - 120}" y="{ly}">{label}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
