"""Minimal static SVG line charts (no plotting dependencies).

Stacked panels sharing the x axis, each with autoscaled y, nice ticks,
light gridlines, optional horizontal reference lines, shaded bands between
two curves, and a legend. Series longer than a cap are stride-downsampled;
these charts display trends, the CSV traces carry the exact data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
            "#8c564b", "#17becf", "#7f7f7f")
_MAX_POINTS = 1600


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: Optional[str] = None
    dash: Optional[str] = None     # e.g. "6 3"
    width: float = 1.4


@dataclass
class Band:
    """Shaded region between lower(x) and upper(x)."""
    x: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    color: str = "#1f77b4"
    opacity: float = 0.18
    label: str = ""


@dataclass
class Panel:
    series: list = field(default_factory=list)
    bands: list = field(default_factory=list)
    ylabel: str = ""
    title: str = ""
    hlines: Sequence[float] = ()


def _downsample(arr: np.ndarray) -> np.ndarray:
    if arr.size <= _MAX_POINTS:
        return arr
    stride = int(math.ceil(arr.size / _MAX_POINTS))
    out = arr[::stride]
    return out if out[-1] == arr[-1] else np.append(out, arr[-1])


def _nice_ticks(lo: float, hi: float, target: int = 6):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target, 2)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt_num(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    out = f"{v:.4g}"
    return out


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def render_panels(panels: Sequence[Panel], xlabel: str = "t [s]",
                  width: int = 880, panel_height: int = 220,
                  title: str = "") -> str:
    """Render stacked panels to an SVG string."""
    margin_l, margin_r, margin_top, margin_bot = 64, 16, 28 if title else 10, 40
    n = len(panels)
    height = margin_top + n * panel_height + margin_bot
    plot_w = width - margin_l - margin_r

    xmin = math.inf
    xmax = -math.inf
    for p in panels:
        for s in p.series:
            if len(s.x):
                xmin = min(xmin, float(np.min(s.x)))
                xmax = max(xmax, float(np.max(s.x)))
        for b in p.bands:
            if len(b.x):
                xmin = min(xmin, float(np.min(b.x)))
                xmax = max(xmax, float(np.max(b.x)))
    if not math.isfinite(xmin):
        xmin, xmax = 0.0, 1.0
    if xmax <= xmin:
        xmax = xmin + 1.0

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}" '
             f'font-family="Helvetica,Arial,sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
                     f'font-size="14">{_esc(title)}</text>')

    def sx(v):
        return margin_l + (v - xmin) / (xmax - xmin) * plot_w

    xticks = _nice_ticks(xmin, xmax, 8)

    for pi, panel in enumerate(panels):
        top = margin_top + pi * panel_height
        bot = top + panel_height - 34
        plot_h = bot - top - 14
        ymin = math.inf
        ymax = -math.inf
        for s in panel.series:
            if len(s.y):
                ymin = min(ymin, float(np.min(s.y)))
                ymax = max(ymax, float(np.max(s.y)))
        for b in panel.bands:
            if len(b.x):
                ymin = min(ymin, float(np.min(b.lower)))
                ymax = max(ymax, float(np.max(b.upper)))
        for hv in panel.hlines:
            ymin = min(ymin, hv)
            ymax = max(ymax, hv)
        if not math.isfinite(ymin):
            ymin, ymax = 0.0, 1.0
        if ymax <= ymin:
            ymax = ymin + 1.0
        pad = 0.06 * (ymax - ymin)
        ymin -= pad
        ymax += pad

        def sy(v, _ymin=ymin, _ymax=ymax, _top=top + 14, _h=plot_h):
            return _top + (1.0 - (v - _ymin) / (_ymax - _ymin)) * _h

        # frame + gridlines + ticks
        parts.append(f'<rect x="{margin_l}" y="{top + 14}" width="{plot_w}" '
                     f'height="{plot_h}" fill="none" stroke="#444" '
                     f'stroke-width="0.8"/>')
        for t in xticks:
            X = sx(t)
            parts.append(f'<line x1="{X:.1f}" y1="{top + 14}" x2="{X:.1f}" '
                         f'y2="{bot}" stroke="#ddd" stroke-width="0.6"/>')
            if pi == n - 1:
                parts.append(f'<text x="{X:.1f}" y="{bot + 14}" '
                             f'text-anchor="middle">{_fmt_num(t)}</text>')
        for t in _nice_ticks(ymin, ymax, 5):
            Y = sy(t)
            parts.append(f'<line x1="{margin_l}" y1="{Y:.1f}" '
                         f'x2="{margin_l + plot_w}" y2="{Y:.1f}" '
                         f'stroke="#ddd" stroke-width="0.6"/>')
            parts.append(f'<text x="{margin_l - 6}" y="{Y + 3.5:.1f}" '
                         f'text-anchor="end">{_fmt_num(t)}</text>')
        for hv in panel.hlines:
            Y = sy(hv)
            parts.append(f'<line x1="{margin_l}" y1="{Y:.1f}" '
                         f'x2="{margin_l + plot_w}" y2="{Y:.1f}" '
                         f'stroke="#999" stroke-width="1" '
                         f'stroke-dasharray="4 3"/>')

        for b in panel.bands:
            x = _downsample(np.asarray(b.x, dtype=float))
            lo = _downsample(np.asarray(b.lower, dtype=float))
            hi = _downsample(np.asarray(b.upper, dtype=float))
            pts = [f"{sx(px):.2f},{sy(pl):.2f}" for px, pl in zip(x, lo)]
            pts += [f"{sx(px):.2f},{sy(ph):.2f}"
                    for px, ph in zip(x[::-1], hi[::-1])]
            parts.append(f'<polygon points="{" ".join(pts)}" fill="{b.color}" '
                         f'opacity="{b.opacity}" stroke="none"/>')

        for si, s in enumerate(panel.series):
            color = s.color or _PALETTE[si % len(_PALETTE)]
            x = _downsample(np.asarray(s.x, dtype=float))
            y = _downsample(np.asarray(s.y, dtype=float))
            pts = " ".join(f"{sx(px):.2f},{sy(py):.2f}" for px, py in zip(x, y))
            dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
            parts.append(f'<polyline points="{pts}" fill="none" '
                         f'stroke="{color}" stroke-width="{s.width}"{dash}/>')

        if panel.ylabel:
            Y = top + 14 + plot_h / 2
            parts.append(f'<text x="14" y="{Y:.1f}" text-anchor="middle" '
                         f'transform="rotate(-90 14 {Y:.1f})">'
                         f'{_esc(panel.ylabel)}</text>')
        if panel.title:
            parts.append(f'<text x="{margin_l + 4}" y="{top + 10}" '
                         f'font-size="12">{_esc(panel.title)}</text>')

        # legend, top-right inside the frame
        entries = [(s.label, s.color or _PALETTE[si % len(_PALETTE)], s.dash)
                   for si, s in enumerate(panel.series) if s.label]
        entries += [(b.label, b.color, "band") for b in panel.bands if b.label]
        if entries:
            lx = margin_l + plot_w - 6
            ly = top + 24
            for label, color, dash in entries:
                tw = 6.2 * len(label) + 26
                if dash == "band":
                    parts.append(f'<rect x="{lx - tw:.1f}" y="{ly - 5}" '
                                 f'width="18" height="8" fill="{color}" '
                                 f'opacity="0.3"/>')
                else:
                    dd = f' stroke-dasharray="{dash}"' if dash else ""
                    parts.append(f'<line x1="{lx - tw:.1f}" y1="{ly - 1}" '
                                 f'x2="{lx - tw + 18:.1f}" y2="{ly - 1}" '
                                 f'stroke="{color}" stroke-width="2"{dd}/>')
                parts.append(f'<text x="{lx - tw + 22:.1f}" y="{ly + 2}">'
                             f'{_esc(label)}</text>')
                ly += 14

    parts.append(f'<text x="{margin_l + plot_w / 2:.1f}" y="{height - 8}" '
                 f'text-anchor="middle">{_esc(xlabel)}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_svg(path, svg: str) -> None:
    with open(path, "w") as fh:
        fh.write(svg)
