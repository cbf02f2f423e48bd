"""Minimal self-contained SVG line charts rendered from CSV text.

Plots are a pure function of the CSV they are drawn from, so any figure can
be regenerated from the saved table alone.
"""

from __future__ import annotations

import csv
import io
import math
from html import escape

__all__ = ["line_chart", "chart_from_csv"]

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=170, top=40, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")
MARKERS = ("circle", "square", "diamond", "triangle")


def _nice_linear_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


def _marker(shape: str, x: float, y: float, color: str) -> str:
    s = 3.5
    if shape == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{s}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{x - s:.2f}" y="{y - s:.2f}" width="{2 * s}" height="{2 * s}" fill="{color}"/>'
    if shape == "diamond":
        pts = [(x, y - s * 1.3), (x + s * 1.3, y), (x, y + s * 1.3), (x - s * 1.3, y)]
    else:
        pts = [(x, y - s * 1.3), (x + s * 1.2, y + s), (x - s * 1.2, y + s)]
    return '<polygon points="{}" fill="{}"/>'.format(" ".join(f"{a:.2f},{b:.2f}" for a, b in pts), color)


def line_chart(series: dict[str, list[tuple[float, float]]], *, title: str = "",
               xlabel: str = "", ylabel: str = "", log_y: bool = True) -> str:
    """Render named ``(x, y)`` series as an SVG document.

    With ``log_y`` the y-axis is base-10 logarithmic and non-positive or
    non-finite values are dropped (a zero error count has no place on a log
    axis). Series keep their insertion order in the legend.
    """
    def keep(y):
        return math.isfinite(y) and (y > 0 or not log_y)

    clean = {name: [(x, y) for x, y in pts if math.isfinite(x) and keep(y)]
             for name, pts in series.items()}
    xs = [x for pts in clean.values() for x, _ in pts]
    ys = [y for pts in clean.values() for _, y in pts]
    if not xs:
        xs, ys = [0.0, 1.0], [1.0, 10.0] if log_y else [0.0, 1.0]

    x0, x1 = min(xs), max(xs)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    if log_y:
        y0 = math.floor(math.log10(min(ys)))
        y1 = math.ceil(math.log10(max(ys)))
        if y0 == y1:
            y1 += 1
    else:
        y0, y1 = min(ys), max(ys)
        if y0 == y1:
            y0, y1 = y0 - 1, y1 + 1

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        v = math.log10(y) if log_y else y
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="22" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')

    # grid and ticks
    for t in _nice_linear_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"]}" x2="{X:.2f}" '
                   f'y2="{MARGIN["top"] + ph}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{_fmt_tick(t)}</text>')
    if log_y:
        yticks = [(10.0 ** e, f"1e{e}") for e in range(int(y0), int(y1) + 1)]
    else:
        yticks = [(t, _fmt_tick(t)) for t in _nice_linear_ticks(y0, y1)]
    for val, label in yticks:
        Y = py(val)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{Y:.2f}" x2="{MARGIN["left"] + pw}" '
                   f'y2="{Y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{Y + 4:.2f}" text-anchor="end">{label}</text>')
    out.append(f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    if xlabel:
        out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 12}" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cy = MARGIN["top"] + ph / 2
        out.append(f'<text x="18" y="{cy:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {cy:.2f})">{escape(ylabel)}</text>')

    # series and legend
    lx = MARGIN["left"] + pw + 15
    for k, (name, pts) in enumerate(clean.items()):
        color = PALETTE[k % len(PALETTE)]
        shape = MARKERS[k % len(MARKERS)]
        if len(pts) > 1:
            path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        out.extend(_marker(shape, px(x), py(y), color) for x, y in pts)
        ly = MARGIN["top"] + 10 + 20 * k
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="1.6"/>')
        out.append(_marker(shape, lx + 12, ly, color))
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def chart_from_csv(csv_text: str, x: str, y: str, group: str | None = None, **kwargs) -> str:
    """Plot column ``y`` against column ``x``, one series per value of ``group``.

    Without ``group`` a single series named after ``y`` is drawn. ``y`` may
    also be a list of columns, each becoming its own series.
    """
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    series: dict[str, list[tuple[float, float]]] = {}
    ycols = [y] if isinstance(y, str) else list(y)
    for row in rows:
        for col in ycols:
            name = row[group] if group else col
            if group and len(ycols) > 1:
                name = f"{name} {col}"
            series.setdefault(name, []).append((float(row[x]), float(row[col])))
    for pts in series.values():
        pts.sort()
    return line_chart(series, **kwargs)
