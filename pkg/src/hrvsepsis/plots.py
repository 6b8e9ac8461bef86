"""Small deterministic SVG charts: fixed canvas, fixed number formatting, no timestamps."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e")


def _f(v: float) -> str:
    return f"{v:.2f}"


class Svg:
    def __init__(self, width=WIDTH, height=HEIGHT):
        self.width, self.height = width, height
        self.parts = []

    def rect(self, x, y, w, h, fill, opacity=1.0):
        self.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                          f'fill="{fill}" fill-opacity="{opacity:.2f}"/>')

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0):
        self.parts.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                          f'stroke="{stroke}" stroke-width="{width:.2f}"/>')

    def polyline(self, xs, ys, stroke):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="1.50"/>')

    def circle(self, x, y, r, fill, opacity=0.6):
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{fill}" '
                          f'fill-opacity="{opacity:.2f}"/>')

    def text(self, x, y, s, size=12, anchor="start", rotate=None):
        tr = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.parts.append(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" font-family="sans-serif" '
                          f'text-anchor="{anchor}"{tr}>{escape(str(s))}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        return "\n".join([head, f'<rect width="{self.width}" height="{self.height}" fill="#fff"/>',
                          *self.parts, "</svg>"]) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(), encoding="utf-8")
        return path


class _Axes:
    """Linear map from data coordinates to the plotting area."""

    def __init__(self, svg, xlim, ylim):
        self.svg = svg
        self.x0, self.x1 = MARGIN["left"], svg.width - MARGIN["right"]
        self.y0, self.y1 = svg.height - MARGIN["bottom"], MARGIN["top"]
        lo, hi = xlim
        self.xlim = (lo, hi if hi > lo else lo + 1.0)
        lo, hi = ylim
        self.ylim = (lo, hi if hi > lo else lo + 1.0)

    def x(self, v):
        a, b = self.xlim
        return self.x0 + (v - a) / (b - a) * (self.x1 - self.x0)

    def y(self, v):
        a, b = self.ylim
        return self.y0 + (v - a) / (b - a) * (self.y1 - self.y0)

    def frame(self, title, xlabel, ylabel, n_ticks=5):
        s = self.svg
        s.line(self.x0, self.y0, self.x1, self.y0)
        s.line(self.x0, self.y0, self.x0, self.y1)
        for k in range(n_ticks + 1):
            xv = self.xlim[0] + (self.xlim[1] - self.xlim[0]) * k / n_ticks
            yv = self.ylim[0] + (self.ylim[1] - self.ylim[0]) * k / n_ticks
            s.line(self.x(xv), self.y0, self.x(xv), self.y0 + 4)
            s.text(self.x(xv), self.y0 + 16, f"{xv:.3g}", 10, "middle")
            s.line(self.x0 - 4, self.y(yv), self.x0, self.y(yv))
            s.text(self.x0 - 6, self.y(yv) + 3, f"{yv:.3g}", 10, "end")
        s.text(s.width / 2, 22, title, 14, "middle")
        s.text((self.x0 + self.x1) / 2, s.height - 12, xlabel, 12, "middle")
        s.text(16, (self.y0 + self.y1) / 2, ylabel, 12, "middle", rotate=-90)


def _legend(svg, labels, x=None, y=None):
    x = svg.width - MARGIN["right"] - 150 if x is None else x
    y = MARGIN["top"] + 6 if y is None else y
    for i, lab in enumerate(labels):
        svg.rect(x, y + 16 * i, 10, 10, PALETTE[i % len(PALETTE)])
        svg.text(x + 14, y + 16 * i + 9, lab, 11)


def histogram_svg(edges, series: dict, title, xlabel, path):
    """Overlaid relative-frequency histograms sharing ``edges``."""
    svg = Svg()
    ymax = max((float(np.max(v)) for v in series.values() if len(v)), default=1.0)
    ax = _Axes(svg, (float(edges[0]), float(edges[-1])), (0.0, ymax * 1.05))
    for i, (lab, vals) in enumerate(series.items()):
        for k, v in enumerate(vals):
            left, right = ax.x(edges[k]), ax.x(edges[k + 1])
            svg.rect(left, ax.y(v), right - left, ax.y0 - ax.y(v), PALETTE[i], 0.45)
    ax.frame(title, xlabel, "relative frequency")
    _legend(svg, list(series))
    return svg.save(path)


def bar_svg(labels, values, title, xlabel, path):
    """Horizontal bars, first label on top."""
    n = max(len(labels), 1)
    svg = Svg(WIDTH, max(HEIGHT, 60 + 22 * n))
    left, right = 200, svg.width - 30
    vmax = max((abs(float(v)) for v in values), default=1.0) or 1.0
    vmin = min(0.0, min((float(v) for v in values), default=0.0))
    lo = vmin / vmax if vmin < 0 else 0.0

    def xpos(v):
        return left + (v / vmax - lo) / (1.0 - lo) * (right - left)

    svg.text(svg.width / 2, 22, title, 14, "middle")
    for i, (lab, v) in enumerate(zip(labels, values)):
        y = 40 + 22 * i
        a, b = sorted((xpos(0.0), xpos(float(v))))
        svg.rect(a, y, b - a, 16, PALETTE[0] if v >= 0 else PALETTE[1])
        svg.text(left - 6, y + 12, lab, 11, "end")
        svg.text(b + 4, y + 12, f"{float(v):.4g}", 10)
    svg.line(xpos(0.0), 36, xpos(0.0), 40 + 22 * n)
    svg.text((left + right) / 2, svg.height - 8, xlabel, 12, "middle")
    return svg.save(path)


def line_svg(x, series: dict, title, xlabel, ylabel, path):
    svg = Svg()
    vals = [float(v) for s in series.values() for v in s]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    ax = _Axes(svg, (float(min(x, default=0)), float(max(x, default=1))), (lo, hi))
    for i, ys in enumerate(series.values()):
        svg.polyline([ax.x(v) for v in x], [ax.y(v) for v in ys], PALETTE[i % len(PALETTE)])
    ax.frame(title, xlabel, ylabel)
    _legend(svg, list(series))
    return svg.save(path)


def scatter_svg(xs, ys, groups, title, xlabel, ylabel, path, group_names=("0", "1")):
    svg = Svg()
    ax = _Axes(svg, (0.0, 1.0), (0.0, 1.0))
    for x, y, g in zip(xs, ys, groups):
        svg.circle(ax.x(float(x)), ax.y(float(y)), 2.5, PALETTE[int(g) % len(PALETTE)])
    ax.frame(title, xlabel, ylabel)
    _legend(svg, list(group_names), x=MARGIN["left"] + 10)
    return svg.save(path)
