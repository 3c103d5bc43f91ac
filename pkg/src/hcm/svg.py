"""Minimal SVG scatter/line writer (800x600 viewBox, no dependencies)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WIDTH, HEIGHT = 800, 600
MARGIN = 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Panel:
    title: str = ""
    xlim: tuple = (0.0, 1.0)
    ylim: tuple = (0.0, 1.0)
    points: list = field(default_factory=list)  # (x, y, colour, radius)
    lines: list = field(default_factory=list)  # (x, y, colour)

    def scatter(self, x, y, colour=PALETTE[0], radius=1.0):
        self.points.append((np.asarray(x, float), np.asarray(y, float), colour, radius))

    def line(self, x, y, colour=PALETTE[1]):
        self.lines.append((np.asarray(x, float), np.asarray(y, float), colour))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render(panels: list[Panel], cols: int | None = None) -> str:
    """Lay panels on a grid inside one 800x600 canvas."""
    n = max(1, len(panels))
    cols = cols or n
    rows = -(-n // cols)
    cw, ch = WIDTH / cols, HEIGHT / rows
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for k, p in enumerate(panels):
        ox, oy = (k % cols) * cw, (k // cols) * ch
        m = min(MARGIN, cw / 6, ch / 6)
        w, h = cw - 2 * m, ch - 2 * m
        (x0, x1), (y0, y1) = p.xlim, p.ylim
        sx = lambda x: ox + m + (np.asarray(x) - x0) / (x1 - x0) * w  # noqa: E731
        sy = lambda y: oy + m + h - (np.asarray(y) - y0) / (y1 - y0) * h  # noqa: E731
        out.append(f'<rect x="{_fmt(ox + m)}" y="{_fmt(oy + m)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="none" stroke="black"/>')
        if p.title:
            out.append(f'<text x="{_fmt(ox + cw / 2)}" y="{_fmt(oy + m * 0.7)}" font-size="12" text-anchor="middle">{p.title}</text>')
        for lbl, xv in ((f"{x0:g}", x0), (f"{x1:g}", x1)):
            out.append(f'<text x="{_fmt(float(sx(xv)))}" y="{_fmt(oy + m + h + 14)}" font-size="10" text-anchor="middle">{lbl}</text>')
        for lbl, yv in ((f"{y0:g}", y0), (f"{y1:g}", y1)):
            out.append(f'<text x="{_fmt(ox + m - 4)}" y="{_fmt(float(sy(yv)) + 3)}" font-size="10" text-anchor="end">{lbl}</text>')
        for x, y, colour, r in p.points:
            px, py = sx(x), sy(y)
            out.extend(
                f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="{r:g}" fill="{colour}"/>' for a, b in zip(px.tolist(), py.tolist())
            )
        for x, y, colour in p.lines:
            pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(sx(x).tolist(), sy(y).tolist()))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(panels: list[Panel], path, cols: int | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(render(panels, cols))
