"""Minimal SVG emitters: polylines, scatter/segment plots and heatmaps.

Plots are drawn in data coordinates mapped onto a fixed canvas. Space is the
horizontal axis and time the vertical one, growing upwards.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 480
HEIGHT = 480
MARGIN = 30


def _fmt(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class Canvas:
    """Axis-aligned data window ``[xmin, xmax] x [ymin, ymax]`` plus accumulated shapes."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    title: str = ""
    shapes: list = field(default_factory=list)

    @classmethod
    def fit(cls, xs, ys, pad: float = 0.05, title: str = "") -> "Canvas":
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        dx = max(x1 - x0, 1e-9) * pad
        dy = max(y1 - y0, 1e-9) * pad
        return cls(x0 - dx, x1 + dx, y0 - dy, y1 + dy, title)

    def _px(self, x, y):
        u = MARGIN + (np.asarray(x) - self.xmin) / (self.xmax - self.xmin) * (WIDTH - 2 * MARGIN)
        v = HEIGHT - MARGIN - (np.asarray(y) - self.ymin) / (self.ymax - self.ymin) * (HEIGHT - 2 * MARGIN)
        return u, v

    def polyline(self, xs, ys, color: str = "black", width: float = 1.0) -> "Canvas":
        u, v = self._px(xs, ys)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(u, v) if np.isfinite(a) and np.isfinite(b))
        self.shapes.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')
        return self

    def points(self, xs, ys, color: str = "black", radius: float = 2.0) -> "Canvas":
        u, v = self._px(xs, ys)
        for a, b in zip(u, v):
            self.shapes.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="{radius}" fill="{color}"/>')
        return self

    def segments(self, starts, ends, color: str = "gray", width: float = 0.5) -> "Canvas":
        """Line segments between ``(x, y)`` row pairs."""
        starts = np.asarray(starts, dtype=float)
        ends = np.asarray(ends, dtype=float)
        u0, v0 = self._px(starts[:, 0], starts[:, 1])
        u1, v1 = self._px(ends[:, 0], ends[:, 1])
        for a, b, c, d in zip(u0, v0, u1, v1):
            self.shapes.append(f'<line x1="{_fmt(a)}" y1="{_fmt(b)}" x2="{_fmt(c)}" y2="{_fmt(d)}" '
                               f'stroke="{color}" stroke-width="{width}"/>')
        return self

    def heatmap(self, values, x_axis, y_axis) -> "Canvas":
        """Cells coloured by value; ``values[i, j]`` sits at ``(x_axis[j], y_axis[i])``.

        Non-finite cells are left blank.
        """
        values = np.asarray(values, dtype=float)
        finite = values[np.isfinite(values)]
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        span = hi - lo if hi > lo else 1.0
        hx = (x_axis[1] - x_axis[0]) if len(x_axis) > 1 else 1.0
        hy = (y_axis[1] - y_axis[0]) if len(y_axis) > 1 else 1.0
        for i, yv in enumerate(y_axis):
            for j, xv in enumerate(x_axis):
                val = values[i, j]
                if not np.isfinite(val):
                    continue
                a, b = self._px(xv - hx / 2, yv + hy / 2)
                c, d = self._px(xv + hx / 2, yv - hy / 2)
                level = (val - lo) / span
                r, g, bl = int(255 * level), int(80 + 100 * (1 - abs(2 * level - 1))), int(255 * (1 - level))
                self.shapes.append(f'<rect x="{_fmt(a)}" y="{_fmt(b)}" width="{_fmt(c - a)}" '
                                   f'height="{_fmt(d - b)}" fill="rgb({r},{g},{bl})"/>')
        return self

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">')
        frame = (f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
                 f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>')
        title = f'<text x="{MARGIN}" y="{MARGIN - 10}" font-size="12">{escape(self.title)}</text>'
        return "\n".join([head, title, frame, *self.shapes, "</svg>"]) + "\n"


def coupling_figure(sources, targets, title: str = "") -> str:
    """Segments from each source to its target, in (space, time) axes."""
    S = np.asarray(sources, dtype=float)
    T = np.asarray(targets, dtype=float)
    both = np.concatenate([S, T])
    cv = Canvas.fit(both[:, 1], both[:, 0], title=title)
    cv.segments(S[:, ::-1], T[:, ::-1])
    cv.points(S[:, 1], S[:, 0], color="steelblue")
    cv.points(T[:, 1], T[:, 0], color="firebrick", radius=3.0)
    return cv.render()


def grid_heatmap(values, grid, title: str = "") -> str:
    """Heatmap of a 1+1 grid field (time vertical, space horizontal)."""
    vals = np.asarray(values, dtype=float).reshape(grid.shape)
    t_axis, x_axis = grid.axes
    cv = Canvas.fit(x_axis, t_axis, pad=0.02, title=title)
    return cv.heatmap(vals, x_axis, t_axis).render()
