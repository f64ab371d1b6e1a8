"""Minimal deterministic SVG writer for diagrams, landscapes and trajectories.

Numbers are printed with a fixed precision so identical inputs give identical bytes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WIDTH, HEIGHT, MARGIN = 400, 400, 40


def _f(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


@dataclass
class Canvas:
    """Maps data coordinates in [x0, x1] x [y0, y1] onto a fixed-size SVG."""
    x0: float
    x1: float
    y0: float
    y1: float
    width: int = WIDTH
    height: int = HEIGHT
    items: list[str] = field(default_factory=list)

    def px(self, x: float) -> float:
        span = self.x1 - self.x0 or 1.0
        return MARGIN + (x - self.x0) / span * (self.width - 2 * MARGIN)

    def py(self, y: float) -> float:
        span = self.y1 - self.y0 or 1.0
        return self.height - MARGIN - (y - self.y0) / span * (self.height - 2 * MARGIN)

    def line(self, a, b, stroke="#000", width=1.0, dash: str | None = None) -> None:
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(
            f'<line x1="{_f(self.px(a[0]))}" y1="{_f(self.py(a[1]))}" x2="{_f(self.px(b[0]))}" '
            f'y2="{_f(self.py(b[1]))}" stroke="{stroke}" stroke-width="{_f(width)}"{extra}/>')

    def polyline(self, pts, stroke="#1f77b4", width=1.5) -> None:
        if len(pts) == 0:
            return
        coords = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in pts)
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
                          f'stroke-width="{_f(width)}"/>')

    def circle(self, c, r_px: float, fill="#d62728", stroke="none", opacity=1.0,
               data_r: float | None = None) -> None:
        if data_r is not None:
            r_px = data_r / ((self.x1 - self.x0) or 1.0) * (self.width - 2 * MARGIN)
        self.items.append(f'<circle cx="{_f(self.px(c[0]))}" cy="{_f(self.py(c[1]))}" '
                          f'r="{_f(r_px)}" fill="{fill}" stroke="{stroke}" '
                          f'fill-opacity="{_f(opacity)}"/>')

    def rect(self, x, y, w, h, fill="#444") -> None:
        top = self.py(y + h)
        self.items.append(f'<rect x="{_f(self.px(x))}" y="{_f(top)}" '
                          f'width="{_f(self.px(x + w) - self.px(x))}" '
                          f'height="{_f(self.py(y) - top)}" fill="{fill}"/>')

    def text(self, x_px: float, y_px: float, s: str, anchor="middle") -> None:
        s = s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        self.items.append(f'<text x="{_f(x_px)}" y="{_f(y_px)}" font-size="12" '
                          f'font-family="sans-serif" text-anchor="{anchor}">{s}</text>')

    def axes(self, xlabel: str, ylabel: str) -> None:
        self.line((self.x0, self.y0), (self.x1, self.y0))
        self.line((self.x0, self.y0), (self.x0, self.y1))
        self.text(self.width / 2, self.height - 8, xlabel)
        self.text(12, self.height / 2, ylabel)
        self.text(MARGIN, self.height - MARGIN + 14, _f(self.x0))
        self.text(self.width - MARGIN, self.height - MARGIN + 14, _f(self.x1))
        self.text(MARGIN - 4, self.height - MARGIN, _f(self.y0), anchor="end")
        self.text(MARGIN - 4, MARGIN + 4, _f(self.y1), anchor="end")

    def render(self, title: str = "") -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        body = [head, f'<rect width="{self.width}" height="{self.height}" fill="#fff"/>']
        if title:
            body.append(f'<title>{title}</title>')
        return "\n".join(body + self.items + ["</svg>"]) + "\n"


def diagram_svg(pairs, eps_max: float) -> str:
    """Birth-death scatter with the diagonal."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    hi = max(eps_max, float(pairs.max()) if len(pairs) else 0.0)
    cv = Canvas(0.0, hi, 0.0, hi)
    cv.axes("birth", "death")
    cv.line((0.0, 0.0), (hi, hi), stroke="#888", dash="4,3")
    for b, d in pairs:
        cv.circle((b, d), 4.0)
    return cv.render("persistence diagram")


def landscape_svg(grid, values) -> str:
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    top = max(float(values.max()) if len(values) else 0.0, 1e-9)
    cv = Canvas(0.0, float(grid[-1] + grid[0]), 0.0, top)
    cv.axes("t", "landscape")
    cv.polyline(list(zip(grid, values)))
    return cv.render("persistence landscape")


def trajectory_svg(points, blacklist=(), blocked: np.ndarray | None = None,
                   resolution: float = 0.5) -> str:
    """Trajectory polyline with shaded blacklist circles, over an optional grid."""
    pts = np.asarray(points, float).reshape(-1, 2)
    if blocked is not None:
        h, w = blocked.shape
        x1, y1 = w * resolution, h * resolution
        x0 = y0 = 0.0
    else:
        allp = np.vstack([pts] + [np.array([[bx - br, by - br], [bx + br, by + br]])
                                  for bx, by, br in blacklist]) if len(pts) or blacklist else np.zeros((1, 2))
        x0, y0 = allp.min(axis=0)
        x1, y1 = allp.max(axis=0)
    side = max(x1 - x0, y1 - y0, 1e-9)
    cv = Canvas(x0, x0 + side, y0, y0 + side)
    if blocked is not None:
        for r, c in np.argwhere(blocked):
            cv.rect(c * resolution, r * resolution, resolution, resolution)
    for bx, by, br in blacklist:
        cv.circle((bx, by), 0.0, fill="#ff7f0e", opacity=0.35, data_r=br)
    cv.polyline(pts)
    if len(pts):
        cv.circle(pts[0], 4.0, fill="#2ca02c")
        cv.circle(pts[-1], 4.0, fill="#d62728")
    return cv.render("trajectory")


def bar_svg(labels, values, ylabel: str) -> str:
    values = [float(v) for v in values]
    n = max(len(values), 1)
    cv = Canvas(0.0, float(n), 0.0, max(max(values, default=0.0), 1e-9))
    cv.axes("", ylabel)
    for i, (lab, v) in enumerate(zip(labels, values)):
        cv.rect(i + 0.15, 0.0, 0.7, v, fill="#1f77b4")
        cv.text(cv.px(i + 0.5), HEIGHT - MARGIN + 28, f"{lab} {v:.1f}")
    return cv.render(ylabel)
