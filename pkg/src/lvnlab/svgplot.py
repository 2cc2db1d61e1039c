"""Bare-bones SVG line and scatter plots; no plotting dependency."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 480, 360
MARGIN = 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


@dataclass
class Series:
    label: str
    xs: list
    ys: list
    style: str = "line"  # "line", "points" or "both"
    color: str | None = None


@dataclass
class Figure:
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False
    series: list[Series] = field(default_factory=list)

    def add(self, label, xs, ys, style="line", color=None) -> "Figure":
        self.series.append(Series(label, list(map(float, xs)), list(map(float, ys)), style, color))
        return self

    def _tx(self, v):
        return math.log10(v) if self.logx else v

    def _ty(self, v):
        return math.log10(v) if self.logy else v

    def _usable(self, x, y):
        ok = math.isfinite(x) and math.isfinite(y)
        if self.logx:
            ok = ok and x > 0
        if self.logy:
            ok = ok and y > 0
        return ok

    def render(self) -> str:
        pts = [(self._tx(x), self._ty(y)) for s in self.series for x, y in zip(s.xs, s.ys) if self._usable(x, y)]
        if pts:
            x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
            y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        else:
            x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

        def sx(v):
            return MARGIN + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
            f'<text x="{WIDTH / 2:.1f}" y="{MARGIN / 2:.1f}" text-anchor="middle" font-size="13">{escape(self.title)}</text>',
            f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(self._axis_label(self.xlabel, self.logx))}</text>',
            f'<text x="14" y="{HEIGHT / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {HEIGHT / 2:.1f})">'
            f"{escape(self._axis_label(self.ylabel, self.logy))}</text>",
        ]
        for k in range(5):
            fx = x0 + (x1 - x0) * k / 4
            fy = y0 + (y1 - y0) * k / 4
            out.append(f'<text x="{sx(fx):.1f}" y="{HEIGHT - MARGIN + 14}" text-anchor="middle">{fx:.3g}</text>')
            out.append(f'<text x="{MARGIN - 4}" y="{sy(fy) + 4:.1f}" text-anchor="end">{fy:.3g}</text>')
        for idx, s in enumerate(self.series):
            color = s.color or COLORS[idx % len(COLORS)]
            xy = [(sx(self._tx(x)), sy(self._ty(y))) for x, y in zip(s.xs, s.ys) if self._usable(x, y)]
            if s.style in ("line", "both") and len(xy) > 1:
                path = " ".join(f"{a:.2f},{b:.2f}" for a, b in xy)
                out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            if s.style in ("points", "both"):
                r = 1.2 if len(xy) > 500 else 2.5
                out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="{r}" fill="{color}"/>' for a, b in xy)
            ly = MARGIN + 14 + 14 * idx
            out.append(f'<rect x="{WIDTH - MARGIN - 110}" y="{ly - 8}" width="8" height="8" fill="{color}"/>')
            out.append(f'<text x="{WIDTH - MARGIN - 98}" y="{ly}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    @staticmethod
    def _axis_label(label, log):
        return f"log10 {label}" if log else label

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
