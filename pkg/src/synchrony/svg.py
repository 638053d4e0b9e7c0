"""Minimal SVG emitter for line charts, bar overlays and network snapshots.

Output is plain SVG 1.1 with every text node and attribute escaped, so it
parses under a strict XML reader. Number formatting is fixed-precision,
which keeps reruns byte-identical.
"""
from __future__ import annotations

import math
from xml.sax.saxutils import escape, quoteattr

import numpy as np

__all__ = ["PALETTE", "ACTOR", "IDLE", "line_chart", "overlay_chart", "network_snapshot", "write"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")
ACTOR = "#d62728"
IDLE = "#222222"

W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 64, 150, 36, 52


def _n(v: float) -> str:
    return f"{v:.2f}"


class _Doc:
    def __init__(self, width=W, height=H):
        self.width = width
        self.height = height
        self.parts = []

    def add(self, tag: str, text: str | None = None, **attrs) -> None:
        items = " ".join(f"{k.rstrip('_').replace('_', '-')}={quoteattr(str(v))}" for k, v in attrs.items())
        if text is None:
            self.parts.append(f"<{tag} {items}/>")
        else:
            self.parts.append(f"<{tag} {items}>{escape(str(text))}</{tag}>")

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        body = "\n".join(self.parts)
        return f'{head}\n<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>\n{body}\n</svg>\n'


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 10))
        v += step
    return out


class _Frame:
    """Plot area mapping data coordinates to pixels, with axes and a legend column."""

    def __init__(self, doc, xlim, ylim, title, xlabel, ylabel):
        self.doc = doc
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1
        self.pw = doc.width - LEFT - RIGHT
        self.ph = doc.height - TOP - BOTTOM
        doc.add("text", title, x=_n(LEFT + self.pw / 2), y="22", text_anchor="middle", font_size="15",
                font_family="sans-serif")
        doc.add("rect", x=LEFT, y=TOP, width=self.pw, height=self.ph, fill="none", stroke="#444")
        for v in _ticks(self.x0, self.x1):
            px = self.px(v)
            doc.add("line", x1=_n(px), y1=TOP + self.ph, x2=_n(px), y2=TOP + self.ph + 5, stroke="#444")
            doc.add("text", f"{v:g}", x=_n(px), y=TOP + self.ph + 18, text_anchor="middle", font_size="11",
                    font_family="sans-serif")
        for v in _ticks(self.y0, self.y1):
            py = self.py(v)
            doc.add("line", x1=LEFT - 5, y1=_n(py), x2=LEFT, y2=_n(py), stroke="#444")
            doc.add("text", f"{v:g}", x=LEFT - 8, y=_n(py + 4), text_anchor="end", font_size="11",
                    font_family="sans-serif")
        doc.add("text", xlabel, x=_n(LEFT + self.pw / 2), y=doc.height - 12, text_anchor="middle",
                font_size="13", font_family="sans-serif", class_="xlabel")
        cy = TOP + self.ph / 2
        doc.add("text", ylabel, x="16", y=_n(cy), text_anchor="middle", font_size="13", font_family="sans-serif",
                transform=f"rotate(-90 16 {_n(cy)})", class_="ylabel")
        self.legend_row = 0

    def px(self, v):
        return LEFT + (v - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, v):
        return TOP + self.ph - (v - self.y0) / (self.y1 - self.y0) * self.ph

    def legend(self, label, color, kind="line"):
        x = LEFT + self.pw + 14
        y = TOP + 10 + 18 * self.legend_row
        if kind == "line":
            self.doc.add("line", x1=x, y1=y, x2=x + 20, y2=y, stroke=color, stroke_width="2")
        else:
            self.doc.add("rect", x=x, y=y - 6, width=20, height=12, fill=color)
        self.doc.add("text", label, x=x + 26, y=y + 4, font_size="11", font_family="sans-serif", class_="legend")
        self.legend_row += 1


def line_chart(series, title="", xlabel="t", ylabel="Pro(t)", ylim=None) -> str:
    """``series`` is a list of ``(label, ys)`` or ``(label, xs, ys)``; returns SVG text."""
    norm = []
    for s in series:
        if len(s) == 2:
            label, ys = s
            xs = np.arange(len(ys))
        else:
            label, xs, ys = s
        norm.append((str(label), np.asarray(xs, float), np.asarray(ys, float)))
    allx = np.concatenate([x for _, x, _ in norm]) if norm else np.array([0.0, 1.0])
    ally = np.concatenate([y for _, _, y in norm]) if norm else np.array([0.0, 1.0])
    ally = ally[np.isfinite(ally)] if np.any(np.isfinite(ally)) else np.array([0.0, 1.0])
    if ylim is None:
        ylim = (min(0.0, float(ally.min())), float(ally.max()))
    doc = _Doc()
    fr = _Frame(doc, (float(allx.min()), float(allx.max())), ylim, title, xlabel, ylabel)
    for i, (label, xs, ys) in enumerate(norm):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_n(fr.px(x))},{_n(fr.py(y))}" for x, y in zip(xs, ys) if np.isfinite(y))
        doc.add("polyline", points=pts, fill="none", stroke=color, stroke_width="1.8", class_="series")
        fr.legend(label, color)
    return doc.render()


def overlay_chart(months, observed, simulated, title="Monthly event counts", xlabel="month",
                  ylabel="events") -> str:
    """Observed counts as bars, simulated counts as a line."""
    obs = np.asarray(observed, float)
    sim = np.asarray(simulated, float)
    xs = np.arange(len(obs))
    top = float(max(obs.max(initial=0), sim.max(initial=0), 1.0))
    doc = _Doc()
    fr = _Frame(doc, (-0.5, len(obs) - 0.5), (0.0, top), title, xlabel, ylabel)
    bw = fr.pw / max(len(obs), 1) * 0.6
    for x, v in zip(xs, obs):
        doc.add("rect", x=_n(fr.px(x) - bw / 2), y=_n(fr.py(v)), width=_n(bw), height=_n(fr.py(0) - fr.py(v)),
                fill="#f2b701", class_="observed")
    pts = " ".join(f"{_n(fr.px(x))},{_n(fr.py(v))}" for x, v in zip(xs, sim))
    doc.add("polyline", points=pts, fill="none", stroke="#1f77b4", stroke_width="2", class_="series")
    fr.legend("observed", "#f2b701", kind="bar")
    fr.legend("simulated", "#1f77b4")
    step = max(1, len(months) // 12)
    for i in range(0, len(months), step):
        doc.add("text", months[i], x=_n(fr.px(i)), y=TOP + fr.ph + 32, text_anchor="middle", font_size="9",
                font_family="sans-serif")
    return doc.render()


def network_snapshot(graph, actions, title="", size=420) -> str:
    """Circular layout; acting nodes in red, idle nodes in near-black."""
    doc = _Doc(size, size + 30)
    doc.add("text", title, x=size // 2, y="20", text_anchor="middle", font_size="14", font_family="sans-serif")
    n = graph.n
    cx, cy, rad = size / 2, size / 2 + 24, size / 2 - 24
    ang = 2 * np.pi * np.arange(n) / max(n, 1) - np.pi / 2
    xs = cx + rad * np.cos(ang)
    ys = cy + rad * np.sin(ang)
    for u, v in graph.edges():
        doc.add("line", x1=_n(xs[u]), y1=_n(ys[u]), x2=_n(xs[v]), y2=_n(ys[v]), stroke="#bbbbbb",
                stroke_width="0.6")
    r = max(2.0, min(8.0, 120.0 / max(n, 1)))
    acts = np.asarray(actions).astype(bool)
    for i in range(n):
        doc.add("circle", cx=_n(xs[i]), cy=_n(ys[i]), r=_n(r), fill=ACTOR if acts[i] else IDLE,
                class_="actor" if acts[i] else "idle")
    return doc.render()


def write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
