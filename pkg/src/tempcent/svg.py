"""Minimal deterministic SVG charts: line trajectories, CCP step chart, heatmap."""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=70, right=220, top=40, bottom=60)


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Doc:
    def __init__(self, width: int, height: int, title: str) -> None:
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
            f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def text(self, x: float, y: float, s: str, anchor: str = "start", extra: str = "") -> None:
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(s)}</text>')

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str = "#000000", extra: str = "") -> None:
        self.add(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}"{extra}/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _frame(doc: _Doc, x_labels: Sequence[str], y_ticks: Sequence[tuple[float, str]], y_label: str):
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    doc.line(left, top + ph, left + pw, top + ph)
    doc.line(left, top, left, top + ph)
    n = len(x_labels)

    def xpos(k: float) -> float:
        return left + (pw * k / (n - 1) if n > 1 else pw / 2)

    for k, label in enumerate(x_labels):
        doc.line(xpos(k), top + ph, xpos(k), top + ph + 4)
        doc.text(xpos(k), top + ph + 18, label, "middle")
    for frac, label in y_ticks:
        y = top + ph * (1 - frac)
        doc.line(left - 4, y, left, y)
        doc.line(left, y, left + pw, y, "#dddddd")
        doc.text(left - 8, y + 4, label, "end")
    doc.text(16, top + ph / 2, y_label, "middle", f' transform="rotate(-90 16 {_f(top + ph / 2)})"')

    def ypos(frac: float) -> float:
        return top + ph * (1 - frac)

    return xpos, ypos


def line_chart(
    series: Mapping[str, Sequence[float | None]],
    x_labels: Sequence[str],
    title: str,
    y_label: str = "centrality",
) -> str:
    """One polyline per series; ``None`` values break the line."""
    values = [v for s in series.values() for v in s if v is not None]
    lo, hi = (min(values), max(values)) if values else (0.0, 1.0)
    lo = min(lo, 0.0)
    hi = hi if hi > lo else lo + 1.0
    doc = _Doc(WIDTH, HEIGHT, title)
    ticks = [(k / 4, f"{lo + (hi - lo) * k / 4:.3g}") for k in range(5)]
    xpos, ypos = _frame(doc, x_labels, ticks, y_label)
    for idx, (name, ys) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        run: list[str] = []
        segments = []
        for k, y in enumerate(ys):
            if y is None:
                if run:
                    segments.append(run)
                run = []
                continue
            run.append(f"{_f(xpos(k))},{_f(ypos((y - lo) / (hi - lo)))}")
        if run:
            segments.append(run)
        for seg in segments:
            doc.add(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        ly = MARGIN["top"] + 14 * idx
        doc.line(WIDTH - MARGIN["right"] + 10, ly, WIDTH - MARGIN["right"] + 30, ly, color, ' stroke-width="2"')
        doc.text(WIDTH - MARGIN["right"] + 34, ly + 4, name)
    return doc.render()


CCP_LEVELS = ("LOW", "MEDIUM-LOW", "MEDIUM-HIGH", "HIGH")


def ccp_step_chart(
    series: Mapping[str, Sequence[str | None]],
    x_labels: Sequence[str],
    undefined: Sequence[bool],
    title: str = "CCP rank per release",
) -> str:
    """Step chart on the four-level ordinal axis; undefined releases are shaded."""
    doc = _Doc(WIDTH, HEIGHT, title)
    ticks = [(k / 3, level) for k, level in enumerate(CCP_LEVELS)]
    xpos, ypos = _frame(doc, x_labels, ticks, "CCP rank")
    top = MARGIN["top"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    half = (xpos(1) - xpos(0)) / 2 if len(x_labels) > 1 else 20.0
    for k, flag in enumerate(undefined):
        if flag:
            doc.add(
                f'<rect x="{_f(xpos(k) - half)}" y="{_f(top)}" width="{_f(2 * half)}" '
                f'height="{_f(ph)}" fill="#eeeeee"/>'
            )
            doc.text(xpos(k), top + 12, "undefined", "middle", ' fill="#888888"')
    for idx, (name, ranks) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        pts: list[str] = []
        segments = []
        for k, rank in enumerate(ranks):
            if rank is None:
                if pts:
                    segments.append(pts)
                pts = []
                continue
            y = ypos(CCP_LEVELS.index(rank) / 3) + (idx % 5 - 2) * 1.5
            if pts:
                prev_y = pts[-1].split(",")[1]
                pts.append(f"{_f(xpos(k))},{prev_y}")
            pts.append(f"{_f(xpos(k))},{_f(y)}")
        if pts:
            segments.append(pts)
        for seg in segments:
            doc.add(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        ly = MARGIN["top"] + 14 * idx
        doc.line(WIDTH - MARGIN["right"] + 10, ly, WIDTH - MARGIN["right"] + 30, ly, color, ' stroke-width="2"')
        doc.text(WIDTH - MARGIN["right"] + 34, ly + 4, name)
    return doc.render()


def diverging_color(rho: float) -> str:
    """Blue (-1) through white (0) to red (+1)."""
    rho = max(-1.0, min(1.0, rho))
    if rho >= 0:
        end = (178, 24, 43)
    else:
        end = (33, 102, 172)
    t = abs(rho)
    r, g, b = (round(255 + (e - 255) * t) for e in end)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    values: Sequence[Sequence[float | None]],
    significant: Sequence[Sequence[bool]],
    title: str,
) -> str:
    """Cells colored by rho; insignificant cells drawn at low opacity, missing cells hatched grey."""
    cell_w, cell_h = 60, 16
    left, top = 320, 50
    width = left + cell_w * len(col_labels) + 20
    height = top + cell_h * len(row_labels) + 30
    doc = _Doc(width, height, title)
    for j, label in enumerate(col_labels):
        doc.text(left + cell_w * (j + 0.5), top - 6, label, "middle")
    for i, label in enumerate(row_labels):
        y = top + cell_h * i
        doc.text(left - 6, y + cell_h * 0.7, label, "end")
        for j in range(len(col_labels)):
            x = left + cell_w * j
            v = values[i][j]
            if v is None:
                doc.add(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="#cccccc"/>')
                continue
            opacity = "1" if significant[i][j] else "0.25"
            doc.add(
                f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                f'fill="{diverging_color(v)}" fill-opacity="{opacity}"/>'
            )
            doc.text(x + cell_w / 2, y + cell_h * 0.7, f"{v:.2f}", "middle", ' font-size="9"')
    return doc.render()
