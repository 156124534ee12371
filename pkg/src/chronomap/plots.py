"""SVG renderings of the code vectors, the MDS layout and the superclass curves.

Written by hand so the output is byte-stable and needs no plotting library.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .data import DAYS, QUARTERS_PER_DAY
from .profiling import read_curves
from .som import read_model

PANEL_W = 700
PANEL_H = 60
MARGIN_L = 70
MARGIN_R = 20
GAP = 14


class Svg:
    def __init__(self, width, height):
        self.width, self.height = width, height
        self.parts: List[str] = []

    def add(self, text):
        self.parts.append(text)

    def line(self, x1, y1, x2, y2, cls, stroke="#999", width=1.0):
        self.add(f'<line class="{cls}" x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                 f'stroke="{stroke}" stroke-width="{width}"/>')

    def text(self, x, y, s, anchor="start", size=11, cls="label"):
        self.add(f'<text class="{cls}" x="{x:.2f}" y="{y:.2f}" font-size="{size}" '
                 f'text-anchor="{anchor}" font-family="sans-serif">{escape(str(s))}</text>')

    def polyline(self, xs, ys, cls, stroke="#1f4e9c", width=1.0):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        self.add(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{stroke}" '
                 f'stroke-width="{width}"/>')

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _week_panel(svg: Svg, top: float, values, title: str, side: Optional[str] = None):
    """One 672-slot curve on a [0, 1] axis with a separator between days."""
    x0 = MARGIN_L
    svg.add(f'<g class="panel" transform="translate(0,{top:.2f})">')
    svg.add(f'<rect class="frame" x="{x0}" y="0" width="{PANEL_W}" height="{PANEL_H}" '
            f'fill="none" stroke="#333" stroke-width="0.8"/>')
    for d in range(1, len(DAYS)):
        x = x0 + PANEL_W * d / len(DAYS)
        svg.line(x, 0, x, PANEL_H, "day-sep")
    n = len(values)
    xs = x0 + (np.arange(n) + 0.5) * PANEL_W / n
    ys = PANEL_H * (1.0 - np.clip(np.asarray(values, dtype=float), 0, 1))
    svg.polyline(xs, ys, "curve")
    svg.text(x0 + 4, 11, title, size=10)
    if side is not None:
        svg.text(x0 - 10, PANEL_H / 2 + 5, side, anchor="end", size=16, cls="superclass")
    svg.add("</g>")


def _day_axis(svg: Svg, y):
    for d, name in enumerate(DAYS):
        svg.text(MARGIN_L + PANEL_W * (d + 0.5) / len(DAYS), y, name, anchor="middle", size=10)


def figure_code_vectors(code_vectors, sizes=None, label_of_unit: Optional[Dict[int, str]] = None) -> str:
    C = np.asarray(code_vectors, dtype=float)
    height = 30 + len(C) * (PANEL_H + GAP) + 10
    svg = Svg(MARGIN_L + PANEL_W + MARGIN_R, height)
    for u, vec in enumerate(C):
        title = f"unit {u + 1}" + (f" (n={int(sizes[u])})" if sizes is not None else "")
        side = (label_of_unit or {}).get(u, "-" if label_of_unit else None)
        _week_panel(svg, 10 + u * (PANEL_H + GAP), vec, title, side)
    _day_axis(svg, height - 12)
    return svg.render()


def figure_mds(coordinates, units: Sequence[int]) -> str:
    P = np.asarray(coordinates, dtype=float)
    if P.ndim == 1 or P.shape[1] == 1:
        P = np.column_stack([P.reshape(len(P), -1)[:, 0], np.zeros(len(P))])
    size, pad = 480, 40
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = float(max((hi - lo).max(), 1e-12))
    centre = (lo + hi) / 2.0

    def to_px(p):
        x = size / 2 + (p[0] - centre[0]) / span * (size - 2 * pad)
        y = size / 2 - (p[1] - centre[1]) / span * (size - 2 * pad)
        return x, y

    pix = [to_px(p) for p in P]
    svg = Svg(size, size)
    svg.add('<g class="axes">')
    svg.line(pad / 2, size / 2, size - pad / 2, size / 2, "axis", stroke="#ccc")
    svg.line(size / 2, pad / 2, size / 2, size - pad / 2, "axis", stroke="#ccc")
    svg.add("</g>")
    svg.polyline([x for x, _ in pix], [y for _, y in pix], "string", stroke="#888", width=1.2)
    for (x, y), u in zip(pix, units):
        svg.add(f'<circle class="unit" cx="{x:.2f}" cy="{y:.2f}" r="4" fill="#1f4e9c"/>')
        svg.text(x + 6, y - 6, u + 1)
    return svg.render()


def figure_curves(curves) -> str:
    labels = list(curves)
    height = 30 + len(labels) * (PANEL_H + GAP) + 10
    svg = Svg(MARGIN_L + PANEL_W + MARGIN_R, height)
    for i, lab in enumerate(labels):
        curve = curves[lab]
        title = lab if curve.size is None else f"{lab} (n={curve.size})"
        _week_panel(svg, 10 + i * (PANEL_H + GAP), curve.values, title, lab)
    _day_axis(svg, height - 12)
    return svg.render()


def _require(out_dir: Path, name: str) -> Path:
    path = out_dir / name
    if not path.exists():
        raise FileNotFoundError(f"missing artifact {name} in {out_dir}")
    return path


def _read_partition(path) -> Dict[int, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {int(r["unit"]): r["superclass"] for r in csv.DictReader(fh)}


def _read_embedding(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    units = [int(r["unit"]) for r in rows]
    coords = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    return units, coords


def _read_sizes(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [int(r["size"]) for r in sorted(rows, key=lambda r: int(r["unit"]))]


def plot_figures(out_dir) -> List[Path]:
    """Render fig1/fig2/fig3 from the artifacts of a pipeline run."""
    out_dir = Path(out_dir)
    model = read_model(_require(out_dir, "model.csv"))
    partition = _read_partition(_require(out_dir, "partition.csv"))
    sizes = _read_sizes(_require(out_dir, "class_sizes.csv"))
    units, coords = _read_embedding(_require(out_dir, "mds.csv"))
    curves = read_curves(_require(out_dir, "curves.csv"))
    for lab, curve in curves.items():
        curve.size = _superclass_size(partition, sizes, lab)

    written = []
    for name, body in (
        ("fig1_codevectors.svg", figure_code_vectors(model.code_vectors, sizes, partition)),
        ("fig2_mds.svg", figure_mds(coords, units)),
        ("fig3_curves.svg", figure_curves(curves)),
    ):
        path = out_dir / name
        path.write_text(body, encoding="utf-8")
        written.append(path)
    return written


def _superclass_size(partition, sizes, label):
    return sum(sizes[u] for u, lab in partition.items() if lab == label)
