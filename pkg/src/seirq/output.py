"""CSV and SVG emitters.

CSV is the canonical output. Files use ``,`` separators, ``\\n`` line
endings and Python's shortest round-trip float representation, so every
value re-parses to the identical double. Non-finite values are written as
``nan``/``inf``.

SVG files are standalone SVG 1.1 documents rendered from the same numbers.
Heatmaps colour cells with a fixed nine-stop approximation of the viridis
colormap (:data:`COLORMAP`), linearly interpolated between stops and scaled
from the grid minimum (first stop) to the grid maximum (last stop). Cells
holding NaN are drawn in grey. Every heatmap cell carries a ``<title>`` with
its exact value.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .analysis import observable_series
from .errors import EmptyInputError, OutputError
from .integrator import Trajectory
from .scenarios import SweepGrid

COLORMAP = ("#440154", "#472d7b", "#3b528b", "#2c728e", "#21918c",
            "#28ae80", "#5ec962", "#addc30", "#fde725")
NAN_COLOR = "#bdbdbd"
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#17becf")


def format_number(x) -> str:
    return repr(float(x))


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"{path}: cannot write ({exc.strerror})") from None
    return path


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# CSV


def emit_series_csv(times, columns: dict[str, Sequence[float]], path) -> Path:
    """Write ``t`` followed by one column per entry of ``columns``."""
    times = np.asarray(times, dtype=float)
    if times.size == 0 or not columns:
        raise EmptyInputError(f"{path}: nothing to write")
    cols = {name: np.asarray(v, dtype=float) for name, v in columns.items()}
    for name, v in cols.items():
        if v.shape != times.shape:
            raise EmptyInputError(f"{path}: column {name!r} has {v.size} values, "
                                  f"expected {times.size}")
    rows = [["t", *cols]]
    for j, t in enumerate(times):
        rows.append([format_number(t), *(format_number(v[j]) for v in cols.values())])
    return _write(path, _csv_text(rows))


def emit_timeseries_csv(traj: Trajectory, observables: Sequence[str], path) -> Path:
    """One row per output sample with header ``t,<observables...>``."""
    if not observables:
        raise EmptyInputError(f"{path}: no observables requested")
    columns = {name: observable_series(traj, name)[0] for name in observables}
    return emit_series_csv(traj.times, columns, path)


def emit_table_csv(header: Sequence[str], rows: Sequence[Sequence], path) -> Path:
    """Write a header and rows; numbers use the round-trip float format."""
    if not rows:
        raise EmptyInputError(f"{path}: no rows to write")
    body = [[v if isinstance(v, str) else format_number(v) for v in r] for r in rows]
    return _write(path, _csv_text([list(header), *body]))


def read_series_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and numeric body of a file written by :func:`emit_series_csv`
    or :func:`emit_table_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)


def emit_grid_csv(grid: SweepGrid, path) -> Path:
    """Write a sweep grid.

    Two-axis grids: the first row holds the axis-2 values, the first column
    the axis-1 values and the body the peak heights; the corner cell names
    both axes as ``axis1|axis2``. One-axis grids are written as two columns
    under the header ``<axis1>,<observable>``.
    """
    values = np.asarray(grid.values, dtype=float)
    if values.size == 0:
        raise EmptyInputError(f"{path}: empty grid")
    path1, values1 = grid.axis1
    if grid.axis2 is None:
        rows = [[path1, grid.observable]]
        rows += [[format_number(a), format_number(v)] for a, v in zip(values1, values)]
    else:
        path2, values2 = grid.axis2
        rows = [[f"{path1}|{path2}", *(format_number(b) for b in values2)]]
        for a, row in zip(values1, values):
            rows.append([format_number(a), *(format_number(v) for v in row)])
    return _write(path, _csv_text(rows))


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(axis1, axis2, body)`` of a two-axis grid file."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    axis2 = np.array([float(x) for x in rows[0][1:]])
    axis1 = np.array([float(r[0]) for r in rows[1:]])
    body = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return axis1, axis2, body


# ---------------------------------------------------------------------------
# SVG


@dataclass
class RunManifest:
    """Record of one CLI run. ``emitted_files`` holds ``(path, kind)`` pairs
    with paths relative to ``output_dir``."""

    command: str
    config_path: str | None
    output_dir: str
    emitted_files: list[tuple[str, str]]

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_path": self.config_path,
            "output_dir": self.output_dir,
            "emitted_files": [{"path": p, "kind": k} for p, k in self.emitted_files],
        }


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions (multiples of 1, 2 or 5 times a power of ten)."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9)
    ticks = []
    k = first
    while k * step <= hi + 1e-9 * step:
        ticks.append(round(k * step, 12))
        k += 1
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:.6g}"


def colormap(u: float) -> str:
    """Colour for ``u`` in [0, 1] (clamped), interpolated between the stops."""
    if not math.isfinite(u):
        return NAN_COLOR
    u = min(max(u, 0.0), 1.0) * (len(COLORMAP) - 1)
    i = min(int(u), len(COLORMAP) - 2)
    f = u - i
    a = [int(COLORMAP[i][k:k + 2], 16) for k in (1, 3, 5)]
    b = [int(COLORMAP[i + 1][k:k + 2], 16) for k in (1, 3, 5)]
    return "#" + "".join(f"{round(x + f * (y - x)):02x}" for x, y in zip(a, b))


class _Canvas:
    def __init__(self, width, height):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def add(self, element: str):
        self.parts.append(element)

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0):
        self.add(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                 f'stroke="{stroke}" stroke-width="{width}"/>')

    def rect(self, x, y, w, h, fill, title=None, stroke="none"):
        body = f"<title>{escape(title)}</title>" if title is not None else ""
        tag = (f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
               f'fill="{fill}" stroke="{stroke}"')
        self.add(f"{tag}>{body}</rect>" if body else f"{tag}/>")

    def text(self, x, y, s, anchor="middle", size=12, rotate=None):
        extra = f' transform="rotate({rotate} {x:.2f} {y:.2f})"' if rotate else ""
        self.add(f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" '
                 f'font-size="{size}" text-anchor="{anchor}"{extra}>{escape(s)}</text>')

    def render(self) -> str:
        head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _axes(c: _Canvas, box, xr, yr, xlabel, ylabel, title):
    x0, y0, x1, y1 = box
    c.rect(0, 0, c.width, c.height, "#ffffff")
    c.line(x0, y1, x1, y1)
    c.line(x0, y0, x0, y1)
    sx = lambda v: x0 + (v - xr[0]) / (xr[1] - xr[0]) * (x1 - x0)
    sy = lambda v: y1 - (v - yr[0]) / (yr[1] - yr[0]) * (y1 - y0)
    for v in nice_ticks(*xr):
        c.line(sx(v), y1, sx(v), y1 + 5)
        c.text(sx(v), y1 + 18, _fmt_tick(v))
    for v in nice_ticks(*yr):
        c.line(x0 - 5, sy(v), x0, sy(v))
        c.text(x0 - 8, sy(v) + 4, _fmt_tick(v), anchor="end")
    c.text((x0 + x1) / 2, c.height - 10, xlabel)
    c.text(16, (y0 + y1) / 2, ylabel, rotate=-90)
    c.text((x0 + x1) / 2, 22, title, size=14)
    return sx, sy


def _range(values):
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def line_chart_svg(series: Sequence[Series], path, title: str = "", xlabel: str = "t",
                   ylabel: str = "", markers: bool = False) -> Path:
    """Line chart with one ``<polyline>`` per series (or circles when ``markers``)."""
    if not series or any(len(s.x) == 0 for s in series):
        raise EmptyInputError(f"{path}: no data to plot")
    xs = np.concatenate([np.asarray(s.x, dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s.y, dtype=float) for s in series])
    xr, yr = _range(xs), _range(ys)
    if not markers:
        yr = (min(yr[0], 0.0), yr[1])
    c = _Canvas(720, 440)
    box = (80, 40, 540, 390)
    sx, sy = _axes(c, box, xr, yr, xlabel, ylabel, title)
    for n, s in enumerate(series):
        color = PALETTE[n % len(PALETTE)]
        pts = [(sx(x), sy(y)) for x, y in zip(np.asarray(s.x, float), np.asarray(s.y, float))
               if math.isfinite(x) and math.isfinite(y)]
        if markers:
            for px, py in pts:
                c.add(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3.5" fill="{color}"/>')
        else:
            coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
            c.add(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                  f'stroke-width="1.8"/>')
        ly = box[1] + 10 + 20 * n
        c.rect(box[2] + 20, ly - 9, 14, 10, color)
        c.text(box[2] + 40, ly, s.label, anchor="start", size=11)
    return _write(path, c.render())


def heatmap_svg(grid: SweepGrid, path, title: str = "") -> Path:
    """Heatmap of a two-axis sweep with a colorbar; axis 1 runs vertically."""
    values = np.asarray(grid.values, dtype=float)
    if grid.axis2 is None or values.size == 0:
        raise EmptyInputError(f"{path}: heatmaps need a non-empty two-axis grid")
    (path1, v1), (path2, v2) = grid.axis1, grid.axis2
    lo, hi = _range(values)
    c = _Canvas(720, 460)
    x0, y0, x1, y1 = 90, 40, 540, 400
    c.rect(0, 0, c.width, c.height, "#ffffff")
    n1, n2 = values.shape
    cw, ch = (x1 - x0) / n2, (y1 - y0) / n1
    for i in range(n1):
        for j in range(n2):
            v = values[i, j]
            u = (v - lo) / (hi - lo) if math.isfinite(v) else math.nan
            c.rect(x0 + j * cw, y1 - (i + 1) * ch, cw, ch, colormap(u),
                   title=f"{path1}={format_number(v1[i])}, {path2}={format_number(v2[j])}: "
                         f"{format_number(v)}")
    c.line(x0, y1, x1, y1)
    c.line(x0, y0, x0, y1)
    step1 = max(1, math.ceil(n1 / 8))
    step2 = max(1, math.ceil(n2 / 8))
    for j in range(0, n2, step2):
        c.text(x0 + (j + 0.5) * cw, y1 + 18, _fmt_tick(v2[j]))
    for i in range(0, n1, step1):
        c.text(x0 - 8, y1 - (i + 0.5) * ch + 4, _fmt_tick(v1[i]), anchor="end")
    c.text((x0 + x1) / 2, c.height - 12, path2)
    c.text(18, (y0 + y1) / 2, path1, rotate=-90)
    c.text((x0 + x1) / 2, 24, title or f"peak of {grid.observable}", size=14)
    bx, steps = 580, 64
    bh = (y1 - y0) / steps
    for k in range(steps):
        c.rect(bx, y1 - (k + 1) * bh, 20, bh + 0.5, colormap((k + 0.5) / steps))
    c.line(bx, y0, bx, y1)
    c.text(bx + 26, y1 + 4, _fmt_tick(lo), anchor="start", size=11)
    c.text(bx + 26, y0 + 4, _fmt_tick(hi), anchor="start", size=11)
    c.text(bx + 10, y0 - 10, grid.observable, size=11)
    return _write(path, c.render())


def emit_svg_chart(data, path, **style) -> Path:
    """Render a :class:`SweepGrid` (heatmap or 1-axis line) or a list of :class:`Series`."""
    if isinstance(data, SweepGrid):
        if data.axis2 is not None:
            return heatmap_svg(data, path, **style)
        path1, values1 = data.axis1
        style.setdefault("xlabel", path1)
        style.setdefault("ylabel", f"peak of {data.observable}")
        return line_chart_svg([Series(data.observable, values1, data.values)], path, **style)
    return line_chart_svg(list(data), path, **style)
