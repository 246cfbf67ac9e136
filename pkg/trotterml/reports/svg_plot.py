"""Minimal SVG line charts drawn with reportlab graphics."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

from reportlab.graphics import renderSVG
from reportlab.graphics.charts.legends import Legend
from reportlab.graphics.charts.lineplots import LinePlot
from reportlab.graphics.shapes import Drawing, String
from reportlab.lib import colors

from trotterml.core.storage import atomic_write
from trotterml.reports.metrics import Curve
from trotterml.schemas.models import Provenance

# One colour per series, cycled.
PALETTE = [
    colors.HexColor("#1f4e79"),
    colors.HexColor("#c0392b"),
    colors.HexColor("#27ae60"),
    colors.HexColor("#8e44ad"),
    colors.HexColor("#d68910"),
    colors.HexColor("#555555"),
]

WIDTH, HEIGHT = 520, 320


def line_chart(
    series: Sequence[Curve],
    title: str,
    x_label: str = "t",
    y_label: str = "",
    footnote: str = "",
) -> Drawing:
    drawing = Drawing(WIDTH, HEIGHT)
    plot = LinePlot()
    plot.x, plot.y = 60, 50
    plot.width, plot.height = WIDTH - 200, HEIGHT - 100
    plot.data = [list(zip(c.times.tolist(), c.values.tolist())) for c in series]
    for i, _ in enumerate(series):
        plot.lines[i].strokeColor = PALETTE[i % len(PALETTE)]
        plot.lines[i].strokeWidth = 1.5
    xs = [t for c in series for t in c.times.tolist()] or [0.0, 1.0]
    ys = [v for c in series for v in c.values.tolist()] or [0.0, 1.0]
    plot.xValueAxis.valueMin = min(0.0, min(xs))
    plot.xValueAxis.valueMax = max(xs) if max(xs) > plot.xValueAxis.valueMin else 1.0
    low, high = min(ys), max(ys)
    pad = 0.05 * (high - low) if high > low else 0.1
    plot.yValueAxis.valueMin = low - pad
    plot.yValueAxis.valueMax = high + pad
    plot.xValueAxis.labels.fontSize = 8
    plot.yValueAxis.labels.fontSize = 8
    plot.yValueAxis.labelTextFormat = "%.2f"
    plot.xValueAxis.labelTextFormat = "%.2f"
    drawing.add(plot)

    legend = Legend()
    legend.x, legend.y = WIDTH - 130, HEIGHT - 60
    legend.fontSize = 8
    legend.alignment = "right"
    legend.colorNamePairs = [(PALETTE[i % len(PALETTE)], c.name) for i, c in enumerate(series)]
    drawing.add(legend)

    drawing.add(String(WIDTH / 2, HEIGHT - 20, title, fontSize=11, textAnchor="middle"))
    drawing.add(String(plot.x + plot.width / 2, 15, x_label, fontSize=9, textAnchor="middle"))
    if y_label:
        drawing.add(String(10, HEIGHT - 40, y_label, fontSize=9))
    if footnote:
        drawing.add(String(6, 4, footnote, fontSize=6, fillColor=colors.grey))
    return drawing


def write_svg(drawing: Drawing, output_path: Path) -> Path:
    """Render to SVG text and write it atomically."""
    svg = renderSVG.drawToString(drawing)
    if isinstance(svg, bytes):
        svg = svg.decode("utf-8")
    with atomic_write(Path(output_path)) as fh:
        fh.write(svg)
    return Path(output_path)


def plot_curves(
    series: Sequence[Curve],
    title: str,
    output_path: Path,
    y_label: str = "",
    provenance: Provenance | None = None,
) -> Path:
    """Chart and write in one step; ``provenance`` becomes the footnote."""
    footnote = provenance.footnote() if provenance is not None else ""
    return write_svg(line_chart(series, title, y_label=y_label, footnote=footnote), output_path)
