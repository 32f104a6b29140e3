"""JSON/CSV report writers and a dependency-free SVG line chart."""

import csv
import json
import math
from pathlib import Path

__all__ = ["write_json", "write_csv", "svg_line_chart"]


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_json(path, payload: dict):
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2) + "\n")


def write_csv(path, rows, fieldnames):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def svg_line_chart(path, series, title="", xlabel="", ylabel="",
                   width=720, height=420):
    """Write a small self-contained SVG chart.

    series: list of (label, xs, ys); None ys entries are skipped.
    """
    margin = 60
    pw, ph = width - 2 * margin, height - 2 * margin
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if y is not None]
    if not pts:
        Path(path).write_text("<svg xmlns='http://www.w3.org/2000/svg'/>")
        return
    xmin = min(p[0] for p in pts)
    xmax = max(p[0] for p in pts)
    ymin = min(p[1] for p in pts)
    ymax = max(p[1] for p in pts)
    if xmax == xmin:
        xmax = xmin + 1
    if ymax == ymin:
        ymax = ymin + 1
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    def sx(x):
        return margin + pw * (x - xmin) / (xmax - xmin)

    def sy(y):
        return margin + ph * (1 - (y - ymin) / (ymax - ymin))

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' height='{height}' "
        f"font-family='sans-serif' font-size='12'>",
        f"<rect width='{width}' height='{height}' fill='white'/>",
        f"<text x='{width / 2}' y='24' text-anchor='middle' font-size='15'>{title}</text>",
        f"<text x='{width / 2}' y='{height - 10}' text-anchor='middle'>{xlabel}</text>",
        f"<text x='16' y='{height / 2}' text-anchor='middle' "
        f"transform='rotate(-90 16 {height / 2})'>{ylabel}</text>",
        f"<rect x='{margin}' y='{margin}' width='{pw}' height='{ph}' "
        f"fill='none' stroke='#555'/>",
    ]
    for i in range(5):
        yv = ymin + (ymax - ymin) * i / 4
        xv = xmin + (xmax - xmin) * i / 4
        parts.append(f"<line x1='{margin}' y1='{sy(yv):.1f}' x2='{margin + pw}' "
                     f"y2='{sy(yv):.1f}' stroke='#ddd'/>")
        parts.append(f"<text x='{margin - 6}' y='{sy(yv) + 4:.1f}' "
                     f"text-anchor='end'>{yv:.3g}</text>")
        parts.append(f"<text x='{sx(xv):.1f}' y='{margin + ph + 16}' "
                     f"text-anchor='middle'>{xv:.3g}</text>")
    for i, (label, xs, ys) in enumerate(series):
        color = colors[i % len(colors)]
        coords = [(sx(x), sy(y)) for x, y in zip(xs, ys) if y is not None]
        if len(coords) > 1:
            d = " ".join(f"{x:.1f},{y:.1f}" for x, y in coords)
            parts.append(f"<polyline points='{d}' fill='none' stroke='{color}' "
                         f"stroke-width='1.5'/>")
        for x, y in coords:
            parts.append(f"<circle cx='{x:.1f}' cy='{y:.1f}' r='2.5' fill='{color}'/>")
        parts.append(f"<text x='{margin + pw - 8}' y='{margin + 16 + 16 * i}' "
                     f"text-anchor='end' fill='{color}'>{label}</text>")
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
