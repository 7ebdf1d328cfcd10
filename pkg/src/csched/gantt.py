"""SVG Gantt charts from schedule files.

Every result gets its own panel with one lane per cluster node. Bars carry
``data-task``, ``data-node``, ``data-start`` and ``data-end`` attributes so
tools (and the tests) can read the chart back without guessing at pixels.
"""

from __future__ import annotations

import colorsys
import math
import zlib
from xml.sax.saxutils import escape, quoteattr

from .model import id_key

WIDTH = 800
MARGIN_LEFT = 70
MARGIN_RIGHT = 20
LANE_H = 24
PANEL_GAP = 40
TITLE_H = 22
AXIS_H = 24


def workflow_color(workflow_id: str, shade: int = 0) -> str:
    hue = (zlib.crc32(workflow_id.encode("utf-8")) % 360) / 360.0
    light = 0.45 + 0.1 * (shade % 3)
    r, g, b = colorsys.hls_to_rgb(hue, light, 0.55)
    return "#%02x%02x%02x" % (round(r * 255), round(g * 255), round(b * 255))


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _ticks(span: float):
    """Evenly spaced 1-2-5 ticks, about eight across the span."""
    if span <= 0:
        return [0.0]
    base = 10.0 ** math.floor(math.log10(span / 8))
    step = next(m * base for m in (1, 2, 5, 10) if m * base >= span / 8)
    return [i * step for i in range(int(span / step + 1e-9) + 1)]


def render_svg(doc: dict) -> str:
    nodes = sorted(doc["nodes"], key=id_key)
    results = doc["results"]
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    panel_h = TITLE_H + max(len(nodes), 1) * LANE_H + AXIS_H
    height = max(len(results), 1) * (panel_h + PANEL_GAP)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">'
    ]
    panels = results or [{"workflow": "", "tasks": []}]
    for p, res in enumerate(panels):
        top = p * (panel_h + PANEL_GAP)
        tasks = res.get("tasks", [])
        span = max((t["end"] for t in tasks), default=0.0)
        scale = plot_w / span if span > 0 else 0.0
        lane_top = top + TITLE_H
        title = res["workflow"]
        if res.get("technique"):
            title += f" ({res['technique']}, makespan {_fmt(span)} s)"
        out.append(f'<g class="panel" data-workflow={quoteattr(res["workflow"])} '
                   f'data-scale="{scale!r}" data-x0="{MARGIN_LEFT}">')
        out.append(f'<text x="{MARGIN_LEFT}" y="{top + 15}" font-weight="bold">{escape(title)}</text>')
        for i, nid in enumerate(nodes):
            y = lane_top + i * LANE_H
            fill = "#f4f4f4" if i % 2 == 0 else "#ffffff"
            out.append(f'<rect class="lane" x="{MARGIN_LEFT}" y="{y}" width="{plot_w}" '
                       f'height="{LANE_H}" fill="{fill}"/>')
            out.append(f'<text x="{MARGIN_LEFT - 6}" y="{y + LANE_H / 2 + 4}" '
                       f'text-anchor="end">{escape(nid)}</text>')
        axis_y = lane_top + len(nodes) * LANE_H
        out.append(f'<line x1="{MARGIN_LEFT}" y1="{axis_y}" x2="{MARGIN_LEFT + plot_w}" '
                   f'y2="{axis_y}" stroke="#333"/>')
        for t in _ticks(span):
            x = MARGIN_LEFT + t * scale
            out.append(f'<line x1="{x:.3f}" y1="{axis_y}" x2="{x:.3f}" y2="{axis_y + 4}" stroke="#333"/>')
            out.append(f'<text x="{x:.3f}" y="{axis_y + 15}" text-anchor="middle">{_fmt(t)}</text>')
        lane_of = {nid: i for i, nid in enumerate(nodes)}
        for k, t in enumerate(sorted(tasks, key=lambda t: (t["start"], id_key(t["task"])))):
            y = lane_top + lane_of[t["node"]] * LANE_H + 3
            x = MARGIN_LEFT + t["start"] * scale
            w = (t["end"] - t["start"]) * scale
            color = workflow_color(res["workflow"], k)
            out.append(
                f'<rect class="bar" x="{x:.3f}" y="{y}" width="{w:.3f}" height="{LANE_H - 6}" '
                f'fill="{color}" stroke="#222" stroke-width="0.5" data-task={quoteattr(t["task"])} '
                f'data-node={quoteattr(t["node"])} data-start="{t["start"]!r}" data-end="{t["end"]!r}">'
                f'<title>{escape(t["task"])}: {_fmt(t["start"])}-{_fmt(t["end"])} s</title></rect>'
            )
            out.append(f'<text x="{x + w / 2:.3f}" y="{y + LANE_H / 2 + 1}" text-anchor="middle" '
                       f'fill="#fff">{escape(t["task"])}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
