"""Minimal deterministic SVG line chart for sweep curves.

Hand-rolled so the emitted bytes depend only on the data: no timestamps,
no generated ids, no plotting-library version drift.
"""

from __future__ import annotations

from collections.abc import Sequence

from .evaluation import CurvePoint

_WIDTH, _HEIGHT = 640, 440
_MARGIN_LEFT, _MARGIN_RIGHT = 70, 20
_MARGIN_TOP, _MARGIN_BOTTOM = 30, 70
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _x(fraction: float, max_fraction: float) -> float:
    span = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    return _MARGIN_LEFT + (fraction / max_fraction) * span


def _y(value: float) -> float:
    span = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM
    return _MARGIN_TOP + (1.0 - value) * span


def render_plot(series: Sequence[tuple[str, Sequence[CurvePoint]]], path) -> None:
    """Render one polyline per labelled curve; x is budget, y is fraction."""
    if not series or any(not points for _, points in series):
        raise ValueError("no curve points to plot")
    max_fraction = max(p.budget_fraction for _, points in series for p in points)
    if max_fraction == 0.0:
        max_fraction = 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    # y grid at 0, 0.25, ..., 1 with labels
    for i in range(5):
        value = i / 4
        y = _y(value)
        parts.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{y:.1f}" x2="{_WIDTH - _MARGIN_RIGHT}" '
            f'y2="{y:.1f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 8}" y="{y + 4:.1f}" text-anchor="end">{value:.2f}</text>'
        )
    # x ticks at each distinct budget of the first series
    for point in series[0][1]:
        x = _x(point.budget_fraction, max_fraction)
        parts.append(
            f'<line x1="{x:.1f}" y1="{_HEIGHT - _MARGIN_BOTTOM}" x2="{x:.1f}" '
            f'y2="{_HEIGHT - _MARGIN_BOTTOM + 5}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{_HEIGHT - _MARGIN_BOTTOM + 20}" '
            f'text-anchor="middle">{point.budget_fraction}</text>'
        )
    parts.append(
        f'<text x="{(_MARGIN_LEFT + _WIDTH - _MARGIN_RIGHT) / 2:.1f}" '
        f'y="{_HEIGHT - _MARGIN_BOTTOM + 40}" text-anchor="middle">'
        "fraction of words substituted</text>"
    )
    parts.append(
        f'<text x="16" y="{(_MARGIN_TOP + _HEIGHT - _MARGIN_BOTTOM) / 2:.1f}" '
        f'text-anchor="middle" transform="rotate(-90 16 '
        f'{(_MARGIN_TOP + _HEIGHT - _MARGIN_BOTTOM) / 2:.1f})">'
        "fraction classified as target</text>"
    )
    for index, (label, points) in enumerate(series):
        color = _PALETTE[index % len(_PALETTE)]
        coords = " ".join(
            f"{_x(p.budget_fraction, max_fraction):.1f},{_y(p.attacked_fraction):.1f}"
            for p in points
        )
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for p in points:
            parts.append(
                f'<circle cx="{_x(p.budget_fraction, max_fraction):.1f}" '
                f'cy="{_y(p.attacked_fraction):.1f}" r="3" fill="{color}"/>'
            )
        legend_y = _MARGIN_TOP + 6 + index * 18
        parts.append(
            f'<line x1="{_WIDTH - 200}" y1="{legend_y}" x2="{_WIDTH - 176}" '
            f'y2="{legend_y}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{_WIDTH - 170}" y="{legend_y + 4}">{label}</text>')
    # frame
    parts.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" '
        f'width="{_WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT}" '
        f'height="{_HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM}" fill="none" stroke="#333333"/>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(parts))
        handle.write("\n")
