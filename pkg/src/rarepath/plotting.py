"""Tiny dependency-free SVG line charts."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 55


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / n for i in range(n + 1)]


def line_chart_svg(
    xs: Sequence[float],
    ys: Sequence[float],
    title: str,
    x_label: str,
    y_label: str,
    y_range: tuple[float, float] | None = None,
    marker_x: float | None = None,
    step: bool = False,
) -> str:
    """Render one series as an SVG document.

    ``marker_x`` draws a dashed vertical line (e.g. the chosen threshold).
    ``step`` draws a staircase, which suits daily piecewise-constant series.
    """
    if len(xs) != len(ys) or not xs:
        raise ValueError("xs and ys must be non-empty and of equal length")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = y_range if y_range is not None else (min(ys), max(ys))
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x: float) -> float:
        return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        return MARGIN_TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph

    pts = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        if step and i:
            pts.append(f"{px(x):.2f},{py(ys[i - 1]):.2f}")
        pts.append(f"{px(x):.2f},{py(y):.2f}")

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{px(t):.2f}" y1="{MARGIN_TOP + ph}" x2="{px(t):.2f}" y2="{MARGIN_TOP + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{px(t):.2f}" y="{MARGIN_TOP + ph + 18}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y_lo, y_hi):
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{py(t):.2f}" x2="{MARGIN_LEFT}" y2="{py(t):.2f}" stroke="#444"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    if marker_x is not None:
        out.append(
            f'<line x1="{px(marker_x):.2f}" y1="{MARGIN_TOP}" x2="{px(marker_x):.2f}" y2="{MARGIN_TOP + ph}" '
            f'stroke="#d62728" stroke-dasharray="5,4"/>'
        )
    out.append(f'<polyline fill="none" stroke="#2ca02c" stroke-width="2" points="{" ".join(pts)}"/>')
    out.append(f'<text x="{MARGIN_LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN_TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_TOP + ph / 2:.1f})">{escape(y_label)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart_svg(path: str | Path, *args, **kwargs) -> None:
    Path(path).write_text(line_chart_svg(*args, **kwargs), encoding="utf-8")
