"""Minimal self-contained SVG line charts (axes, polylines, legend).

No plotting dependency: output is a plain string with fixed-precision
numbers, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Series:
    name: str
    ys: tuple[float, ...]
    color: str
    xs: tuple[float, ...] | None = None


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_chart(
    series: list[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 900,
    height: int = 420,
) -> str:
    if not series:
        raise ValueError("at least one series required")
    ml, mr, mt, mb = 60, 160, 40, 50  # margins: left/right/top/bottom
    pw, ph = width - ml - mr, height - mt - mb

    all_x: list[float] = []
    all_y: list[float] = []
    for s in series:
        xs = s.xs if s.xs is not None else tuple(range(len(s.ys)))
        all_x.extend(xs)
        all_y.extend(s.ys)
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x: float) -> float:
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_fmt(ml + pw / 2)}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>'
        )
    # axes
    out.append(
        f'<line x1="{_fmt(ml)}" y1="{_fmt(mt + ph)}" x2="{_fmt(ml + pw)}" '
        f'y2="{_fmt(mt + ph)}" stroke="black" stroke-width="1"/>'
    )
    out.append(
        f'<line x1="{_fmt(ml)}" y1="{_fmt(mt)}" x2="{_fmt(ml)}" '
        f'y2="{_fmt(mt + ph)}" stroke="black" stroke-width="1"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        out.append(
            f'<line x1="{_fmt(px(tx))}" y1="{_fmt(mt + ph)}" x2="{_fmt(px(tx))}" '
            f'y2="{_fmt(mt + ph + 5)}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px(tx))}" y="{_fmt(mt + ph + 20)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        out.append(
            f'<line x1="{_fmt(ml - 5)}" y1="{_fmt(py(ty))}" x2="{_fmt(ml)}" '
            f'y2="{_fmt(py(ty))}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(ml - 8)}" y="{_fmt(py(ty) + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(ty)}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{_fmt(ml + pw / 2)}" y="{_fmt(height - 10)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{_fmt(mt + ph / 2)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 16 {_fmt(mt + ph / 2)})">{ylabel}</text>'
        )
    # series + legend
    for k, s in enumerate(series):
        xs = s.xs if s.xs is not None else tuple(range(len(s.ys)))
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, s.ys))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"/>'
        )
        ly = mt + 16 + 18 * k
        out.append(
            f'<line x1="{_fmt(ml + pw + 12)}" y1="{_fmt(ly - 4)}" x2="{_fmt(ml + pw + 36)}" '
            f'y2="{_fmt(ly - 4)}" stroke="{s.color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{_fmt(ml + pw + 42)}" y="{_fmt(ly)}" font-family="sans-serif" '
            f'font-size="12">{s.name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
