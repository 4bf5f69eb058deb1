"""Deterministic SVG scatter plot of classifier robustness.

Each classifier run is a point at (CV, mean accuracy) with an optional
vertical whisker spanning its min..max accuracy and an optional ring at its
clean-test accuracy. Divider lines through the single reference point split
the plane into the four robustness quadrants (Group I upper-left is best:
high accuracy, low spread).

Output is plain SVG 1.1 text with generic font families only. Element order
and the fixed two-decimal coordinate format make rendering byte-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .errors import DomainError
from .stats import QuadrantLabel, ReferencePoint, identify_group


@dataclass(frozen=True)
class McvPoint:
    label: str
    cv: float
    mean_accu: float
    min_accu: float
    max_accu: float
    clean_accu: float
    is_reference: bool = False

    def __post_init__(self) -> None:
        for v in (self.cv, self.mean_accu, self.min_accu, self.max_accu, self.clean_accu):
            if not math.isfinite(v):
                raise DomainError(f"non-finite coordinate in point {self.label!r}")
        if not self.min_accu <= self.mean_accu <= self.max_accu:
            raise DomainError(
                f"point {self.label!r}: min {self.min_accu} <= mean {self.mean_accu}"
                f" <= max {self.max_accu} violated"
            )


@dataclass(frozen=True)
class PlotStyle:
    width: int = 800
    height: int = 560
    margin_left: float = 72.0
    margin_right: float = 28.0
    margin_top: float = 40.0
    margin_bottom: float = 56.0
    font_size: int = 12
    x_range: tuple[float, float] | None = None  # CV axis, data units
    y_range: tuple[float, float] | None = None  # accuracy axis, data units
    pad_frac: float = 0.05
    show_whiskers: bool = True
    show_clean_ring: bool = True
    title: str = ""

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise DomainError("canvas dimensions must be positive")


@dataclass(frozen=True)
class PlotTransform:
    """Affine data-to-screen mapping; y is inverted (accuracy grows upward)."""

    x0: float
    x1: float
    y0: float
    y1: float
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def sx(self, cv: float) -> float:
        return self.x0 + (cv - self.xmin) / (self.xmax - self.xmin) * (self.x1 - self.x0)

    def sy(self, accu: float) -> float:
        return self.y1 - (accu - self.ymin) / (self.ymax - self.ymin) * (self.y1 - self.y0)


def _padded(lo: float, hi: float, frac: float) -> tuple[float, float]:
    span = hi - lo
    pad = span * frac if span > 0 else 1.0
    return lo - pad, hi + pad


def plot_transform(points: list[McvPoint], style: PlotStyle) -> PlotTransform:
    """The transform render_mcv uses; exposed so geometry can be audited."""
    xs = [p.cv for p in points]
    ys: list[float] = []
    for p in points:
        ys.extend((p.mean_accu, p.min_accu, p.max_accu))
        if style.show_clean_ring:
            ys.append(p.clean_accu)
    if style.x_range is not None:
        xmin, xmax = style.x_range
        if xmin >= xmax or min(xs) < xmin or max(xs) > xmax:
            raise DomainError(f"fixed x range {style.x_range} does not contain all points")
    else:
        xmin, xmax = _padded(min(xs), max(xs), style.pad_frac)
    if style.y_range is not None:
        ymin, ymax = style.y_range
        if ymin >= ymax or min(ys) < ymin or max(ys) > ymax:
            raise DomainError(f"fixed y range {style.y_range} does not contain all points")
    else:
        ymin, ymax = _padded(min(ys), max(ys), style.pad_frac)
    return PlotTransform(
        x0=style.margin_left,
        x1=style.width - style.margin_right,
        y0=style.margin_top,
        y1=style.height - style.margin_bottom,
        xmin=xmin,
        xmax=xmax,
        ymin=ymin,
        ymax=ymax,
    )


def quadrant_of_rendered_point(point: McvPoint, reference: McvPoint) -> QuadrantLabel:
    """Same rule the annotations use, so plot and tables cannot disagree."""
    ref = ReferencePoint(rMA=reference.mean_accu, rCV=reference.cv)
    return identify_group(point.mean_accu, point.cv, ref)


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_mcv(points: list[McvPoint], style: PlotStyle = PlotStyle()) -> str:
    """Render the full chart as SVG text; identical inputs give identical bytes."""
    if not points:
        raise DomainError("no points to plot")
    refs = [p for p in points if p.is_reference]
    if len(refs) != 1:
        raise DomainError(f"need exactly one reference point, got {len(refs)}")
    ref = refs[0]
    t = plot_transform(points, style)
    fs = style.font_size
    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">'
    )
    out.append(f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="white"/>')
    out.append(
        f'<rect x="{_f(t.x0)}" y="{_f(t.y0)}" width="{_f(t.x1 - t.x0)}" '
        f'height="{_f(t.y1 - t.y0)}" fill="none" stroke="#444444" stroke-width="1"/>'
    )
    if style.title:
        out.append(
            f'<text x="{_f((t.x0 + t.x1) / 2)}" y="{_f(t.y0 - 14)}" font-family="sans-serif" '
            f'font-size="{fs + 2}" text-anchor="middle">{escape(style.title)}</text>'
        )

    # axis ticks: five per axis, evenly spaced in data units
    for k in range(5):
        xv = t.xmin + k * (t.xmax - t.xmin) / 4
        px = t.sx(xv)
        out.append(
            f'<line x1="{_f(px)}" y1="{_f(t.y1)}" x2="{_f(px)}" y2="{_f(t.y1 + 5)}" '
            f'stroke="#444444" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_f(px)}" y="{_f(t.y1 + 18)}" font-family="sans-serif" '
            f'font-size="{fs - 2}" text-anchor="middle">{_f(xv)}</text>'
        )
        yv = t.ymin + k * (t.ymax - t.ymin) / 4
        py = t.sy(yv)
        out.append(
            f'<line x1="{_f(t.x0 - 5)}" y1="{_f(py)}" x2="{_f(t.x0)}" y2="{_f(py)}" '
            f'stroke="#444444" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_f(t.x0 - 8)}" y="{_f(py + 4)}" font-family="sans-serif" '
            f'font-size="{fs - 2}" text-anchor="end">{_f(yv)}</text>'
        )
    out.append(
        f'<text x="{_f((t.x0 + t.x1) / 2)}" y="{_f(t.y1 + 38)}" font-family="sans-serif" '
        f'font-size="{fs}" text-anchor="middle">Coefficient of variation (%)</text>'
    )
    out.append(
        f'<text x="18" y="{_f((t.y0 + t.y1) / 2)}" font-family="sans-serif" font-size="{fs}" '
        f'text-anchor="middle" transform="rotate(-90 18 {_f((t.y0 + t.y1) / 2)})">'
        f'Mean accuracy (%)</text>'
    )

    # quadrant dividers through the reference point
    rx, ry = t.sx(ref.cv), t.sy(ref.mean_accu)
    out.append(
        f'<line x1="{_f(rx)}" y1="{_f(t.y0)}" x2="{_f(rx)}" y2="{_f(t.y1)}" '
        f'stroke="#888888" stroke-width="1" stroke-dasharray="5,4"/>'
    )
    out.append(
        f'<line x1="{_f(t.x0)}" y1="{_f(ry)}" x2="{_f(t.x1)}" y2="{_f(ry)}" '
        f'stroke="#888888" stroke-width="1" stroke-dasharray="5,4"/>'
    )
    quadrant_labels = (
        ("Group I", t.x0 + 6, t.y0 + 14, "start"),
        ("Group II", t.x1 - 6, t.y0 + 14, "end"),
        ("Group III", t.x0 + 6, t.y1 - 6, "start"),
        ("Group IV", t.x1 - 6, t.y1 - 6, "end"),
    )
    for text, qx, qy, anchor in quadrant_labels:
        out.append(
            f'<text x="{_f(qx)}" y="{_f(qy)}" font-family="sans-serif" font-size="{fs}" '
            f'fill="#666666" text-anchor="{anchor}">{text}</text>'
        )

    # points: whisker, marker, clean ring, in input order
    for p in points:
        px, py = t.sx(p.cv), t.sy(p.mean_accu)
        color = "#1a5fb4" if not p.is_reference else "#000000"
        if style.show_whiskers:
            y_lo, y_hi = t.sy(p.min_accu), t.sy(p.max_accu)
            out.append(
                f'<line x1="{_f(px)}" y1="{_f(y_lo)}" x2="{_f(px)}" y2="{_f(y_hi)}" '
                f'stroke="{color}" stroke-width="1"/>'
            )
            for yc in (y_lo, y_hi):
                out.append(
                    f'<line x1="{_f(px - 3)}" y1="{_f(yc)}" x2="{_f(px + 3)}" y2="{_f(yc)}" '
                    f'stroke="{color}" stroke-width="1"/>'
                )
        if p.is_reference:
            out.append(
                f'<rect x="{_f(px - 4)}" y="{_f(py - 4)}" width="8.00" height="8.00" '
                f'fill="{color}"/>'
            )
        else:
            out.append(f'<circle cx="{_f(px)}" cy="{_f(py)}" r="4.00" fill="{color}"/>')
        if style.show_clean_ring:
            cy = t.sy(p.clean_accu)
            out.append(
                f'<circle cx="{_f(px)}" cy="{_f(cy)}" r="3.50" fill="none" '
                f'stroke="#cc0000" stroke-width="1.5"/>'
            )

    # labels last so markers never cover them; ladder offsets avoid collisions
    for i, p in enumerate(points):
        px, py = t.sx(p.cv), t.sy(p.mean_accu)
        dy = -(8.0 + 11.0 * (i % 3))
        out.append(
            f'<text x="{_f(px + 6)}" y="{_f(py + dy)}" font-family="sans-serif" '
            f'font-size="{fs - 2}">{escape(p.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
