"""Dependency-free SVG line plots with deterministic output."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "line_plot_svg", "loglog_fit", "slope_annotation"]

_W, _H = 640, 420
_L, _R, _T, _B = 70, 20, 40, 55
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple
    y: tuple


def loglog_fit(x, y) -> tuple[float, float]:
    """Least-squares (slope, intercept) of log10 y against log10 x."""
    lx, ly = np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def slope_annotation(slope: float) -> str:
    return f"fitted slope = {slope:.4f}"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float, log: bool) -> str:
    return f"1e{int(round(v))}" if log else f"{v:.3g}"


def line_plot_svg(series, title: str, xlabel: str, ylabel: str,
                  logx: bool = False, logy: bool = False, annotation: str | None = None) -> str:
    """Render one or more series as a standalone SVG document."""
    series = [s for s in series if len(s.x)]
    tx = (lambda v: np.log10(v)) if logx else (lambda v: np.asarray(v, float))
    ty = (lambda v: np.log10(v)) if logy else (lambda v: np.asarray(v, float))
    xs = [tx(np.asarray(s.x, float)) for s in series]
    ys = [ty(np.asarray(s.y, float)) for s in series]
    allx, ally = np.concatenate(xs), np.concatenate(ys)
    finite = np.isfinite(allx) & np.isfinite(ally)
    x0, x1 = float(allx[finite].min()), float(allx[finite].max())
    y0, y1 = float(ally[finite].min()), float(ally[finite].max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = _W - _L - _R, _H - _T - _B

    def px(v):
        return _L + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _T + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{_L}" y="{_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for j in range(5):
        fx = x0 + (x1 - x0) * j / 4
        fy = y0 + (y1 - y0) * j / 4
        out.append(f'<text x="{_fmt(px(fx))}" y="{_T + ph + 18}" text-anchor="middle" '
                   f'font-size="11">{_tick(fx, logx)}</text>')
        out.append(f'<text x="{_L - 6}" y="{_fmt(py(fy) + 4)}" text-anchor="end" '
                   f'font-size="11">{_tick(fy, logy)}</text>')
    out.append(f'<text x="{_L + pw / 2}" y="{_H - 12}" text-anchor="middle" '
               f'font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{_T + ph / 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {_T + ph / 2})">{escape(ylabel)}</text>')
    for k, (s, sx, sy) in enumerate(zip(series, xs, ys)):
        color = _COLORS[k % len(_COLORS)]
        ok = np.isfinite(sx) & np.isfinite(sy)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(sx[ok], sy[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{_L + 10}" y="{_T + 16 + 15 * k}" font-size="12" '
                   f'fill="{color}">{escape(s.label)}</text>')
    if annotation:
        out.append(f'<text x="{_L + pw - 8}" y="{_T + ph - 10}" text-anchor="end" '
                   f'font-size="12" class="annotation">{escape(annotation)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

