"""A minimal SVG line-chart writer (no external plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def line_chart(series, *, title="", xlabel="", ylabel="", logx=False, logy=False,
               width=640, height=400, markers=False) -> str:
    """Render ``[(label, xs, ys), ...]`` as an SVG document string."""
    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    pts = [(tx(x), ty(y)) for _, xs, ys in series for x, y in zip(xs, ys)
           if (not logx or x > 0) and (not logy or y > 0) and math.isfinite(x) and math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    ml, mr, mt, mb = 70, 20, 30, 50
    pw, ph = width - ml - mr, height - mt - mb

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">'
           f'{escape(title)}</text>',
           f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">'
           f'{escape(xlabel)}</text>',
           f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
           f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>']
    for v in _ticks(x0, x1):
        lab = f"{10 ** v:.3g}" if logx else f"{v:.3g}"
        out.append(f'<text x="{px(v):.1f}" y="{mt + ph + 16}" text-anchor="middle">{lab}</text>')
    for v in _ticks(y0, y1):
        lab = f"{10 ** v:.3g}" if logy else f"{v:.3g}"
        out.append(f'<text x="{ml - 6}" y="{py(v) + 4:.1f}" text-anchor="end">{lab}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        coords = [(px(tx(x)), py(ty(y))) for x, y in zip(xs, ys)
                  if (not logx or x > 0) and (not logy or y > 0)]
        if markers:
            out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="1.5" fill="{color}"/>' for a, b in coords]
        else:
            path = " ".join(f"{a:.2f},{b:.2f}" for a, b in coords)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{ml + pw - 8}" y="{mt + 16 + 14 * k}" text-anchor="end" '
                   f'fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
