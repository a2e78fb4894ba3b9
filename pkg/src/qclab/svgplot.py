"""Minimal static SVG plots: polylines with log axes, no dependencies."""

from __future__ import annotations

import math

_PALETTE = ("#1f5fa8", "#c23b22", "#2e8b57", "#8b5fa8", "#b8860b", "#444444")

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 36, 50


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        return [10.0 ** e for e in range(math.floor(lo), math.ceil(hi) + 1)]
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / 4 or 1))
    while span / step > 8:
        step *= 2
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * max(1, abs(hi)):
        out.append(t)
        t += step
    return out


def polyline_plot(path, series: dict, title: str = "", xlabel: str = "",
                  ylabel: str = "", logx: bool = False, logy: bool = True) -> None:
    """Write a plot of label -> (xs, ys) polylines; non-positive points are
    dropped on log axes."""
    pts = {}
    for label, (xs, ys) in series.items():
        keep = []
        for x, y in zip(xs, ys):
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            keep.append((math.log10(x) if logx else x,
                         math.log10(y) if logy else y))
        if keep:
            pts[label] = keep
    allp = [p for k in pts.values() for p in k]
    if not allp:
        allp = [(0.0, 0.0), (1.0, 1.0)]
    x0 = min(p[0] for p in allp); x1 = max(p[0] for p in allp)
    y0 = min(p[1] for p in allp); y1 = max(p[1] for p in allp)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(x):
        return _ML + (x - x0) / (x1 - x0) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - y0) / (y1 - y0) * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>']
    out.append(f'<text x="{_W // 2}" y="20" text-anchor="middle">{title}</text>')
    # axes
    out.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" '
               'stroke="black"/>')
    out.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    for t in _ticks(x0, x1, logx):
        v = math.log10(t) if logx else t
        if v < x0 - 1e-9 or v > x1 + 1e-9:
            continue
        label = f"1e{round(math.log10(t))}" if logx else f"{t:g}"
        out.append(f'<line x1="{sx(v)}" y1="{_H - _MB}" x2="{sx(v)}" y2="{_H - _MB + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{sx(v)}" y="{_H - _MB + 18}" text-anchor="middle">{label}</text>')
    for t in _ticks(y0, y1, logy):
        v = math.log10(t) if logy else t
        if v < y0 - 1e-9 or v > y1 + 1e-9:
            continue
        label = f"1e{round(math.log10(t))}" if logy else f"{t:g}"
        out.append(f'<line x1="{_ML - 5}" y1="{sy(v)}" x2="{_ML}" y2="{sy(v)}" '
                   'stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{sy(v) + 4}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{_H // 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_H // 2})">{ylabel}</text>')
    for i, (label, p) in enumerate(pts.items()):
        color = _PALETTE[i % len(_PALETTE)]
        d = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in p)
        out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in p:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
        out.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 * (i + 1)}" text-anchor="end" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("\n".join(out))
