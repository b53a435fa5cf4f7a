# Role: 収束実験の log-log 図（横軸 log2 N、縦軸 log2 誤差）を SVG 文字列として生成する。
# How: 固定の 800x600 ビューポートに、(r, signal) ごとの折れ線と当てはめた直線（破線）を描く。時刻などの可変情報は埋め込まないので、同じ入力からは同じバイト列になる。
# Key functions: `loglog_svg()`
# Collaboration: cli の `convergence` コマンドが `ExperimentResult` から呼び、paths の原子的書き込みで plot.svg を保存する。
from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from .experiments import ExperimentResult

WIDTH = 800
HEIGHT = 600
MARGIN = 70
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def loglog_svg(result: ExperimentResult, metric: str = "node", title: str = "convergence") -> str:
    curves: dict[tuple[float, str], list[tuple[float, float]]] = {}
    for row in result.means:
        err = row.mean_node if metric == "node" else row.mean_pooled
        if err > 0:
            curves.setdefault((row.r, row.signal), []).append((math.log2(row.n), math.log2(err)))
    pts = [p for curve in curves.values() for p in curve]
    if not pts:
        xs: Sequence[float] = [0.0, 1.0]
        ys: Sequence[float] = [0.0, 1.0]
    else:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
    x0, x1 = math.floor(min(xs)), math.ceil(max(xs))
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x: float) -> float:
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def sy(y: float) -> float:
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="30" text-anchor="middle" font-size="18">{escape(title)} ({escape(metric)})</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 20}" text-anchor="middle" font-size="14">log2 N</text>',
        f'<text x="20" y="{HEIGHT // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {HEIGHT // 2})">log2 error</text>',
    ]
    for t in _ticks(x0, x1):
        out.append(
            f'<text x="{_fmt(sx(t))}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" font-size="11">{t}</text>'
        )
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN - 8}" y="{_fmt(sy(t) + 4)}" text-anchor="end" font-size="11">{t}</text>')
    slopes = {(s.r, s.signal): s for s in result.slopes if s.metric == metric}
    for idx, (key, curve) in enumerate(curves.items()):
        color = PALETTE[idx % len(PALETTE)]
        path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in curve)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        label = f"r={key[0]:g} {key[1]}"
        fit = slopes.get(key)
        if fit is not None:
            ax, bx = curve[0][0], curve[-1][0]
            ay, by = fit.slope * ax + fit.intercept, fit.slope * bx + fit.intercept
            out.append(
                f'<line x1="{_fmt(sx(ax))}" y1="{_fmt(sy(ay))}" x2="{_fmt(sx(bx))}" y2="{_fmt(sy(by))}" '
                f'stroke="{color}" stroke-dasharray="6,4"/>'
            )
            label += f" (slope {fit.slope:.3f})"
        ly = MARGIN + 20 * idx
        out.append(f'<text x="{WIDTH - MARGIN - 200}" y="{ly}" font-size="12" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
