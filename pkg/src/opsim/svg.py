"""Static SVG line charts of mean events-to-TE against PQ, no plotting library."""

from __future__ import annotations

import math
from typing import Any, Dict, List, Sequence, Tuple

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")

WIDTH, HEIGHT = 720, 460
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 50, 80


class EmptySelection(ValueError):
    pass


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _label(value: float) -> str:
    return f"{value:g}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + step * 1e-9:
        ticks.append(round(v, 12))
        v += step
    return ticks


def select_series(rows: Sequence[Dict[str, Any]], facet) -> Dict[Tuple[float, int], List[Tuple[float, float]]]:
    series: Dict[Tuple[float, int], List[Tuple[float, float]]] = {}
    for row in rows:
        if row["adjust_error"] != facet.adjust_error or row["cutoff"] != facet.cutoff_time:
            continue
        series.setdefault((row["fa"], row["nd"]), []).append((row["pq"], row["mean_events"]))
    for points in series.values():
        points.sort()
    return dict(sorted(series.items()))


def render_facet(rows: Sequence[Dict[str, Any]], facet) -> str:
    """One line per swept value; x = PQ (log, ascending), y = mean events."""
    series = select_series(rows, facet)
    if not series:
        raise EmptySelection(
            f"no rows with adjust_error={facet.adjust_error} cutoff={facet.cutoff_time}"
        )
    fas = {k[0] for k in series}
    nds = {k[1] for k in series}

    def name(key: Tuple[float, int]) -> str:
        fa, nd = key
        if facet.sweep == "fa" and len(nds) == 1:
            return f"FA = {_label(fa)}"
        if facet.sweep == "nd" and len(fas) == 1:
            return f"ND = {nd}"
        return f"FA = {_label(fa)}, ND = {nd}"

    xs = sorted({x for pts in series.values() for x, _ in pts})
    ys = [y for pts in series.values() for _, y in pts]
    log_y = all(y > 0 for y in ys) and max(ys) / min(ys) > 50
    lx = [math.log10(x) for x in xs]
    x_lo, x_hi = lx[0], lx[-1]
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if log_y:
        y_lo = math.floor(math.log10(min(ys)))
        y_hi = math.ceil(math.log10(max(ys)))
        if y_hi == y_lo:
            y_hi += 1
        y_ticks = [float(p) for p in range(y_lo, y_hi + 1)]
    else:
        y_ticks = _nice_ticks(0.0, max(max(ys), 1.0))
        y_lo, y_hi = y_ticks[0], y_ticks[-1]

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x: float) -> float:
        return LEFT + (math.log10(x) - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        v = math.log10(y) if log_y else y
        return TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{LEFT + pw / 2:.1f}" y="28" text-anchor="middle" font-size="16">{_esc(facet.name)}'
        f" (Adjust-Error={facet.adjust_error}, Cutoff-Time={facet.cutoff_time})</text>",
    ]
    for t in y_ticks:
        y = TOP + ph - (t - y_lo) / (y_hi - y_lo) * ph
        text = _label(10 ** t) if log_y else _label(t)
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{text}</text>')
    for x in xs:
        xp = px(x)
        out.append(f'<line x1="{xp:.2f}" y1="{TOP + ph}" x2="{xp:.2f}" y2="{TOP + ph + 5}" stroke="#000000"/>')
        out.append(f'<text x="{xp:.2f}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{_label(x)}</text>')
    out.append(f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="#000000"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="#000000"/>')
    out.append(
        f'<text x="{LEFT + pw / 2:.1f}" y="{TOP + ph + 40}" text-anchor="middle" font-size="13">'
        "Performance Quality (PQ, log scale)</text>"
    )
    out.append(
        f'<text x="{LEFT + pw / 2:.1f}" y="{TOP + ph + 60}" text-anchor="middle" font-size="11" fill="#555555">'
        "Samples are measured from high to low PQ (right to left).</text>"
    )
    ylab = "mean events to reach TE" + (" (log scale)" if log_y else "")
    out.append(
        f'<text x="20" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 20 {TOP + ph / 2:.1f})">{ylab}</text>'
    )
    for i, (key, pts) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts if not (log_y and y <= 0))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 10 + i * 20
        lx0 = LEFT + pw + 20
        out.append(f'<line x1="{lx0}" y1="{ly}" x2="{lx0 + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx0 + 30}" y="{ly + 4}" font-size="12">{_esc(name(key))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
