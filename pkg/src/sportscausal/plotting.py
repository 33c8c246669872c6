"""Static SVG impact plots, written without a plotting dependency.

Three stacked panels in the causalimpact layout: observed series against
the counterfactual, pointwise effect, cumulative effect. Colors follow the
convention red = treated, blue = control, black = predicted.
"""

from __future__ import annotations

import os
from pathlib import Path

RED = "#d62728"
BLUE = "#1f77b4"
BLACK = "#000000"
GREY = "#999999"

WIDTH = 860
PANEL_H = 240
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 34, 30


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span == 0:
        span = 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in values]


def _polyline(xs, ys, color, dash=None, width=1.6):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}"'
            f'{dash_attr} points="{pts}"/>')


class _Panel:
    def __init__(self, title, top):
        self.title = title
        self.top = top
        self.series = []  # (ts, values, color, dash, label)

    def add(self, ts, values, color, label, dash=None):
        if len(ts) > 0:
            self.series.append((list(ts), [float(v) for v in values], color, dash, label))

    def render(self, t_min, t_max, t0):
        if not self.series:
            return ""
        all_vals = [v for s in self.series for v in s[1]]
        lo, hi = min(all_vals), max(all_vals)
        pad = 0.06 * (hi - lo if hi > lo else max(abs(hi), 1.0))
        lo, hi = lo - pad, hi + pad
        x0, x1 = MARGIN_L, WIDTH - MARGIN_R
        y0, y1 = self.top + MARGIN_T, self.top + PANEL_H - MARGIN_B

        parts = [
            f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
            f'fill="none" stroke="{GREY}" stroke-width="1"/>',
            f'<text x="{x0}" y="{self.top + 22}" font-size="15" '
            f'font-family="sans-serif">{self.title}</text>',
        ]
        # zero line when the range straddles zero
        if lo < 0 < hi:
            zy = _scale([0.0], lo, hi, y1, y0)[0]
            parts.append(f'<line x1="{x0}" y1="{zy:.2f}" x2="{x1}" y2="{zy:.2f}" '
                         f'stroke="{GREY}" stroke-width="0.8" stroke-dasharray="2,3"/>')
        # intervention marker
        tx = _scale([t0 + 0.5], t_min, t_max, x0, x1)[0]
        parts.append(f'<line x1="{tx:.2f}" y1="{y0}" x2="{tx:.2f}" y2="{y1}" '
                     f'stroke="{GREY}" stroke-width="1" stroke-dasharray="5,4"/>')
        for ts, vals, color, dash, _ in self.series:
            xs = _scale(ts, t_min, t_max, x0, x1)
            ys = _scale(vals, lo, hi, y1, y0)
            parts.append(_polyline(xs, ys, color, dash))
        # y-axis extremes
        for val, ypix in ((hi, y0 + 11), (lo, y1)):
            parts.append(f'<text x="{x0 - 6}" y="{ypix:.2f}" font-size="11" '
                         f'font-family="sans-serif" text-anchor="end">{val:.4g}</text>')
        # legend
        lx = x0 + 10
        for ts, vals, color, dash, label in self.series:
            parts.append(f'<line x1="{lx}" y1="{y0 + 12}" x2="{lx + 22}" y2="{y0 + 12}" '
                         f'stroke="{color}" stroke-width="2"'
                         + (f' stroke-dasharray="{dash}"' if dash else "") + "/>")
            parts.append(f'<text x="{lx + 26}" y="{y0 + 16}" font-size="11" '
                         f'font-family="sans-serif">{label}</text>')
            lx += 32 + 7 * len(label)
        return "\n".join(parts)


def write_impact_svg(path, rows, t0: int) -> None:
    """Render the three-panel impact figure from series.csv rows.

    ``rows`` are dicts with keys t, treated, control and optionally
    predicted_treated, pointwise_effect, cumulative_effect,
    predicted_control (absent values as None).
    """
    ts = [r["t"] for r in rows]
    t_min, t_max = min(ts), max(ts)

    obs = _Panel("Observed vs counterfactual", 0)
    obs.add(ts, [r["treated"] for r in rows], RED, "treated")
    obs.add(ts, [r["control"] for r in rows], BLUE, "control")
    pred_rows = [r for r in rows if r.get("predicted_treated") is not None]
    obs.add([r["t"] for r in pred_rows],
            [r["predicted_treated"] for r in pred_rows],
            BLACK, "predicted treated", dash="6,4")
    ctrl_rows = [r for r in rows if r.get("predicted_control") is not None]
    obs.add([r["t"] for r in ctrl_rows],
            [r["predicted_control"] for r in ctrl_rows],
            BLACK, "predicted control", dash="2,3")

    point = _Panel("Pointwise effect", PANEL_H)
    eff_rows = [r for r in rows if r.get("pointwise_effect") is not None]
    point.add([r["t"] for r in eff_rows],
              [r["pointwise_effect"] for r in eff_rows], BLACK, "effect")

    cum = _Panel("Cumulative effect", 2 * PANEL_H)
    cum_rows = [r for r in rows if r.get("cumulative_effect") is not None]
    cum.add([r["t"] for r in cum_rows],
            [r["cumulative_effect"] for r in cum_rows], BLACK, "cumulative")

    height = PANEL_H * (3 if cum.series or point.series else 1)
    body = "\n".join(p.render(t_min, t_max, t0) for p in (obs, point, cum) if p.series)
    svg = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
           f'height="{height}" viewBox="0 0 {WIDTH} {height}">\n'
           f'<rect width="{WIDTH}" height="{height}" fill="white"/>\n{body}\n</svg>\n')
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(svg, encoding="utf-8")
    os.replace(tmp, path)
