"""Minimal deterministic SVG output for scan results.

Three plot shapes cover every artifact the command-line driver emits:
polyline curves (exponent or count against energy), eigenvalue ladders
(one tick per eigenvalue), and horizontal span rows (gap profiles).
Output is plain hand-assembled SVG text with %.6g coordinates so that a
repeated run writes byte-identical files; nothing here depends on a
plotting library.
"""

from __future__ import annotations

import math
from typing import Sequence

_WIDTH = 800.0
_HEIGHT = 500.0
_MARGIN_L = 70.0
_MARGIN_R = 20.0
_MARGIN_T = 40.0
_MARGIN_B = 50.0

# Okabe-Ito palette, colorblind-safe and stable across runs.
_COLORS = ("#0072b2", "#d55e00", "#009e73", "#cc79a7",
           "#e69f00", "#56b4e9", "#f0e442", "#000000")


def _fmt(x: float) -> str:
    return "%.6g" % x


def _finite(values) -> list[float]:
    return [float(v) for v in values if math.isfinite(v)]


class _Frame:
    """Affine map from data coordinates to the plot rectangle."""

    def __init__(self, xs: list[float], ys: list[float]):
        if not xs or not ys:
            raise ValueError("nothing finite to plot")
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        if x_hi - x_lo <= 0:
            x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
        if y_hi - y_lo <= 0:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
        pad = 0.04 * (y_hi - y_lo)
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo - pad, y_hi + pad

    def x(self, v: float) -> float:
        t = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return _MARGIN_L + t * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def y(self, v: float) -> float:
        t = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return _HEIGHT - _MARGIN_B - t * (_HEIGHT - _MARGIN_T - _MARGIN_B)


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0 or not math.isfinite(span):
        return [lo]
    raw = span / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    else:
        step = 10.0 * mag
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append(0.0 if abs(v) < 1e-12 * span else v)
        v += step
    return out


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(_WIDTH)}'
        f' {_fmt(_HEIGHT)}" font-family="sans-serif" font-size="13">',
        f'<rect width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" fill="white"/>',
        f'<text x="{_fmt(_WIDTH / 2)}" y="24" text-anchor="middle" '
        f'font-size="16">{_escape(title)}</text>',
    ]


def _axes(frame: _Frame, xlabel: str, ylabel: str) -> list[str]:
    parts = []
    x0, x1 = _MARGIN_L, _WIDTH - _MARGIN_R
    y0, y1 = _HEIGHT - _MARGIN_B, _MARGIN_T
    parts.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y1)}" width="{_fmt(x1 - x0)}" '
                 f'height="{_fmt(y0 - y1)}" fill="none" stroke="#333"/>')
    for v in _ticks(frame.x_lo, frame.x_hi):
        px = frame.x(v)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(y0)}" x2="{_fmt(px)}" '
                     f'y2="{_fmt(y0 + 5)}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{_fmt(y0 + 20)}" '
                     f'text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(frame.y_lo, frame.y_hi):
        py = frame.y(v)
        parts.append(f'<line x1="{_fmt(x0 - 5)}" y1="{_fmt(py)}" x2="{_fmt(x0)}" '
                     f'y2="{_fmt(py)}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(x0 - 8)}" y="{_fmt(py + 4)}" '
                     f'text-anchor="end">{_fmt(v)}</text>')
    parts.append(f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(_HEIGHT - 10)}" '
                 f'text-anchor="middle">{_escape(xlabel)}</text>')
    parts.append(f'<text x="18" y="{_fmt((y0 + y1) / 2)}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_fmt((y0 + y1) / 2)})">'
                 f'{_escape(ylabel)}</text>')
    return parts


def _legend(labels: Sequence[str]) -> list[str]:
    parts = []
    lx = _WIDTH - _MARGIN_R - 170.0
    ly = _MARGIN_T + 12.0
    for i, label in enumerate(labels):
        color = _COLORS[i % len(_COLORS)]
        y = ly + 18.0 * i
        parts.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(y - 4)}" '
                     f'x2="{_fmt(lx + 24)}" y2="{_fmt(y - 4)}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_fmt(lx + 30)}" y="{_fmt(y)}">'
                     f'{_escape(label)}</text>')
    return parts


def line_plot(path, xs: Sequence[float], ys_list: Sequence[Sequence[float]],
              labels: Sequence[str], title: str, xlabel: str,
              ylabel: str) -> None:
    """Write one SVG with a polyline per series over a shared x axis.

    Non-finite samples break the polyline rather than being interpolated
    across.
    """
    xs = [float(x) for x in xs]
    all_y = []
    for ys in ys_list:
        all_y.extend(_finite(ys))
    if not all_y:
        raise ValueError("no finite samples in any series")
    frame = _Frame(_finite(xs), all_y)
    parts = _header(title)
    parts.extend(_axes(frame, xlabel, ylabel))
    for i, ys in enumerate(ys_list):
        color = _COLORS[i % len(_COLORS)]
        runs: list[list[str]] = [[]]
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(float(y)):
                runs[-1].append(f"{_fmt(frame.x(x))},{_fmt(frame.y(float(y)))}")
            elif runs[-1]:
                runs.append([])
        for run in runs:
            if len(run) >= 2:
                parts.append(f'<polyline points="{" ".join(run)}" fill="none" '
                             f'stroke="{color}" stroke-width="1.5"/>')
            elif len(run) == 1:
                cx, cy = run[0].split(",")
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="2" '
                             f'fill="{color}"/>')
    if any(labels):
        parts.extend(_legend(labels))
    parts.append("</svg>")
    _write(path, parts)


def ladder_plot(path, eigenvalues: Sequence[float], title: str,
                xlabel: str = "E") -> None:
    """Write one SVG with a vertical tick per eigenvalue along the x axis."""
    vals = _finite(eigenvalues)
    if not vals:
        raise ValueError("no finite eigenvalues to plot")
    frame = _Frame(vals, [0.0, 1.0])
    parts = _header(title)
    parts.extend(_axes(frame, xlabel, "level"))
    y0 = frame.y(0.15)
    y1 = frame.y(0.85)
    for v in sorted(vals):
        px = frame.x(v)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(y0)}" x2="{_fmt(px)}" '
                     f'y2="{_fmt(y1)}" stroke="{_COLORS[0]}" '
                     f'stroke-width="1"/>')
    parts.append("</svg>")
    _write(path, parts)


def span_plot(path, rows: Sequence[tuple[str, Sequence[tuple[float, float]]]],
              title: str, xlabel: str = "E") -> None:
    """Write one SVG with a labelled row of horizontal intervals per entry.

    rows is a sequence of (label, [(lo, hi), ...]); used for spectrum/gap
    profiles across a parameter family.
    """
    xs = []
    for _, spans in rows:
        for lo, hi in spans:
            xs.extend([float(lo), float(hi)])
    xs = _finite(xs)
    if not xs:
        raise ValueError("no finite spans to plot")
    frame = _Frame(xs, [0.0, float(max(1, len(rows)))])
    parts = _header(title)
    parts.extend(_axes(frame, xlabel, ""))
    for i, (label, spans) in enumerate(rows):
        yc = frame.y(len(rows) - i - 0.5)
        color = _COLORS[i % len(_COLORS)]
        for lo, hi in spans:
            parts.append(f'<line x1="{_fmt(frame.x(float(lo)))}" '
                         f'y1="{_fmt(yc)}" x2="{_fmt(frame.x(float(hi)))}" '
                         f'y2="{_fmt(yc)}" stroke="{color}" '
                         f'stroke-width="6" stroke-linecap="butt"/>')
        parts.append(f'<text x="{_fmt(_MARGIN_L - 8)}" y="{_fmt(yc + 4)}" '
                     f'text-anchor="end" font-size="11">{_escape(str(label))}'
                     f'</text>')
    parts.append("</svg>")
    _write(path, parts)


def _write(path, parts: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
