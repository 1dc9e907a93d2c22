"""CSV tables and SVG comparison plots.

Floats are written with 17 significant digits so every value parses back to
the identical double.
"""

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .laws import ErrorSample

FREQUENCY_COLUMNS = ("h", "n_effective", "n_failed", "frequency", "two_steps", "sigmoid")
SAMPLE_COLUMNS = ("h", "seed", "degree", "error")
LAW_COLUMNS = ("h", "two_steps", "sigmoid")
CONVERGENCE_COLUMNS = ("h", "error", "slope")


def fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.17g}"


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def write_frequency_csv(table, path):
    _write(path, FREQUENCY_COLUMNS,
           ((r.h, r.n_effective, r.n_failed, r.frequency, r.two_steps, r.sigmoid)
            for r in table.rows))


def read_frequency_csv(path):
    """Rows as dicts with ints for the counts and floats elsewhere."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != FREQUENCY_COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [
            {k: int(v) if k in ("n_effective", "n_failed") else float(v) for k, v in row.items()}
            for row in reader
        ]


def write_samples_csv(samples, path):
    _write(path, SAMPLE_COLUMNS, ((s.h, int(s.seed), int(s.degree), s.error) for s in samples))


def read_samples_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SAMPLE_COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [
            ErrorSample(float(r["h"]), int(r["seed"]), int(r["degree"]), float(r["error"]))
            for r in reader
        ]


def write_laws_csv(rows, path_or_file):
    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(LAW_COLUMNS)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    else:
        _write(path_or_file, LAW_COLUMNS, rows)


def write_convergence_csv(result, path):
    slope = "n/a" if result.slope is None else fmt(result.slope)
    _write(path, CONVERGENCE_COLUMNS, ((h, e, slope) for h, e in zip(result.h_actual, result.errors)))


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 30, 40, 60


def _ticks(lo, hi, n=5):
    step = (hi - lo) / n
    return [lo + i * step for i in range(n + 1)]


def comparison_svg(h, frequency, laws: dict, h_star=None, title="") -> str:
    """Frequency curve (solid) against law curves (dotted), marker at h*.

    ``laws`` maps a legend label to the law values at ``h``.
    """
    xs = list(h)
    x_lo, x_hi = min(xs), max(xs)
    if h_star is not None and math.isfinite(h_star):
        x_lo, x_hi = min(x_lo, h_star), max(x_hi, h_star)
    pad = 0.05 * ((x_hi - x_lo) or 1.0)
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_lo, y_hi = -0.05, 1.05

    def px(x):
        return _LEFT + (x - x_lo) / (x_hi - x_lo) * (_W - _LEFT - _RIGHT)

    def py(y):
        return _H - _BOTTOM - (y - y_lo) / (y_hi - y_lo) * (_H - _TOP - _BOTTOM)

    def polyline(ys, style):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
        return f'<polyline fill="none" {style} points="{pts}"/>'

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    x0, x1 = px(x_lo), px(x_hi)
    y0, y1 = py(y_lo), py(y_hi)
    out.append(f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" '
               'fill="none" stroke="black"/>')
    for t in _ticks(x_lo + pad, x_hi - pad):
        out.append(f'<line x1="{px(t):.2f}" y1="{y0:.2f}" x2="{px(t):.2f}" y2="{y0 + 5:.2f}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{y0 + 18:.2f}" text-anchor="middle">{t:.3g}</text>')
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<line x1="{x0 - 5:.2f}" y1="{py(t):.2f}" x2="{x0:.2f}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8:.2f}" y="{py(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{_H - 15}" text-anchor="middle">h</text>')
    out.append(f'<text x="18" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">P(error P_m &lt;= error P_k)</text>')

    out.append(polyline(frequency, 'stroke="black" stroke-width="2"'))
    colors = ("#1f5fa8", "#b8452a")
    legend = [("statistical frequency", 'stroke="black" stroke-width="2"')]
    for (label, ys), color in zip(laws.items(), colors):
        style = f'stroke="{color}" stroke-width="2" stroke-dasharray="2,4"'
        out.append(polyline(ys, style))
        legend.append((label, style))
    if h_star is not None and math.isfinite(h_star):
        out.append(f'<line x1="{px(h_star):.2f}" y1="{y0:.2f}" x2="{px(h_star):.2f}" y2="{y1:.2f}" '
                   'stroke="gray" stroke-dasharray="6,3"/>')
        out.append(f'<text x="{px(h_star) + 4:.2f}" y="{y1 + 14:.2f}" fill="gray">h*={h_star:.3g}</text>')
    for i, (label, style) in enumerate(legend):
        ly = y1 + 20 + 18 * i
        out.append(f'<line x1="{x1 - 190:.2f}" y1="{ly:.2f}" x2="{x1 - 160:.2f}" y2="{ly:.2f}" {style}/>')
        out.append(f'<text x="{x1 - 152:.2f}" y="{ly + 4:.2f}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_text(path, text):
    Path(path).write_text(text)
