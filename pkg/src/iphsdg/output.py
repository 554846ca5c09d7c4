"""CSV and SVG emission for trajectories.

SVG is written by hand so the artifacts are deterministic, diffable text with
no plotting dependency.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .integrator import Trajectory


def _num(v) -> str:
    v = float(v)
    return "" if math.isnan(v) else f"{v:.17g}"


def csv_columns(traj: Trajectory) -> list:
    states = list(traj.state_names) or [f"x{i + 1}" for i in range(traj.states.shape[1])]
    obs = [k for k in traj.observables if k not in states and k != "H"]
    m = traj.inputs.shape[1]
    return (
        ["step", "t", *states, "H", *obs]
        + [f"y{i + 1}" for i in range(m)]
        + [f"u{i + 1}" for i in range(m)]
        + ["energy_residual", "entropy_production"]
    )


def emit_csv(traj: Trajectory, path) -> Path:
    """Write one row per state, initial state included.

    Row ``k`` holds state ``k``; its output, input and residual columns belong
    to the step that produced it, so they are empty on row 0. Numbers use 17
    significant digits.
    """
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    states = list(traj.state_names) or [f"x{i + 1}" for i in range(traj.states.shape[1])]
    obs = [k for k in traj.observables if k not in states and k != "H"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_columns(traj))
        for k in range(len(traj.times)):
            row = [str(k), _num(traj.times[k])]
            row += [_num(v) for v in traj.states[k]]
            row.append(_num(traj.observables["H"][k]))
            row += [_num(traj.observables[name][k]) for name in obs]
            row += [_num(v) for v in traj.outputs[k]]
            row += [_num(v) for v in traj.inputs[k]]
            row += [_num(traj.energy_residual[k]), _num(traj.entropy_production[k])]
            writer.writerow(row)
    return path


def read_csv(path) -> dict:
    """Columns of an emitted CSV as float arrays (empty cells become NaN)."""
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {
        name: np.array([float(r[i]) if r[i] else np.nan for r in body]) for i, name in enumerate(header)
    }


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def line_plot_svg(series: Sequence[tuple], title: str, xlabel: str, ylabel: str,
                  width: int = 640, height: int = 400) -> str:
    """Render ``(label, x, y)`` series as a standalone SVG document."""
    series = [(label, np.asarray(x, float), np.asarray(y, float)) for label, x, y in series]
    if not series or any(len(x) == 0 or len(x) != len(y) for _, x, y in series):
        raise ValueError("nothing to plot: empty or mismatched series")
    finite = [(x[np.isfinite(y)], y[np.isfinite(y)]) for _, x, y in series]
    if any(len(x) == 0 for x, _ in finite):
        raise ValueError("nothing to plot: series without finite values")
    xlo = min(float(x.min()) for x, _ in finite)
    xhi = max(float(x.max()) for x, _ in finite)
    ylo = min(float(y.min()) for _, y in finite)
    yhi = max(float(y.max()) for _, y in finite)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    span = yhi - ylo
    pad = 0.05 * span if span > 0 else (0.05 * abs(yhi) or 1.0)
    ylo, yhi = ylo - pad, yhi + pad

    left, right, top, bottom = 80, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return top + (yhi - v) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(xlo, xhi):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.6g}</text>')
    for t in _nice_ticks(ylo, yhi):
        Y = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{left}" y1="{Y:.2f}" x2="{left + pw}" y2="{Y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, ((label, _, _), (x, y)) in enumerate(zip(series, finite)):
        color = PALETTE[i % len(PALETTE)]
        # thin dense series to about one point per pixel
        stride = max(1, len(x) // (2 * pw))
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[::stride], y[::stride]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 16 + 16 * i
        out.append(f'<line x1="{left + pw - 110}" y1="{ly - 4}" x2="{left + pw - 90}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 85}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_series(traj: Trajectory) -> dict:
    """The four standard diagnostic plots as ``name -> (series, title, xlabel, ylabel)``."""
    if traj.steps < 1:
        raise ValueError("trajectory has no steps to plot")
    t = traj.times
    names = list(traj.state_names)

    def state(name):
        return traj.states[:, names.index(name)]

    cumulative = np.concatenate([[0.0], np.cumsum(traj.entropy_production[1:])])
    plots = {
        "height_volume": ([("q", t, state("q")), ("V", t, state("V"))],
                          "Height and volume", "t", "q, V"),
        "entropy_production": ([("cumulative entropy production", t, cumulative)],
                               "Cumulative entropy production", "t", "sum S(k+1)-S(k)-h y.tau"),
        "energy_residual": ([("energy residual", t[1:], traj.energy_residual[1:])],
                            "Energy balance residual per step", "t", "H(k+1)-H(k)-h y.u"),
        "temperature": ([("T", t, traj.observables["T"])], "Gas temperature", "t", "T"),
    }
    return plots


def emit_svg_plots(traj: Trajectory, paths: dict) -> list:
    """Write the plots named in ``paths`` (keys as in :func:`plot_series`)."""
    plots = plot_series(traj)
    written = []
    for name, path in paths.items():
        if name not in plots:
            raise ValueError(f"unknown plot {name!r}; available {sorted(plots)}")
        series, title, xlabel, ylabel = plots[name]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(line_plot_svg(series, title, xlabel, ylabel))
        written.append(path)
    return written
