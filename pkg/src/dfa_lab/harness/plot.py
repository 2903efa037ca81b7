"""Learning-curve SVG: per-algorithm mean over seeds with a 90% normal band."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .records import read_csv

Z90 = 1.645
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class StepGridError(ValueError):
    """CSV files (or seeds within one file) disagree on env_steps."""


@dataclass(frozen=True)
class CurveStats:
    algorithm: str
    steps: np.ndarray
    mean: np.ndarray
    half_width: np.ndarray
    n_seeds: int


def curve_stats(records, algorithm: str | None = None) -> CurveStats:
    """Mean and 1.645 * std / sqrt(n) half-width across seeds.

    All records must share the same step grid.  A single seed gives a
    zero-width band.
    """
    records = list(records)
    if not records:
        raise ValueError("no records")
    steps = np.array(records[0].steps)
    for r in records[1:]:
        if r.steps != records[0].steps:
            raise StepGridError(f"seed {r.seed} of {r.algorithm} has a different step grid")
    values = np.array([r.returns for r in records])
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n > 1:
        half = Z90 * values.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        half = np.zeros_like(mean)
    return CurveStats(algorithm or records[0].algorithm, steps, mean, half, n)


def load_curves(csv_paths) -> list[CurveStats]:
    """Read CSVs and check that every file uses the same env_steps grid."""
    curves, grids = [], []
    for path in csv_paths:
        records = read_csv(path)
        if not records:
            raise ValueError(f"{path}: no data rows")
        by_alg = {}
        for r in records:
            by_alg.setdefault(r.algorithm, []).append(r)
        for alg, recs in by_alg.items():
            try:
                curves.append(curve_stats(recs, alg))
            except StepGridError as exc:
                raise StepGridError(f"{path}: {exc}") from None
            grids.append((str(path), recs[0].steps))
    reference = grids[0][1]
    bad = [p for p, g in grids if g != reference]
    if bad:
        raise StepGridError("env_steps grids differ from " + grids[0][0] + ": "
                            + ", ".join(sorted(set(bad))))
    return curves


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    ticks = np.arange(start, hi + step * 1e-9, step)
    # snap values like 1e-17 to zero so labels never read "-0"
    ticks[np.abs(ticks) < step * 1e-9] = 0.0
    return ticks + 0.0


def _tick_label(v: float) -> str:
    if v != 0 and (abs(v) >= 1e5 or abs(v) < 1e-2):
        return f"{v:.0e}".replace("e+0", "e").replace("e+", "e")
    return f"{v:g}"


def render_svg(curves, title: str = "", width: int = 720, height: int = 440) -> str:
    """Self-contained SVG text for the given curves (deterministic)."""
    left, right, top, bottom = 70, 170, 30, 55
    pw, ph = width - left - right, height - top - bottom
    x_all = np.concatenate([c.steps for c in curves]).astype(float)
    lo = np.concatenate([c.mean - c.half_width for c in curves])
    hi = np.concatenate([c.mean + c.half_width for c in curves])
    x0, x1 = float(x_all.min()), float(x_all.max())
    y0, y1 = float(lo.min()), float(hi.max())
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="18" text-anchor="middle">{_esc(title)}</text>')
    for t in _ticks(y0, y1):
        y = sy(t)
        out.append(f'<line x1="{left}" y1="{_fmt(y)}" x2="{left + pw}" y2="{_fmt(y)}" '
                   'stroke="#e0e0e0"/>')
        out.append(f'<text x="{left - 6}" y="{_fmt(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    for t in _ticks(x0, x1):
        x = sx(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{top + ph}" x2="{_fmt(x)}" y2="{top + ph + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{top + ph + 18}" text-anchor="middle">'
                   f'{_tick_label(t)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">'
               'env steps</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">average return</text>')
    for i, c in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        xs = [sx(float(x)) for x in c.steps]
        upper = [sy(float(v)) for v in c.mean + c.half_width]
        lower = [sy(float(v)) for v in c.mean - c.half_width]
        band = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, upper))
        band += " " + " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs[::-1], lower[::-1]))
        out.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_fmt(x)},{_fmt(sy(float(v)))}" for x, v in zip(xs, c.mean))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{_esc(c.algorithm)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def plot_curves(csv_paths, output_path, title: str = "") -> Path:
    """Write an SVG of mean return against env steps with 90% bands."""
    curves = load_curves(csv_paths)
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(curves, title))
    return output_path
