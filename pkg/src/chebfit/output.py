"""CSV, SVG and manifest emission for experiment runs.

Reals are written with 17 significant digits so a CSV round-trips exactly.
Nothing written here depends on wall-clock time except the timings file,
which is kept apart from the record table so records stay byte-identical
across reruns.
"""

from __future__ import annotations

import csv
import hashlib
import math
import platform
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from scipy import stats

RECORD_COLUMNS = ("n", "p", "s", "rep", "estimator_tag", "l2_error", "l1_error", "a_hat",
                  "lambda_used", "min_slack")


@dataclass(frozen=True)
class ExperimentRecord:
    n: int
    p: int
    s: int
    rep: int
    estimator_tag: str
    l2_error: float
    l1_error: float
    a_hat: float
    lambda_used: float
    """NaN for unpenalised fits."""
    min_slack: float
    """Smallest critical-inequality slack of the fit (NaN when not computed)."""
    wall_ms: float = 0.0

    def __post_init__(self):
        if not (self.l2_error >= 0 and self.l1_error >= 0):
            raise ValueError("errors must be nonnegative")

    def sort_key(self):
        return (self.n, self.p, self.s, self.rep, self.estimator_tag)


def fmt_real(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_real(v)
    return str(v)


def _open(path, mode="w"):
    path = Path(path)
    try:
        return open(path, mode, newline="")
    except OSError as exc:
        raise OSError(f"cannot open {path}: {exc.strerror}") from exc


def emit_csv(records, path) -> Path:
    """Write records sorted by (n, p, s, rep, estimator) with a fixed column order."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in sorted(records, key=ExperimentRecord.sort_key):
            w.writerow([_fmt(getattr(r, c)) for c in RECORD_COLUMNS])
    return path


def read_records(path) -> list[ExperimentRecord]:
    with _open(path, "r") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append(ExperimentRecord(int(row["n"]), int(row["p"]), int(row["s"]), int(row["rep"]),
                                    row["estimator_tag"], float(row["l2_error"]), float(row["l1_error"]),
                                    float(row["a_hat"]), float(row["lambda_used"]), float(row["min_slack"])))
    return out


def emit_table(rows: list[dict], path, columns=None) -> Path:
    """Write a list of flat dicts; columns default to the first row's key order."""
    if not rows:
        raise ValueError("no rows to write")
    columns = list(columns or rows[0].keys())
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return Path(path)


def emit_timings(records, path) -> Path:
    records = sorted(records, key=ExperimentRecord.sort_key)
    if not records:
        raise ValueError("no records to write")
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p", "s", "rep", "estimator_tag", "wall_ms"])
        for r in records:
            w.writerow([r.n, r.p, r.s, r.rep, r.estimator_tag, f"{r.wall_ms:.3f}"])
    return Path(path)


# -- regression and plotting ------------------------------------------------------------

@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r2: float


def line_fit(x, y) -> LineFit:
    """Least-squares line y = slope * x + intercept with its coefficient of determination."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or x.shape != y.shape:
        raise ValueError("need at least two (x, y) pairs of equal length")
    res = stats.linregress(x, y)
    return LineFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2))


X_AXES = {"p/n": "p / n", "p*sqrt(p)/n": "p sqrt(p) / n", "n": "n"}


def axis_values(x_axis: str, n, p) -> np.ndarray:
    n = np.asarray(n, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if x_axis == "p/n":
        return p / n
    if x_axis == "p*sqrt(p)/n":
        return p * np.sqrt(p) / n
    if x_axis == "n":
        return n
    raise ValueError(f"unknown x axis {x_axis!r}; choose from {sorted(X_AXES)}")


def _ticks(lo: float, hi: float, k: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, k)


def emit_svg_scatter(summary: list[dict], x_axis: str, path, y_key: str = "mean_l2_error",
                     title: str = "") -> Path:
    """Scatter of summary rows with the least-squares line and its slope and R^2.

    Each row needs ``n``, ``p`` and ``y_key``. One ``<circle>`` per row.
    """
    if not summary:
        raise ValueError("no summary rows to plot")
    x = axis_values(x_axis, [r["n"] for r in summary], [r["p"] for r in summary])
    y = np.array([float(r[y_key]) for r in summary])
    W, H, m = 480, 360, 56
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = min(0.0, float(y.min())), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (W - 2 * m)

    def sy(v):
        return H - m - (v - y0) / (y1 - y0) * (H - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{m}" y1="{H - m}" x2="{W - m}" y2="{H - m}" stroke="black"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{H - m}" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.2f}" y="{H - m + 16}" font-size="10" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{m - 6}" y="{sy(t) + 3:.2f}" font-size="10" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 12}" font-size="12" text-anchor="middle">'
               f'{escape(X_AXES.get(x_axis, x_axis))}</text>')
    out.append(f'<text x="14" y="{H / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {H / 2})">{escape(y_key)}</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="20" font-size="13" text-anchor="middle">{escape(title)}</text>')
    for xv, yv in zip(x, y):
        out.append(f'<circle cx="{sx(xv):.2f}" cy="{sy(yv):.2f}" r="3" fill="steelblue"/>')
    if x.size >= 2 and np.ptp(x) > 0:
        fit = line_fit(x, y)
        out.append(f'<line x1="{sx(x0):.2f}" y1="{sy(fit.slope * x0 + fit.intercept):.2f}" '
                   f'x2="{sx(x1):.2f}" y2="{sy(fit.slope * x1 + fit.intercept):.2f}" stroke="crimson"/>')
        out.append(f'<text x="{m + 8}" y="{m + 14}" font-size="11">slope = {fit.slope:.4g}, '
                   f'R^2 = {fit.r2:.4f}</text>')
    out.append("</svg>")
    with _open(path) as fh:
        fh.write("\n".join(out) + "\n")
    return Path(path)


# -- manifest ---------------------------------------------------------------------

def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(path, config_text: str, seed: int, extra: dict | None = None) -> Path:
    """Plain-text run manifest: config hash, seed and library versions."""
    import scipy

    from . import __version__
    from ._backend import BACKEND

    lines = [f"config_sha256 = {config_hash(config_text)}", f"seed = {seed}",
             f"chebfit = {__version__}", f"kernels = {BACKEND}", f"python = {platform.python_version()}",
             f"numpy = {np.__version__}", f"scipy = {scipy.__version__}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    with _open(path) as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)
