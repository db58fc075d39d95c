"""Image quality metrics and severity-regression analysis.

SSIM follows (2*mu_x*mu_y + C1)(2*sigma_xy + C2) /
((mu_x^2 + mu_y^2 + C1)(sigma_x^2 + sigma_y^2 + C2)) with population
moments. `global` mode evaluates it once over the whole image; `windowed`
mode (the default for all reported numbers) averages the local map over
every valid 11x11 Gaussian window, the reference implementation's setup.

PSNR is 10*log10(MAX^2 / MSE) in dB with math.inf for identical images.
Metrics always run in double precision.
"""

import csv
import math
import os
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import as_image, load_image
from .errors import DimensionError, McforgeError, ParameterError, SingularFitError
from .manifest import read_manifest


@dataclass(frozen=True)
class SsimConfig:
    mode: str = "windowed"  # "windowed" | "global"
    window: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    @property
    def c1(self):
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self):
        return (self.k2 * self.dynamic_range) ** 2


@dataclass
class MetricRow:
    pair: str
    severity: float
    ssim_in: float
    ssim_out: float
    psnr_in: float
    psnr_out: float


def _gaussian_window(size, sigma):
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    return g / g.sum()


def _windowed_moments(a, g):
    t = sliding_window_view(a, g.shape[0], axis=0) @ g
    return sliding_window_view(t, g.shape[0], axis=1) @ g


def ssim(x, y, config=None):
    """Structural similarity between two same-shape images."""
    config = config or SsimConfig()
    x = as_image(x)
    y = as_image(y)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    c1, c2 = config.c1, config.c2
    if config.mode == "global":
        mx, my = x.mean(), y.mean()
        sx = (x * x).mean() - mx * mx
        sy = (y * y).mean() - my * my
        sxy = (x * y).mean() - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
        den = (mx * mx + my * my + c1) * (sx + sy + c2)
        return float(num / den)
    if config.mode != "windowed":
        raise ParameterError(f"unknown ssim mode {config.mode!r}")
    if x.shape[0] < config.window or x.shape[1] < config.window:
        raise DimensionError(
            f"image {x.shape} smaller than the {config.window}x{config.window} window"
        )
    g = _gaussian_window(config.window, config.window_sigma)
    mx = _windowed_moments(x, g)
    my = _windowed_moments(y, g)
    sx = _windowed_moments(x * x, g) - mx * mx
    sy = _windowed_moments(y * y, g) - my * my
    sxy = _windowed_moments(x * y, g) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sx + sy + c2)
    return float(np.mean(num / den))


def psnr(x, ref, max_value=1.0):
    """Peak signal-to-noise ratio in dB; math.inf when the images match."""
    x = as_image(x)
    ref = as_image(ref)
    if x.shape != ref.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {ref.shape}")
    if max_value <= 0:
        raise ParameterError(f"max_value must be positive, got {max_value}")
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value**2 / mse)


def fit_line(xs, ys):
    """Ordinary least squares fit; returns (slope, intercept)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ParameterError(f"need matching 1D arrays of >= 2 points, got {xs.shape} / {ys.shape}")
    xm = xs.mean()
    dx = xs - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise SingularFitError("all x values are equal; slope is undefined")
    ym = ys.mean()
    slope = float(dx @ (ys - ym)) / sxx
    return slope, ym - slope * xm


def evaluate_manifest(manifest_path, model=None, split=None, config=None):
    """Score every manifest pair; returns (rows, summary).

    Without a model only the corrupted-vs-clean columns are filled (the
    corrected columns hold NaN). With `model` (a NetParams), corrected
    columns score forward(model, corrupted) against clean. `split` filters
    rows by their split tag. The summary maps column name to
    (mean, population std).
    """
    base = os.path.dirname(os.path.abspath(manifest_path))
    rows = []
    for rec in read_manifest(manifest_path):
        if split is not None and rec.split != split:
            continue
        try:
            clean = load_image(os.path.join(base, rec.clean))
            bad = load_image(os.path.join(base, rec.corrupted))
        except (OSError, McforgeError) as exc:
            raise McforgeError(f"pair {rec.pair}: {exc}") from exc
        row = MetricRow(
            pair=rec.pair,
            severity=rec.severity,
            ssim_in=ssim(bad, clean, config),
            ssim_out=math.nan,
            psnr_in=psnr(bad, clean),
            psnr_out=math.nan,
        )
        if model is not None:
            from .network import forward

            fixed = forward(model, bad)
            row.ssim_out = ssim(fixed, clean, config)
            row.psnr_out = psnr(fixed, clean)
        rows.append(row)
    return rows, summarize(rows)


def summarize(rows):
    """Mean and population std per metric column over `rows`."""
    out = {}
    for col in ("ssim_in", "ssim_out", "psnr_in", "psnr_out"):
        vals = np.array([getattr(r, col) for r in rows], dtype=np.float64)
        if vals.size == 0 or np.isnan(vals).all():
            out[col] = (math.nan, math.nan)
        else:
            out[col] = (float(vals.mean()), float(vals.std()))
    return out


REPORT_FIELDS = ("pair", "severity", "ssim_in", "ssim_out", "psnr_in", "psnr_out")


def write_report(path, rows):
    """Write metric rows as CSV; infinities serialize as the literal `inf`."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(REPORT_FIELDS)
        for r in rows:
            writer.writerow([r.pair, repr(float(r.severity))]
                            + [repr(float(getattr(r, c))) for c in REPORT_FIELDS[2:]])


def read_report(path):
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != list(REPORT_FIELDS):
            raise McforgeError(f"{path}: bad report header {header!r}")
        for row in reader:
            if not row:
                continue
            rows.append(MetricRow(row[0], *(float(v) for v in row[1:])))
    return rows
