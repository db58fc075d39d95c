"""Rigid-motion k-space corruption.

The acquisition model applies one rigid state per k-space line: a rotation
by theta makes line j read the object's continuous spectrum at the rotated
locations R(-theta)k, and translations (tx, ty) add the linear phase
exp(-2i*pi*(kx*tx + ky*ty)) computed at the nominal locations. The
reassembled Cartesian grid is inverse-transformed and the magnitude kept.

Spectrum evaluation at off-grid points is either exact direct summation
(`dft_eval_oracle`, O(N^2 * M)) or Kaiser-Bessel gridding on an oversampled
FFT grid with analytic deapodization (`nufft_eval`). The kernel half-width
is given in nominal k-space grid cells, so its support spans
oversampling * kernel_width cells of the internal oversampled grid.

k-space coordinates are in cycles/pixel within [-0.5, 0.5); the spectrum of
a sampled image is periodic in k with period 1, so rotated locations that
leave the fundamental domain are wrapped back into it.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .core import as_image, fft2, ifft2, save_image
from .errors import ConfigError, DimensionError, DomainError, ParameterError
from .manifest import PairRecord, write_manifest
from .trajectory import (THETA, TX, TY, as_trajectory, load_trajectory,
                         save_trajectory, severity, synth)

_LUT_PER_CELL = 8192


@dataclass(frozen=True)
class CorruptionOptions:
    """Spectrum-evaluation settings for `corrupt` and `nufft_eval`."""

    engine: str = "gridding"  # "gridding" | "direct"
    oversampling: float = 2.0
    kernel_width: int = 3  # half-width, in nominal grid cells

    def __post_init__(self):
        if self.engine not in ("gridding", "direct"):
            raise ParameterError(f"unknown engine {self.engine!r}")
        if self.oversampling < 1.25:
            raise ParameterError(f"oversampling must be >= 1.25, got {self.oversampling}")
        if self.kernel_width < 2:
            raise ParameterError(f"kernel width must be >= 2, got {self.kernel_width}")


def _split_points(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ParameterError(f"expected (M, 2) sample points, got shape {pts.shape}")
    kx = np.ascontiguousarray(pts[:, 0])
    ky = np.ascontiguousarray(pts[:, 1])
    if np.any(kx < -0.5) or np.any(kx >= 0.5) or np.any(ky < -0.5) or np.any(ky >= 0.5):
        raise DomainError("sample points must lie in [-0.5, 0.5)^2")
    return kx, ky


def _kb_beta(support, sigma):
    # Beatty's choice for a kernel spanning 2*support oversampled cells
    return math.pi * math.sqrt((2.0 * support) ** 2 / sigma**2 * (sigma - 0.5) ** 2 - 0.8)


def _kb_lut(support, beta):
    d = np.linspace(0.0, support, int(support * _LUT_PER_CELL) + 1)
    return np.i0(beta * np.sqrt(np.maximum(1.0 - (d / support) ** 2, 0.0)))


def _kb_transform(nu, support, beta):
    # analytic Fourier transform of the truncated Kaiser-Bessel bump
    g = beta**2 - (2.0 * np.pi * support * np.asarray(nu, dtype=np.float64)) ** 2
    out = np.empty_like(g)
    pos = g > 0
    neg = g < 0
    out[pos] = np.sinh(np.sqrt(g[pos])) / np.sqrt(g[pos])
    out[neg] = np.sin(np.sqrt(-g[neg])) / np.sqrt(-g[neg])
    out[~(pos | neg)] = 1.0
    return 2.0 * support * out


def dft_eval_oracle(img, points):
    """Exact spectrum samples by direct summation (slow oracle).

    Returns sum_x img(x) * exp(-2i*pi*k.(x - x_center)) / sqrt(H*W), which
    coincides with `fft2` on Cartesian grid locations.
    """
    img = as_image(img)
    kx, ky = _split_points(points)
    h, w = img.shape
    return kernels.dft_eval(img, kx, ky) / math.sqrt(h * w)


def nufft_eval(img, points, options=None):
    """Approximate spectrum samples via Kaiser-Bessel gridding.

    Same convention as `dft_eval_oracle`. `img` may be real or complex.
    """
    options = options or CorruptionOptions()
    img = np.asarray(img)
    if img.ndim != 2 or img.size == 0:
        raise DimensionError(f"expected a non-empty 2D array, got shape {img.shape}")
    kx, ky = _split_points(points)
    h, w = img.shape
    sigma = options.oversampling
    nh, nw = int(round(sigma * h)), int(round(sigma * w))
    support = sigma * options.kernel_width
    beta = _kb_beta(support, sigma)

    cy = _kb_transform((np.arange(h) - h // 2) / nh, support, beta)
    cx = _kb_transform((np.arange(w) - w // 2) / nw, support, beta)
    deap = img / np.outer(cy, cx)

    pad = np.zeros((nh, nw), dtype=np.complex128)
    r0, c0 = nh // 2 - h // 2, nw // 2 - w // 2
    pad[r0:r0 + h, c0:c0 + w] = deap
    grid = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(pad)))

    u = ky * nh + nh // 2
    v = kx * nw + nw // 2
    lut = _kb_lut(support, beta)
    vals = kernels.grid_interp(grid, u, v, support, lut)
    return vals / math.sqrt(h * w)


def _wrap_halfopen(k):
    return (k + 0.5) % 1.0 - 0.5


def corrupt(img, m, options=None, complex_output=False):
    """Apply a rigid motion trajectory to an image through k-space.

    `m` must provide exactly one state per image row. Rotated sample
    locations are wrapped into [-0.5, 0.5) (the sampled-image spectrum is
    1-periodic). Returns the magnitude image unless `complex_output`.
    """
    options = options or CorruptionOptions()
    img = as_image(img)
    m = as_trajectory(m)
    h, w = img.shape
    if m.shape[0] != h:
        raise DimensionError(
            f"trajectory has {m.shape[0]} states for {h} k-space lines"
        )
    ky_line = (np.arange(h) - h // 2) / h
    kx_col = (np.arange(w) - w // 2) / w

    th = np.radians(m[:, THETA])
    ct, st = np.cos(th)[:, None], np.sin(th)[:, None]
    kx = np.broadcast_to(kx_col, (h, w))
    ky = np.broadcast_to(ky_line[:, None], (h, w))
    rkx = _wrap_halfopen(ct * kx + st * ky)
    rky = _wrap_halfopen(-st * kx + ct * ky)
    pts = np.column_stack([rkx.ravel(), rky.ravel()])

    if options.engine == "direct":
        vals = dft_eval_oracle(img, pts)
    else:
        vals = nufft_eval(img, pts, options)

    phase = np.exp(-2j * np.pi * (kx * m[:, TX][:, None] + ky * m[:, TY][:, None]))
    ks = vals.reshape(h, w) * phase
    out = ifft2(ks)
    return out if complex_output else np.abs(out)


# Standard ten-ellipse head phantom, modified intensities; each row is
# (additive value, semi-axis a, semi-axis b, x center, y center, angle deg).
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)


def _raster_ellipses(size, ellipses):
    c = np.linspace(-1.0, 1.0, size)
    x = np.broadcast_to(c, (size, size))
    y = np.broadcast_to(-c[:, None], (size, size))
    img = np.zeros((size, size))
    for val, ea, eb, x0, y0, phi in ellipses:
        ph = math.radians(phi)
        xr = (x - x0) * math.cos(ph) + (y - y0) * math.sin(ph)
        yr = -(x - x0) * math.sin(ph) + (y - y0) * math.cos(ph)
        img[(xr / ea) ** 2 + (yr / eb) ** 2 <= 1.0] += val
    return img


def phantom(kind, size, seed=0):
    """Deterministic test object with values in [0, 1].

    `shepp_logan` rasterizes the classic ten-ellipse head phantom;
    `random_ellipses` accumulates 5-12 random ellipses and rescales onto
    [0, 1].
    """
    size = int(size)
    if size < 16:
        raise ParameterError(f"phantom size must be >= 16, got {size}")
    if kind == "shepp_logan":
        # summing the signed ellipse values can leave -1e-17 residue where
        # tissues cancel; clip to honor the [0, 1] contract
        return np.clip(_raster_ellipses(size, SHEPP_LOGAN_ELLIPSES), 0.0, 1.0)
    if kind == "random_ellipses":
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 13))
        ells = []
        for _ in range(n):
            x0, y0 = rng.uniform(-0.55, 0.55, 2)
            ea, eb = rng.uniform(0.08, 0.55, 2)
            phi = rng.uniform(0.0, 180.0)
            val = rng.uniform(-0.5, 1.0)
            ells.append((val, ea, eb, x0, y0, phi))
        img = _raster_ellipses(size, ells)
        lo, hi = img.min(), img.max()
        if hi == lo:
            return np.zeros_like(img)
        return (img - lo) / (hi - lo)
    raise ParameterError(f"unknown phantom kind {kind!r}")


def _split_counts(total, split, what):
    split = tuple(split)
    if len(split) != 3:
        raise ConfigError(f"{what} split needs 3 entries, got {len(split)}")
    if all(s >= 1 and float(s).is_integer() for s in split):
        counts = [int(s) for s in split]
        if sum(counts) != total:
            raise ConfigError(f"{what} split counts {counts} do not sum to {total}")
    else:
        if abs(sum(split) - 1.0) > 1e-9:
            raise ConfigError(f"{what} split fractions {split} must sum to 1")
        counts = [int(round(s * total)) for s in split]
        counts[0] += total - sum(counts)
    if min(counts) < 1:
        raise ConfigError(f"insufficient {what} for disjoint splits: {counts}")
    return counts


_SPLITS = ("train", "val", "test")


def _interleave_labels(counts):
    # proportional (largest-deficit) interleave so each split spans the
    # full severity range
    total = sum(counts)
    assigned = [0, 0, 0]
    labels = []
    for i in range(total):
        deficits = [counts[s] * (i + 1) / total - assigned[s] for s in range(3)]
        s = int(np.argmax(deficits))
        labels.append(s)
        assigned[s] += 1
    return labels


def build_dataset(out_dir, n_images, n_trajectories, size=48,
                  severity_range=(0.0, 15.0), seed=0, split=(0.6, 0.2, 0.2),
                  options=None, phantom_kind="random_ellipses"):
    """Generate clean/corrupted pairs with disjoint train/val/test splits.

    Phantom seeds and trajectories are partitioned by split so nothing is
    shared across splits. Trajectory severities are spaced evenly over
    `severity_range` and interleaved across splits. Each image is paired
    with one trajectory from its split's pool (round-robin). `split` takes
    either three fractions or three absolute counts. Every third trajectory
    is a mid-scan jump, the rest are smoothed random walks.

    Writes clean/, corrupted/, traj/ and manifest.csv under `out_dir`;
    returns the manifest records. Deterministic for a fixed seed.
    """
    if n_images < 1 or n_trajectories < 1:
        raise ConfigError("n_images and n_trajectories must be >= 1")
    lo, hi = severity_range
    if lo < 0 or hi < lo:
        raise ConfigError(f"bad severity range {severity_range}")
    options = options or CorruptionOptions()
    img_counts = _split_counts(n_images, split, "images")
    ratios = tuple(c / n_images for c in img_counts)
    traj_counts = _split_counts(n_trajectories, ratios, "trajectories")

    os.makedirs(out_dir, exist_ok=True)
    for sub in ("clean", "corrupted", "traj"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)

    targets = np.linspace(lo, hi, n_trajectories)
    traj_labels = _interleave_labels(traj_counts)
    pools = {s: [] for s in _SPLITS}
    traj_paths = []
    for i in range(n_trajectories):
        kind = "step" if i % 3 == 2 else "smooth_walk"
        rng_i = np.random.default_rng(np.random.SeedSequence([seed, 2, i]))
        if kind == "step":
            amp = rng_i.uniform(-1.0, 1.0, 3)
            jump = int(rng_i.integers(size // 4, 3 * size // 4))
            m = synth("step", length=size, amplitude=amp, jump_index=jump,
                      target_severity=float(targets[i]))
        else:
            m = synth("smooth_walk", length=size, seed=rng_i,
                      target_severity=float(targets[i]))
        rel = os.path.join("traj", f"t{i:03d}.txt")
        save_trajectory(os.path.join(out_dir, rel), m, header=f"severity {targets[i]:.6g}")
        traj_paths.append(rel)
        pools[_SPLITS[traj_labels[i]]].append(i)

    trajs = [load_trajectory(os.path.join(out_dir, rel)) for rel in traj_paths]
    records = []
    j = 0
    for s_idx, count in enumerate(img_counts):
        tag = _SPLITS[s_idx]
        pool = pools[tag]
        for local in range(count):
            img = phantom(phantom_kind, size, seed=np.random.SeedSequence([seed, 1, j]))
            ti = pool[local % len(pool)]
            m = trajs[ti]
            bad = corrupt(img, m, options)
            clean_rel = os.path.join("clean", f"img{j:04d}.mcf")
            bad_rel = os.path.join("corrupted", f"img{j:04d}.mcf")
            save_image(os.path.join(out_dir, clean_rel), img)
            save_image(os.path.join(out_dir, bad_rel), bad)
            records.append(PairRecord(
                pair=f"pair{j:04d}",
                clean=clean_rel,
                corrupted=bad_rel,
                trajectory=traj_paths[ti],
                severity=severity(m),
                split=tag,
            ))
            j += 1
    write_manifest(os.path.join(out_dir, "manifest.csv"), records)
    return records
