"""Per-line rigid motion trajectories.

A motion trajectory is a (T, 3) float64 array with one row per k-space
line, columns (tx, ty, theta): in-plane translations in pixels (1 px = 1 mm
at unit resolution) and in-plane rotation in degrees about the image
center. Six-degree-of-freedom recordings are (T, 6) arrays with columns
(tx, ty, tz, rx, ry, rz).

Text format: one "tx ty theta" line per state; '#' starts a comment line.
"""

import numpy as np

from .errors import DegenerateTrajectoryError, FormatError, ParameterError

TX, TY, THETA = 0, 1, 2


def as_trajectory(m):
    """Validate and return `m` as a (T, 3) float64 trajectory."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != 3 or m.shape[0] < 1:
        raise ParameterError(f"expected a (T, 3) trajectory, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError("trajectory contains non-finite values")
    return m


def constant_trajectory(length, tx=0.0, ty=0.0, theta=0.0):
    """A trajectory holding one rigid state for all `length` lines."""
    return np.tile(np.array([tx, ty, theta], dtype=np.float64), (int(length), 1))


def to_inplane(t6, scale):
    """Project a 6-DoF recording onto (tx, ty, rz) and scale each component."""
    t6 = np.asarray(t6, dtype=np.float64)
    if t6.ndim != 2 or t6.shape[1] != 6 or t6.shape[0] < 1:
        raise ParameterError(f"expected a (T, 6) recording, got shape {t6.shape}")
    if scale <= 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    return t6[:, [0, 1, 5]] * scale


def center_normalize(m):
    """Subtract the mid-trajectory state so motion is zero at the k-space center."""
    m = as_trajectory(m)
    return m - m[m.shape[0] // 2]


def severity(m, aggregate="sum"):
    """Motion severity in mm/deg: per-axis standard deviations over time.

    `aggregate` selects how the three per-axis population standard
    deviations combine: "sum" (default, the quantity the severity bins
    threshold) or "l2" for the Euclidean norm of the std vector.
    """
    m = as_trajectory(m)
    if m.shape[0] < 2:
        raise DegenerateTrajectoryError(
            f"severity needs at least 2 states, got {m.shape[0]}"
        )
    stds = m.std(axis=0)  # population (divide-by-T)
    if aggregate == "sum":
        return float(stds.sum())
    if aggregate == "l2":
        return float(np.sqrt((stds**2).sum()))
    raise ParameterError(f"unknown aggregate {aggregate!r}")


def synth(kind, length=256, seed=0, value=(0.0, 0.0, 0.0), amplitude=(1.0, 0.0, 0.0),
          jump_index=None, step_std=(0.3, 0.3, 0.15), smooth_window=None,
          target_severity=None):
    """Synthesize a center-normalized trajectory.

    Kinds:
      constant     every state equals `value` (all zeros once normalized)
      step         zero until `jump_index` (default T//2), then `amplitude`
      smooth_walk  smoothed random walk with per-axis step scale `step_std`

    Deterministic for a fixed seed. If `target_severity` is given the
    trajectory is rescaled so `severity(result) == target_severity`.
    """
    length = int(length)
    if length < 2:
        raise DegenerateTrajectoryError(f"trajectory length must be >= 2, got {length}")
    if kind == "constant":
        m = constant_trajectory(length, *value)
    elif kind == "step":
        k = length // 2 if jump_index is None else int(jump_index)
        if not 0 < k < length:
            raise ParameterError(f"jump index {k} outside (0, {length})")
        m = np.zeros((length, 3))
        m[k:] = np.asarray(amplitude, dtype=np.float64)
    elif kind == "smooth_walk":
        rng = np.random.default_rng(seed)
        steps = rng.standard_normal((length, 3)) * np.asarray(step_std, dtype=np.float64)
        m = np.cumsum(steps, axis=0)
        win = max(3, length // 16) if smooth_window is None else int(smooth_window)
        kern = np.ones(win) / win
        m = np.column_stack([np.convolve(m[:, c], kern, mode="same") for c in range(3)])
    else:
        raise ParameterError(f"unknown trajectory kind {kind!r}")
    m = center_normalize(m)
    if target_severity is not None:
        if target_severity < 0:
            raise ParameterError(f"target severity must be >= 0, got {target_severity}")
        if target_severity == 0:
            return np.zeros_like(m)
        cur = severity(m)
        if cur == 0:
            raise ParameterError(f"{kind} trajectory has zero severity; cannot rescale")
        m = m * (target_severity / cur)
    return m


def save_trajectory(path, m, header=None):
    """Write a trajectory in the text format; `header` becomes a comment."""
    m = as_trajectory(m)
    with open(path, "w") as f:
        if header:
            f.write(f"# {header}\n")
        for tx, ty, theta in m:
            f.write(f"{float(tx)!r} {float(ty)!r} {float(theta)!r}\n")


def load_trajectory(path):
    """Read a trajectory written by `save_trajectory`."""
    states = []
    with open(path) as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path}:{ln}: expected 'tx ty theta', got {line!r}")
            try:
                states.append([float(p) for p in parts])
            except ValueError:
                raise FormatError(f"{path}:{ln}: non-numeric state {line!r}")
    if not states:
        raise FormatError(f"{path}: no trajectory states found")
    return np.asarray(states, dtype=np.float64)
