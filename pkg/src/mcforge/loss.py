"""Hybrid training objective: weighted L1 plus a total-variation penalty.

The TV term sums, over every pixel whose forward differences exist
(i < H-1 and j < W-1), the quantity (dy^2 + dx^2)**1.25 built from the
vertical and horizontal forward differences. The 1.25 exponent makes the
term differentiable everywhere, including where both differences vanish.

Losses are per-image sums, not means; gradients are analytic, with the
subgradient 0 at L1 ties.
"""

from dataclasses import dataclass

import numpy as np

from .core import as_image
from .errors import DimensionError


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 1.0  # L1 weight
    beta: float = 0.0  # TV weight

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(f"loss weights must be >= 0, got ({self.alpha}, {self.beta})")


STAGE1 = LossConfig(alpha=1.0, beta=0.0)
STAGE2 = LossConfig(alpha=1.0, beta=1.0)


def l1_loss(pred, ref):
    """Sum of absolute errors and its sign gradient (0 at ties)."""
    pred = as_image(pred)
    ref = as_image(ref)
    if pred.shape != ref.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {ref.shape}")
    d = pred - ref
    return float(np.abs(d).sum()), np.sign(d)


def tv_loss(pred):
    """Total-variation penalty and its analytic gradient."""
    pred = as_image(pred)
    h, w = pred.shape
    if h < 2 or w < 2:
        raise DimensionError(f"TV needs at least 2x2, got {pred.shape}")
    dy = pred[1:, :-1] - pred[:-1, :-1]  # (H-1, W-1)
    dx = pred[:-1, 1:] - pred[:-1, :-1]
    u = dy * dy + dx * dx
    value = float((u**1.25).sum())
    # chain rule: d(u^1.25)/du = 1.25 * u^0.25 and du/d(diff) = 2 * diff;
    # u == 0 implies dy = dx = 0, so the gradient vanishes there
    f = 2.5 * u**0.25
    grad = np.zeros_like(pred)
    grad[:-1, :-1] -= f * (dy + dx)
    grad[1:, :-1] += f * dy
    grad[:-1, 1:] += f * dx
    return value, grad


def hybrid_loss(pred, ref, config):
    """alpha * L1 + beta * TV with the matching gradient combination."""
    l1v, l1g = l1_loss(pred, ref)
    if config.beta == 0.0:
        return config.alpha * l1v, config.alpha * l1g
    tvv, tvg = tv_loss(pred)
    return (config.alpha * l1v + config.beta * tvv,
            config.alpha * l1g + config.beta * tvg)
