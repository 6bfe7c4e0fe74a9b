"""Binary cross-entropy on probabilities."""

from __future__ import annotations

import numpy as np

BCE_EPS = 1e-7


def bce_loss(p, y):
    """Per-element loss and d(loss)/dp, with p clamped to [eps, 1-eps].

    loss = -[y ln p + (1-y) ln(1-p)], gradient (p-y)/(p(1-p)); the clamp keeps
    both finite at the endpoints.
    """
    p = np.clip(np.asarray(p, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    y = np.asarray(y, dtype=np.float64)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = (p - y) / (p * (1.0 - p))
    return loss, grad
