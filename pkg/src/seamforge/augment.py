"""Stochastic training-time augmentations on [-1, 1] images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .imaging import NormalizedImage


@dataclass(frozen=True)
class AugmentConfig:
    p_flip_h: float = 0.5
    p_flip_v: float = 0.5
    p_noise: float = 0.5
    p_column: float = 0.5
    noise_sigma: float = 0.2
    column_width: int = 10

    def __post_init__(self):
        for name in ("p_flip_h", "p_flip_v", "p_noise", "p_column"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {p}")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be non-negative")
        if int(self.column_width) < 1:
            raise ParameterError("column_width must be >= 1")


@dataclass(frozen=True)
class AppliedAugment:
    """Which transforms fired; column_start is None when no column was drawn."""

    flip_h: bool
    flip_v: bool
    noise: bool
    column_start: int | None


def augment_array(
    arr: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator
) -> tuple[np.ndarray, AppliedAugment]:
    """Apply the four transforms in fixed order, each with its probability.

    Order per call: horizontal flip, vertical flip, additive Gaussian noise
    (clamped to [-1, 1]), black column of `column_width` pixels set to -1 at
    a uniform random horizontal start.  The draw order is fixed so a seeded
    generator reproduces identical decisions.
    """
    arr = np.asarray(arr)
    if arr.ndim != 3:
        raise ParameterError(f"expected (h, w, c) samples, got shape {arr.shape}")
    h, w, _ = arr.shape
    cw = int(cfg.column_width)
    if w <= cw:
        raise ParameterError(f"image width {w} must exceed column width {cw}")
    out = arr.copy()
    flip_h = bool(rng.random() < cfg.p_flip_h)
    if flip_h:
        out = out[:, ::-1]
    flip_v = bool(rng.random() < cfg.p_flip_v)
    if flip_v:
        out = out[::-1]
    noise = bool(rng.random() < cfg.p_noise)
    if noise:
        out = out + rng.normal(0.0, cfg.noise_sigma, size=out.shape).astype(out.dtype)
        np.clip(out, -1.0, 1.0, out=out)
    column = bool(rng.random() < cfg.p_column)
    start = None
    if column:
        start = int(rng.integers(0, w - cw + 1))
        out = np.ascontiguousarray(out)
        out[:, start : start + cw, :] = -1.0
    return np.ascontiguousarray(out), AppliedAugment(flip_h, flip_v, noise, start)


def augment(
    img: NormalizedImage, cfg: AugmentConfig, rng: np.random.Generator
) -> NormalizedImage:
    out, _ = augment_array(img.samples, cfg, rng)
    return NormalizedImage(out)
