"""Per-pixel gradient energy and seam energy sums."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ChannelError, SeamError
from .imaging import ImageBuffer

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .carver import Seam


@dataclass(frozen=True)
class EnergyMap:
    """Non-negative scalar energy per pixel, same dimensions as the source."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise SeamError(f"energy map must be a non-empty 2-D grid, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def gradient_field(values: np.ndarray) -> np.ndarray:
    """|dI/dx| + |dI/dy| with forward differences and replicate boundary.

    At the last column/row the forward neighbor is the pixel itself, so the
    corresponding term is 0.
    """
    v = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(v)
    out[:, :-1] += np.abs(v[:, 1:] - v[:, :-1])
    out[:-1, :] += np.abs(v[1:, :] - v[:-1, :])
    return out


def gradient_energy(img: ImageBuffer) -> EnergyMap:
    """Energy map of a single-channel image."""
    if img.channels != 1:
        raise ChannelError(
            f"gradient energy needs a 1-channel image, got {img.channels} channels"
        )
    return EnergyMap(gradient_field(img.pixels[:, :, 0]))


def seam_energy(emap: EnergyMap, seam: "Seam") -> float:
    """Sum of the energy at every seam pixel."""
    offsets = seam.offsets
    if seam.axis == "vertical":
        if len(offsets) != emap.height:
            raise SeamError(
                f"vertical seam length {len(offsets)} != map height {emap.height}"
            )
        if offsets.min() < 0 or offsets.max() >= emap.width:
            raise SeamError("seam column out of bounds")
        return float(emap.values[np.arange(emap.height), offsets].sum())
    if len(offsets) != emap.width:
        raise SeamError(
            f"horizontal seam length {len(offsets)} != map width {emap.width}"
        )
    if offsets.min() < 0 or offsets.max() >= emap.height:
        raise SeamError("seam row out of bounds")
    return float(emap.values[offsets, np.arange(emap.width)].sum())


def to_preview_image(emap: EnergyMap) -> ImageBuffer:
    """Min-max scale the map to [0, 255] for visual inspection."""
    v = emap.values
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        scaled = (v - lo) * (255.0 / (hi - lo))
    else:
        scaled = np.zeros_like(v)
    from .imaging import half_up

    return ImageBuffer(half_up(scaled).astype(np.uint8)[:, :, None])
