import numpy as np
import pytest

from seamforge.imaging import ImageBuffer


def textured_pixels(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Procedural RGB texture: shading + an oriented grating + soft blobs.

    The grating makes seam removal leave visible phase discontinuities, so
    carved variants stay distinguishable from untouched ones.
    """
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.empty((h, w, 3))
    img[:] = rng.uniform(70, 186, size=3)
    for _ in range(2):
        fx, fy = rng.uniform(0.5, 2.0, size=2)
        ph = rng.uniform(0, 2 * np.pi, size=2)
        shade = np.sin(2 * np.pi * fx * xx / w + ph[0]) * np.sin(
            2 * np.pi * fy * yy / h + ph[1]
        )
        img += rng.uniform(10, 28) * shade[:, :, None] * rng.uniform(0.5, 1.0, size=3)
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(4.0, 9.0)
    carrier = np.sin(
        2 * np.pi * freq * (np.cos(theta) * xx / w + np.sin(theta) * yy / h)
        + rng.uniform(0, 2 * np.pi)
    )
    img += rng.uniform(18, 36) * carrier[:, :, None] * rng.uniform(0.6, 1.0, size=3)
    for _ in range(int(rng.integers(2, 5))):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        r = rng.uniform(w / 10, w / 4)
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * r * r))
        img += rng.uniform(-35, 35) * blob[:, :, None] * rng.uniform(0.5, 1.0, size=3)
    img += rng.normal(0, 2.0, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def textured_image(seed: int, h: int, w: int) -> ImageBuffer:
    return ImageBuffer(textured_pixels(np.random.default_rng(seed), h, w))


@pytest.fixture
def small_photo() -> ImageBuffer:
    """Deterministic 32x40 textured color image."""
    return textured_image(7, 32, 40)
