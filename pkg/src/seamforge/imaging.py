"""Image buffers, PNG/JPEG codecs, cropping, grayscale, and [-1, 1] scaling."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ChannelError, DecodeError, DimensionError, ParameterError

# Rec. 601 luma weights.
LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


def half_up(values) -> np.ndarray:
    """Round non-negative values to the nearest integer, halves upward."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


@dataclass(frozen=True)
class ImageBuffer:
    """Raster image held as (height, width, channels) uint8 samples."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3:
            raise DimensionError(f"expected 2-D or 3-D pixel array, got ndim={px.ndim}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionError(f"empty image: shape {px.shape}")
        if px.shape[2] not in (1, 3):
            raise ChannelError(f"channels must be 1 or 3, got {px.shape[2]}")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ParameterError(f"pixel samples must be integers, got {px.dtype}")
            if px.min() < 0 or px.max() > 255:
                raise ParameterError("pixel samples must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class NormalizedImage:
    """Image with real samples scaled to [-1, 1]."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 3 or s.shape[2] not in (1, 3):
            raise DimensionError(f"expected (h, w, 1|3) samples, got shape {s.shape}")
        if s.size and (s.min() < -1.0 or s.max() > 1.0):
            raise ParameterError("normalized samples must lie in [-1, 1]")
        s = np.ascontiguousarray(s)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return self.samples.shape[2]


def _sniff_container(data: bytes) -> str | None:
    if data[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        return "PNG"
    if data[: len(_JPEG_MAGIC)] == _JPEG_MAGIC:
        return "JPEG"
    return None


def decode_image(data: bytes) -> ImageBuffer:
    """Decode a PNG or JPEG stream.

    Color input decodes to 3 channels, grayscale to 1.  Anything that is not
    a well-formed PNG/JPEG raises DecodeError naming the container.
    """
    container = _sniff_container(bytes(data))
    if container is None:
        raise DecodeError("stream is neither PNG nor JPEG")
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            if im.mode in ("L", "1", "I", "I;16", "LA"):
                im = im.convert("L")
                arr = np.asarray(im, dtype=np.uint8)[:, :, None]
            else:
                im = im.convert("RGB")
                arr = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"malformed {container} stream: {exc}") from None
    return ImageBuffer(arr)


def _to_pil(img: ImageBuffer) -> Image.Image:
    if img.channels == 1:
        return Image.fromarray(img.pixels[:, :, 0], mode="L")
    return Image.fromarray(img.pixels, mode="RGB")


def encode_png(img: ImageBuffer) -> bytes:
    """Encode losslessly; decode_image(encode_png(img)) == img."""
    buf = io.BytesIO()
    _to_pil(img).save(buf, format="PNG")
    return buf.getvalue()


def encode_jpeg(img: ImageBuffer, quality: int) -> bytes:
    """Encode as baseline JPEG at the given quality (1..100)."""
    quality = int(quality)
    if not 1 <= quality <= 100:
        raise ParameterError(f"JPEG quality must be in [1, 100], got {quality}")
    buf = io.BytesIO()
    _to_pil(img).save(buf, format="JPEG", quality=quality)
    return buf.getvalue()


def load_image(path) -> ImageBuffer:
    return decode_image(Path(path).read_bytes())


def save_image(path, img: ImageBuffer, jpeg_quality: int = 75) -> None:
    """Write PNG or JPEG according to the file extension."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".png":
        path.write_bytes(encode_png(img))
    elif ext in (".jpg", ".jpeg"):
        path.write_bytes(encode_jpeg(img, jpeg_quality))
    else:
        raise ParameterError(f"unsupported image extension {ext!r} (use .png/.jpg)")


def center_crop(img: ImageBuffer, w: int, h: int) -> ImageBuffer:
    """Crop the centered (w, h) window; offsets are floor((W-w)/2), floor((H-h)/2)."""
    w, h = int(w), int(h)
    if w < 1 or h < 1:
        raise DimensionError(f"crop dimensions must be positive, got {w}x{h}")
    if w > img.width or h > img.height:
        raise DimensionError(
            f"crop {w}x{h} exceeds source {img.width}x{img.height}"
        )
    x0 = (img.width - w) // 2
    y0 = (img.height - h) // 2
    return ImageBuffer(img.pixels[y0 : y0 + h, x0 : x0 + w])


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Rec. 601 luma with half-up rounding; identity for 1-channel input."""
    if img.channels == 1:
        return img
    px = img.pixels.astype(np.float64)
    luma = LUMA_R * px[:, :, 0] + LUMA_G * px[:, :, 1] + LUMA_B * px[:, :, 2]
    return ImageBuffer(half_up(luma).astype(np.uint8)[:, :, None])


def normalize(img: ImageBuffer) -> NormalizedImage:
    """Map integer samples to [-1, 1]: s' = s / 127.5 - 1."""
    return NormalizedImage(img.pixels.astype(np.float64) / 127.5 - 1.0)


def denormalize(img: NormalizedImage) -> ImageBuffer:
    """Inverse of normalize: half-up rounding, clamped to [0, 255]."""
    v = half_up((img.samples + 1.0) * 127.5)
    return ImageBuffer(np.clip(v, 0, 255).astype(np.uint8))
