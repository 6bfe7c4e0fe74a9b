import numpy as np
import pytest

from seamforge.errors import ChannelError, DecodeError, DimensionError, ParameterError
from seamforge.imaging import (
    ImageBuffer,
    NormalizedImage,
    center_crop,
    decode_image,
    denormalize,
    encode_jpeg,
    encode_png,
    normalize,
    to_grayscale,
)

from .conftest import textured_image


def test_png_round_trip_is_lossless():
    red = ImageBuffer(np.tile(np.array([255, 0, 0], np.uint8), (2, 2, 1)))
    decoded = decode_image(encode_png(red))
    assert decoded.width == 2 and decoded.height == 2 and decoded.channels == 3
    assert np.array_equal(decoded.pixels, red.pixels)


def test_png_round_trip_random_images():
    rng = np.random.default_rng(11)
    for channels in (1, 3):
        img = ImageBuffer(rng.integers(0, 256, size=(9, 13, channels), dtype=np.uint8))
        assert np.array_equal(decode_image(encode_png(img)).pixels, img.pixels)


def test_truncated_jpeg_raises_decode_error(small_photo):
    stream = encode_jpeg(small_photo, 75)
    with pytest.raises(DecodeError, match="JPEG"):
        decode_image(stream[: len(stream) // 2])


def test_corrupt_png_names_container(small_photo):
    stream = bytearray(encode_png(small_photo))
    stream[20:40] = b"\x00" * 20
    with pytest.raises(DecodeError, match="PNG"):
        decode_image(bytes(stream))


def test_unknown_container_rejected():
    with pytest.raises(DecodeError):
        decode_image(b"GIF89a not really supported here")


def test_jpeg_round_trip_dims_and_tolerance(small_photo):
    decoded = decode_image(encode_jpeg(small_photo, 75))
    assert (decoded.width, decoded.height) == (small_photo.width, small_photo.height)
    assert decoded.channels == small_photo.channels
    err = np.abs(
        decoded.pixels.astype(np.int16) - small_photo.pixels.astype(np.int16)
    )
    # lossy but close: bounds measured once on this fixture and frozen
    assert err.mean() < 8.0
    assert err.max() < 96


def test_jpeg_quality_affects_size(small_photo):
    assert len(encode_jpeg(small_photo, 75)) < len(encode_jpeg(small_photo, 100))


@pytest.mark.parametrize("quality", [0, -3, 101])
def test_jpeg_quality_bounds(small_photo, quality):
    with pytest.raises(ParameterError):
        encode_jpeg(small_photo, quality)


def test_grayscale_png_decodes_to_one_channel():
    gray = ImageBuffer(np.arange(16, dtype=np.uint8).reshape(4, 4, 1))
    assert decode_image(encode_png(gray)).channels == 1


def test_center_crop_identity(small_photo):
    out = center_crop(small_photo, small_photo.width, small_photo.height)
    assert np.array_equal(out.pixels, small_photo.pixels)


def test_center_crop_picks_central_window():
    px = np.arange(16, dtype=np.uint8).reshape(4, 4, 1)
    out = center_crop(ImageBuffer(px), 2, 2)
    # offsets floor((4-2)/2) = 1 in both axes -> rows 1..2, cols 1..2
    assert np.array_equal(out.pixels[:, :, 0], np.array([[5, 6], [9, 10]]))


def test_center_crop_too_large_raises():
    img = textured_image(1, 24, 24)
    with pytest.raises(DimensionError):
        center_crop(img, 300, 300)


def test_grayscale_identity_on_single_channel():
    gray = ImageBuffer(np.arange(12, dtype=np.uint8).reshape(3, 4, 1))
    assert to_grayscale(gray) is gray


def test_grayscale_white_is_white():
    white = ImageBuffer(np.full((2, 2, 3), 255, np.uint8))
    assert np.all(to_grayscale(white).pixels == 255)


def test_grayscale_red_luma():
    red = ImageBuffer(np.tile(np.array([255, 0, 0], np.uint8), (1, 1, 1)))
    assert to_grayscale(red).pixels[0, 0, 0] == 76  # half_up(0.299 * 255)


def test_normalize_endpoints():
    img = ImageBuffer(np.array([[[0], [255]]], np.uint8))
    norm = normalize(img)
    assert norm.samples[0, 0, 0] == -1.0
    assert norm.samples[0, 1, 0] == 1.0


def test_normalize_128():
    img = ImageBuffer(np.array([[[128]]], np.uint8))
    # (128 - 127.5) / 127.5 = 1/255
    assert normalize(img).samples[0, 0, 0] == pytest.approx(1.0 / 255.0, abs=1e-15)


def test_denormalize_inverts_normalize_on_all_levels():
    levels = np.arange(256, dtype=np.uint8).reshape(16, 16, 1)
    img = ImageBuffer(levels)
    assert np.array_equal(denormalize(normalize(img)).pixels, img.pixels)


def test_normalize_is_idempotent_through_the_lattice(small_photo):
    n1 = normalize(small_photo)
    n2 = normalize(denormalize(n1))
    assert np.array_equal(n1.samples, n2.samples)


def test_normalize_monotone():
    img = ImageBuffer(np.arange(256, dtype=np.uint8).reshape(1, 256, 1))
    s = normalize(img).samples[0, :, 0]
    assert np.all(np.diff(s) > 0)
    assert s.min() >= -1.0 and s.max() <= 1.0


def test_normalized_image_rejects_out_of_range():
    with pytest.raises(ParameterError):
        NormalizedImage(np.full((2, 2, 1), 1.5))


def test_image_buffer_validation():
    with pytest.raises(ChannelError):
        ImageBuffer(np.zeros((2, 2, 2), np.uint8))
    with pytest.raises(DimensionError):
        ImageBuffer(np.zeros((0, 2, 1), np.uint8))
    with pytest.raises(ParameterError):
        ImageBuffer(np.full((2, 2, 1), 300, np.int32))
