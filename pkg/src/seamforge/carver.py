"""Dynamic-programming seam search, seam removal/insertion, resizing, and
mask-driven object removal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import EnergyMap, gradient_energy
from .errors import DimensionError, ParameterError, SeamError
from .imaging import ImageBuffer, to_grayscale

VERTICAL = "vertical"
HORIZONTAL = "horizontal"

# Painted over marked seams; red stands out on natural images.
SEAM_HIGHLIGHT = (255, 0, 0)

# Subtracted from masked pixels so every optimal seam crosses the mask.
# Exceeds the largest possible seam energy (255 * 2 * dimension) for any
# image shorter than ~1960 px.
OBJECT_REMOVAL_BIAS = 1.0e6


def _check_axis(axis: str) -> str:
    if axis not in (VERTICAL, HORIZONTAL):
        raise ParameterError(f"axis must be 'vertical' or 'horizontal', got {axis!r}")
    return axis


@dataclass(frozen=True)
class Seam:
    """8-connected pixel path crossing the image, one offset per crossed line."""

    axis: str
    offsets: np.ndarray

    def __post_init__(self):
        _check_axis(self.axis)
        off = np.ascontiguousarray(np.asarray(self.offsets, dtype=np.int64))
        if off.ndim != 1 or off.size < 1:
            raise SeamError("seam offsets must be a non-empty 1-D sequence")
        if off.min() < 0:
            raise SeamError("seam offsets must be non-negative")
        if off.size > 1 and np.abs(np.diff(off)).max() > 1:
            raise SeamError("seam is not 8-connected: |offset step| > 1")
        off.setflags(write=False)
        object.__setattr__(self, "offsets", off)

    def __len__(self) -> int:
        return int(self.offsets.size)


@dataclass(frozen=True)
class CumulativeTable:
    """Minimal path energy reaching each cell, plus the chosen parent step."""

    axis: str
    values: np.ndarray
    parent: np.ndarray  # int8 step in {-1, 0, +1} toward the previous line

    def __post_init__(self):
        _check_axis(self.axis)
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        p = np.ascontiguousarray(np.asarray(self.parent, dtype=np.int8))
        if v.shape != p.shape or v.ndim != 2:
            raise SeamError("values/parent must be equal-shape 2-D grids")
        v.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "parent", p)


@dataclass(frozen=True)
class ObjectMask:
    """Boolean removal flags, one per pixel."""

    flags: np.ndarray

    def __post_init__(self):
        f = np.ascontiguousarray(np.asarray(self.flags, dtype=bool))
        if f.ndim != 2:
            raise DimensionError(f"mask must be 2-D, got shape {f.shape}")
        f.setflags(write=False)
        object.__setattr__(self, "flags", f)

    @property
    def height(self) -> int:
        return self.flags.shape[0]

    @property
    def width(self) -> int:
        return self.flags.shape[1]


def _cumulative_vertical(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fill the DP table row by row.

    Ties between candidate parents prefer the straight-up step, then the
    left, then the right one, which keeps every result total-ordered (an
    all-zero map yields all-zero parents).
    """
    h, w = vals.shape
    m = np.empty((h, w), dtype=np.float64)
    parent = np.zeros((h, w), dtype=np.int8)
    m[0] = vals[0]
    if h == 1:
        return m, parent
    steps = np.array([0, -1, 1], dtype=np.int8)
    pad = np.inf
    for y in range(1, h):
        prev = m[y - 1]
        stay = prev
        left = np.concatenate(([pad], prev[:-1]))  # parent one column left
        right = np.concatenate((prev[1:], [pad]))  # parent one column right
        cand = np.stack((stay, left, right))
        best = np.argmin(cand, axis=0)  # first minimum wins the tie
        parent[y] = steps[best]
        m[y] = vals[y] + cand[best, np.arange(w)]
    return m, parent


def cumulative_energy(emap: EnergyMap, axis: str = VERTICAL) -> CumulativeTable:
    """DP table of minimal seam energies ending at each cell."""
    _check_axis(axis)
    if axis == VERTICAL:
        m, p = _cumulative_vertical(emap.values)
    else:
        m, p = _cumulative_vertical(emap.values.T)
        m, p = m.T, p.T
    return CumulativeTable(axis, m, p)


def _walk_vertical(m: np.ndarray, parent: np.ndarray) -> np.ndarray:
    h, w = m.shape
    offsets = np.empty(h, dtype=np.int64)
    x = int(np.argmin(m[h - 1]))  # leftmost minimal terminal cell
    offsets[h - 1] = x
    for y in range(h - 1, 0, -1):
        x += int(parent[y, x])
        offsets[y - 1] = x
    return offsets


def _optimal_seam_values(vals: np.ndarray, axis: str) -> Seam:
    if axis == VERTICAL:
        m, p = _cumulative_vertical(vals)
        return Seam(VERTICAL, _walk_vertical(m, p))
    m, p = _cumulative_vertical(vals.T)
    return Seam(HORIZONTAL, _walk_vertical(m, p))


def optimal_seam(emap: EnergyMap, axis: str = VERTICAL) -> Seam:
    """Seam of globally minimal energy; ties resolved deterministically."""
    _check_axis(axis)
    return _optimal_seam_values(emap.values, axis)


def _validate_seam(img_h: int, img_w: int, seam: Seam) -> None:
    if seam.axis == VERTICAL:
        if len(seam) != img_h:
            raise SeamError(f"vertical seam length {len(seam)} != height {img_h}")
        if seam.offsets.max() >= img_w:
            raise SeamError("seam column exceeds image width")
    else:
        if len(seam) != img_w:
            raise SeamError(f"horizontal seam length {len(seam)} != width {img_w}")
        if seam.offsets.max() >= img_h:
            raise SeamError("seam row exceeds image height")


def _drop_columns(grid: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Remove one entry per row of a (h, w[, c]) grid."""
    h, w = grid.shape[:2]
    keep = np.ones((h, w), dtype=bool)
    keep[np.arange(h), offsets] = False
    if grid.ndim == 3:
        return grid[keep].reshape(h, w - 1, grid.shape[2])
    return grid[keep].reshape(h, w - 1)


def _transpose(img: ImageBuffer) -> ImageBuffer:
    return ImageBuffer(np.ascontiguousarray(img.pixels.transpose(1, 0, 2)))


def remove_seam(img: ImageBuffer, seam: Seam) -> ImageBuffer:
    """Drop the seam pixel from every crossed line."""
    _validate_seam(img.height, img.width, seam)
    if seam.axis == VERTICAL:
        if img.width < 2:
            raise SeamError("cannot remove a seam from a 1-pixel-wide image")
        return ImageBuffer(_drop_columns(img.pixels, seam.offsets))
    if img.height < 2:
        raise SeamError("cannot remove a seam from a 1-pixel-tall image")
    t = remove_seam(_transpose(img), Seam(VERTICAL, seam.offsets))
    return _transpose(t)


def insert_seam(img: ImageBuffer, seam: Seam, mode: str = "average") -> ImageBuffer:
    """Insert one pixel per crossed line, right after the seam position.

    "average" fills the new pixel with the half-up mean of the two pixels it
    sits between (edge seams duplicate their single neighbor); "duplicate"
    copies the seam pixel verbatim.
    """
    if mode not in ("average", "duplicate"):
        raise ParameterError(f"insert mode must be 'average' or 'duplicate', got {mode!r}")
    _validate_seam(img.height, img.width, seam)
    if seam.axis == HORIZONTAL:
        t = insert_seam(_transpose(img), Seam(VERTICAL, seam.offsets), mode)
        return _transpose(t)

    px = img.pixels
    h, w, c = px.shape
    rows = np.arange(h)
    cols = np.arange(w + 1)[None, :]
    s = seam.offsets[:, None]
    src = np.where(cols <= s, cols, cols - 1)
    out = px[rows[:, None], src].copy()
    if mode == "average":
        left = px[rows, seam.offsets].astype(np.int32)
        right_idx = np.minimum(seam.offsets + 1, w - 1)
        right = px[rows, right_idx].astype(np.int32)
        out[rows, seam.offsets + 1] = ((left + right + 1) // 2).astype(np.uint8)
    return ImageBuffer(out)


@dataclass(frozen=True)
class CarveStep:
    """One resizing step: the seam acted on and its energy at that step."""

    seam: Seam
    energy: float
    removed: bool  # False for an insertion


def _seam_on_current(img: ImageBuffer, axis: str) -> tuple[Seam, float]:
    emap = gradient_energy(to_grayscale(img))
    seam = optimal_seam(emap, axis)
    from .energy import seam_energy

    return seam, seam_energy(emap, seam)


def carve_to_traced(
    img: ImageBuffer, target_w: int, target_h: int, insert_mode: str = "average"
) -> tuple[ImageBuffer, list[CarveStep]]:
    """Resize via one seam per step, returning the per-step trace.

    Width is adjusted first (vertical seams), then height. Grayscale and
    energy are recomputed before every step.
    """
    target_w, target_h = int(target_w), int(target_h)
    if target_w < 1 or target_h < 1:
        raise ParameterError(f"target dimensions must be >= 1, got {target_w}x{target_h}")
    steps: list[CarveStep] = []
    cur = img
    while cur.width != target_w:
        seam, e = _seam_on_current(cur, VERTICAL)
        if cur.width > target_w:
            cur = remove_seam(cur, seam)
            steps.append(CarveStep(seam, e, removed=True))
        else:
            cur = insert_seam(cur, seam, insert_mode)
            steps.append(CarveStep(seam, e, removed=False))
    while cur.height != target_h:
        seam, e = _seam_on_current(cur, HORIZONTAL)
        if cur.height > target_h:
            cur = remove_seam(cur, seam)
            steps.append(CarveStep(seam, e, removed=True))
        else:
            cur = insert_seam(cur, seam, insert_mode)
            steps.append(CarveStep(seam, e, removed=False))
    return cur, steps


def carve_to(
    img: ImageBuffer, target_w: int, target_h: int, insert_mode: str = "average"
) -> ImageBuffer:
    """Resize to exactly (target_w, target_h) by iterative seam carving."""
    return carve_to_traced(img, target_w, target_h, insert_mode)[0]


def remove_object(
    img: ImageBuffer,
    mask: ObjectMask,
    bias: float = OBJECT_REMOVAL_BIAS,
    restore_size: bool = False,
) -> ImageBuffer:
    """Carve vertical seams through all masked pixels until none remain.

    Masked pixels get their energy reduced by `bias`, which drives every
    optimal seam through the mask. With restore_size the image is re-enlarged
    to its original width by seam insertion afterwards.
    """
    if (mask.height, mask.width) != (img.height, img.width):
        raise DimensionError(
            f"mask {mask.width}x{mask.height} does not match image "
            f"{img.width}x{img.height}"
        )
    if not mask.flags.any():
        raise ParameterError("object mask is empty")
    cur = img
    flags = mask.flags
    original_w = img.width
    while flags.any():
        if cur.width < 2:
            raise SeamError("mask still populated but image is 1 pixel wide")
        vals = gradient_energy(to_grayscale(cur)).values.copy()
        vals[flags] -= bias
        seam = _optimal_seam_values(vals, VERTICAL)
        cur = remove_seam(cur, seam)
        flags = _drop_columns(flags, seam.offsets)
    if restore_size:
        cur = carve_to(cur, original_w, cur.height)
    return cur


def mark_seams(img: ImageBuffer, n: int) -> ImageBuffer:
    """Paint the n successively-optimal vertical seams on a copy of `img`.

    Each seam is found after virtually removing the previous ones, exactly as
    carve_to would remove them. Grayscale input is promoted to 3 channels so
    the highlight color is representable.
    """
    n = int(n)
    if n < 0:
        raise ParameterError("seam count must be non-negative")
    if n >= img.width:
        raise ParameterError(f"cannot mark {n} seams on a {img.width}-wide image")
    if img.channels == 1:
        out = np.repeat(img.pixels, 3, axis=2).copy()
    else:
        out = img.pixels.copy()
    work = img
    col_map = np.tile(np.arange(img.width), (img.height, 1))
    rows = np.arange(img.height)
    for _ in range(n):
        seam, _ = _seam_on_current(work, VERTICAL)
        original_cols = col_map[rows, seam.offsets]
        out[rows, original_cols] = SEAM_HIGHLIGHT
        work = remove_seam(work, seam)
        col_map = _drop_columns(col_map, seam.offsets)
    return ImageBuffer(out)
