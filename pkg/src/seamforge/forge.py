"""Tamper-dataset generation: crops, carved variants at graded rates, JPEG
recompression, fold assignment, and balanced batch streams."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .carver import carve_to
from .errors import DataError, DecodeError, DimensionError, ForgeError, ParameterError
from .imaging import ImageBuffer, center_crop, encode_jpeg, half_up, load_image
from .rng import substream

DEFAULT_RATES = (3, 6, 9, 12, 15, 18, 21, 30, 40, 50)

LABEL_TAMPERED = "tampered"
LABEL_UNTOUCHED = "untouched"

_MANIFEST_FIELDS = ("src", "path", "rate", "label", "fold")


@dataclass(frozen=True)
class TamperSpec:
    """How variants are produced: rates, crop size, recompression, seam axis."""

    rates: tuple = DEFAULT_RATES
    crop: tuple = (224, 224)
    jpeg_quality: int = 75
    axis: str = "vertical"

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if not rates:
            raise ParameterError("rates must be non-empty")
        if any(not 0 < r < 100 for r in rates):
            raise ParameterError("every rate must lie strictly between 0 and 100")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ParameterError("rates must be strictly increasing")
        if not 1 <= int(self.jpeg_quality) <= 100:
            raise ParameterError("jpeg_quality must be in [1, 100]")
        if self.axis not in ("vertical", "horizontal"):
            raise ParameterError(f"bad axis {self.axis!r}")
        cw, ch = (int(v) for v in self.crop)
        if cw < 1 or ch < 1:
            raise ParameterError("crop dimensions must be positive")
        object.__setattr__(self, "rates", tuple(self.rates))
        object.__setattr__(self, "crop", (cw, ch))

    def seam_count(self, rate: float) -> int:
        """Seams removed for a rate, relative to the carved dimension."""
        dim = self.crop[0] if self.axis == "vertical" else self.crop[1]
        return int(half_up(rate / 100.0 * dim))


@dataclass(frozen=True)
class ManifestRecord:
    src: str
    path: str
    rate: int
    label: str
    fold: int

    def __post_init__(self):
        if (self.label == LABEL_UNTOUCHED) != (self.rate == 0):
            raise DataError(
                f"label/rate mismatch: {self.label!r} with rate {self.rate}"
            )
        if self.label not in (LABEL_UNTOUCHED, LABEL_TAMPERED):
            raise DataError(f"unknown label {self.label!r}")


@dataclass
class DatasetManifest:
    records: list
    k: int
    seed: int = 0
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        paths = [r.path for r in self.records]
        if len(set(paths)) != len(paths):
            raise DataError("manifest record paths are not unique")

    def resolve(self, record: ManifestRecord) -> Path:
        return self.root / record.path

    def sources(self) -> list:
        """Distinct source paths in first-appearance order."""
        seen = {}
        for r in self.records:
            seen.setdefault(r.src, None)
        return list(seen)

    def save(self, path) -> None:
        path = Path(path)
        lines = []
        for r in self.records:
            lines.append(
                json.dumps(
                    {
                        "src": r.src,
                        "path": r.path,
                        "rate": r.rate,
                        "label": r.label,
                        "fold": r.fold,
                    }
                )
            )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path, seed: int = 0) -> "DatasetManifest":
        path = Path(path)
        records = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                ManifestRecord(
                    src=obj["src"],
                    path=obj["path"],
                    rate=int(obj["rate"]),
                    label=obj["label"],
                    fold=int(obj["fold"]),
                )
            )
        if not records:
            raise DataError(f"empty manifest: {path}")
        k = max(r.fold for r in records) + 1
        return cls(records=records, k=k, seed=seed, root=path.parent)


def _variant_image(cropped: ImageBuffer, spec: TamperSpec, rate: float,
                   restore_size: bool) -> ImageBuffer:
    n = spec.seam_count(rate)
    if spec.axis == "vertical":
        out = carve_to(cropped, cropped.width - n, cropped.height)
    else:
        out = carve_to(cropped, cropped.width, cropped.height - n)
    if restore_size:
        out = carve_to(out, cropped.width, cropped.height)
    return out


def _forge_one(task):
    """Produce the untouched copy plus all rate variants for one source."""
    src, stem, fold, out_dir, spec, restore_size = task
    out_dir = Path(out_dir)
    try:
        img = load_image(src)
        cw, ch = spec.crop
        cropped = center_crop(img, cw, ch)
    except (DecodeError, DimensionError, OSError) as exc:
        return [], f"{src}: {exc}"
    records = []
    untouched_path = Path("0") / f"{stem}.jpg"
    (out_dir / "0").mkdir(parents=True, exist_ok=True)
    (out_dir / untouched_path).write_bytes(encode_jpeg(cropped, spec.jpeg_quality))
    records.append(
        ManifestRecord(str(src), str(untouched_path), 0, LABEL_UNTOUCHED, fold)
    )
    for rate in spec.rates:
        variant = _variant_image(cropped, spec, rate, restore_size)
        rate_key = int(rate) if float(rate).is_integer() else rate
        rel = Path(str(rate_key)) / f"{stem}.jpg"
        (out_dir / str(rate_key)).mkdir(parents=True, exist_ok=True)
        (out_dir / rel).write_bytes(encode_jpeg(variant, spec.jpeg_quality))
        records.append(
            ManifestRecord(str(src), str(rel), int(rate_key), LABEL_TAMPERED, fold)
        )
    return records, None


def forge(
    spec: TamperSpec,
    sources,
    seed: int,
    out_dir,
    k: int = 5,
    restore_size: bool = False,
    jobs: int = 1,
) -> DatasetManifest:
    """Build the tamper dataset for `sources` under `out_dir`.

    Per source: center-crop, store the untouched copy JPEG-compressed, then
    one carved variant per rate, recompressed identically.  Folds are
    assigned per source by seeded shuffle, so a source and all its variants
    share one fold.  Undecodable sources are skipped (reported in
    `manifest.errors`-style return only if all fail).
    """
    sources = [str(s) for s in sources]
    if not sources:
        raise ParameterError("no source images given")
    if k < 2:
        raise ParameterError("fold count must be >= 2")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    perm = substream(seed, "forge").permutation(len(sources))
    folds = np.empty(len(sources), dtype=np.int64)
    folds[perm] = np.arange(len(sources)) % k

    stems = []
    seen = set()
    for i, src in enumerate(sources):
        stem = Path(src).stem
        if stem in seen:
            stem = f"{stem}_{i}"
        seen.add(stem)
        stems.append(stem)

    tasks = [
        (src, stems[i], int(folds[i]), str(out_dir), spec, restore_size)
        for i, src in enumerate(sources)
    ]
    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_forge_one, tasks))
    else:
        results = [_forge_one(t) for t in tasks]

    records = []
    errors = []
    for recs, err in results:
        if err is not None:
            errors.append(err)
        records.extend(recs)
    if not records:
        raise ForgeError("no source could be forged: " + "; ".join(errors))
    records.sort(key=lambda r: (r.src, r.rate))
    manifest = DatasetManifest(records=records, k=k, seed=seed, root=out_dir)
    manifest.save(out_dir / "manifest.jsonl")
    return manifest


def kfold_split(manifest: DatasetManifest, k: int):
    """Per-fold (train_indices, test_indices) into manifest.records.

    All variants of a source live in its fold.  When k differs from the
    manifest's stored fold count the partition is re-derived from the
    manifest seed.
    """
    k = int(k)
    if k < 2:
        raise ParameterError("fold count must be >= 2")
    sources = manifest.sources()
    if len(sources) < k:
        raise ParameterError(
            f"need at least {k} distinct sources, have {len(sources)}"
        )
    if k == manifest.k:
        fold_of = {r.src: r.fold for r in manifest.records}
    else:
        perm = substream(manifest.seed, "kfold").permutation(len(sources))
        fold_of = {}
        assignment = np.empty(len(sources), dtype=np.int64)
        assignment[perm] = np.arange(len(sources)) % k
        for src, f in zip(sources, assignment):
            fold_of[src] = int(f)
    splits = []
    fold_ids = np.array([fold_of[r.src] for r in manifest.records])
    for fold in range(k):
        test = np.flatnonzero(fold_ids == fold)
        train = np.flatnonzero(fold_ids != fold)
        splits.append((train, test))
    return splits


def balanced_batches(
    manifest: DatasetManifest,
    fold: int,
    batch_size: int,
    seed: int,
    epoch: int = 0,
):
    """Record-index batches, each exactly half tampered / half untouched.

    Training records are everything outside the held-out `fold`.  One epoch
    covers every untouched training record at least once; the tampered half
    is a fresh per-epoch subsample of the (larger) tampered pool, so no
    tampered image is permanently dropped.
    """
    batch_size = int(batch_size)
    if batch_size < 2 or batch_size % 2 != 0:
        raise ParameterError(f"batch size must be even and >= 2, got {batch_size}")
    untouched = [
        i
        for i, r in enumerate(manifest.records)
        if r.fold != fold and r.label == LABEL_UNTOUCHED
    ]
    tampered = [
        i
        for i, r in enumerate(manifest.records)
        if r.fold != fold and r.label == LABEL_TAMPERED
    ]
    if not untouched or not tampered:
        raise DataError("training folds must contain both classes")
    rng = substream(seed, "shuffle", epoch)
    u = rng.permutation(untouched)
    t = rng.permutation(tampered)
    half = batch_size // 2
    n_batches = math.ceil(len(u) / half)
    need = n_batches * half
    u_seq = np.resize(u, need)  # wrap-repeat to fill the final batch
    t_seq = np.resize(t, need)
    batches = []
    for b in range(n_batches):
        sl = slice(b * half, (b + 1) * half)
        batches.append([int(i) for i in t_seq[sl]] + [int(i) for i in u_seq[sl]])
    return batches
