"""Image representation, labeled-dataset I/O, and the deterministic randomness contract.

Every random decision in the package flows through :class:`SeedSpec`. A stream
is addressed by the tuple ``(master_seed, group_id, image_index, step_index)``
and the derivation is a fixed byte-level rule (see ``SeedSpec.stream``), so a
suite generated here is reproducible bit-for-bit on any platform.

Reserved ``group_id`` channels (benchmark groups occupy 1..69):

* ``0``  - synthetic dataset generation (one stream per image index)
* ``70`` - dataset sampling shuffle
* ``71`` - classifier initialization and batch shuffling
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DomainError, FormatError

GROUP_CHANNEL_SYNTH = 0
GROUP_CHANNEL_SAMPLER = 70
GROUP_CHANNEL_TRAINER = 71

CIFAR10_RECORD_BYTES = 3073  # 1 label byte + 3 * 1024 plane bytes
CIFAR10_CLASS_NAMES = (
    "airplane", "automobile", "bird", "cat", "deer",
    "dog", "frog", "horse", "ship", "truck",
)


@dataclass(frozen=True)
class RasterImage:
    """Fixed-size 8-bit raster; pixel data is row-major and channel-interleaved."""

    width: int
    height: int
    channels: int
    data: bytes

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DomainError(f"invalid dimensions {self.width}x{self.height}")
        if self.channels not in (1, 3):
            raise DomainError(f"channels must be 1 or 3, got {self.channels}")
        expected = self.width * self.height * self.channels
        if len(self.data) != expected:
            raise DomainError(
                f"data length {len(self.data)} != width*height*channels = {expected}"
            )

    def to_array(self) -> np.ndarray:
        """Read-only (height, width, channels) uint8 view of the pixel data."""
        arr = np.frombuffer(self.data, dtype=np.uint8)
        return arr.reshape(self.height, self.width, self.channels)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        """Build from a (h, w) or (h, w, c) uint8 array."""
        if arr.dtype != np.uint8:
            raise DomainError(f"expected uint8 array, got {arr.dtype}")
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise DomainError(f"expected 2- or 3-d array, got shape {arr.shape}")
        h, w, c = arr.shape
        return cls(width=w, height=h, channels=c, data=arr.tobytes())

    def same_dims(self, other: "RasterImage") -> bool:
        return (self.width, self.height, self.channels) == (
            other.width, other.height, other.channels,
        )


@dataclass(frozen=True)
class LabeledDataset:
    """Images of identical dimensions plus one class index per image."""

    images: tuple[RasterImage, ...]
    labels: tuple[int, ...]
    class_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.images):
            raise DomainError(
                f"{len(self.labels)} labels for {len(self.images)} images"
            )
        for lab in self.labels:
            if not 0 <= lab < len(self.class_names):
                raise DomainError(f"label {lab} out of range for {len(self.class_names)} classes")
        if self.images:
            first = self.images[0]
            for img in self.images:
                if not first.same_dims(img):
                    raise DomainError("images do not share identical dimensions")

    def __len__(self) -> int:
        return len(self.images)

    def subset(self, indices: list[int] | tuple[int, ...]) -> "LabeledDataset":
        return LabeledDataset(
            images=tuple(self.images[i] for i in indices),
            labels=tuple(self.labels[i] for i in indices),
            class_names=self.class_names,
        )


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus the fixed derivation rule for per-call random streams.

    ``stream(group_id, image_index, step_index)`` hashes the ASCII tag
    ``b"PBRNG1"`` followed by the four fields as unsigned 64-bit big-endian
    integers with SHA-256, takes the first 16 digest bytes as an unsigned
    big-endian integer, and seeds a PCG64 generator with it. The constants are
    part of the wire contract: identical tuples give identical streams on any
    platform, distinct tuples give independent streams.
    """

    master_seed: int

    def stream_seed(self, group_id: int, image_index: int, step_index: int) -> int:
        material = struct.pack(
            ">4Q",
            self.master_seed & 0xFFFFFFFFFFFFFFFF,
            group_id & 0xFFFFFFFFFFFFFFFF,
            image_index & 0xFFFFFFFFFFFFFFFF,
            step_index & 0xFFFFFFFFFFFFFFFF,
        )
        digest = hashlib.sha256(b"PBRNG1" + material).digest()
        return int.from_bytes(digest[:16], "big")

    def stream(self, group_id: int, image_index: int, step_index: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(self.stream_seed(group_id, image_index, step_index))
        )


def load_cifar10_batch(path: str) -> LabeledDataset:
    """Load a CIFAR-10 binary batch file.

    Records are 3073 bytes: one label byte then 1024 R, 1024 G, 1024 B bytes,
    row-major within each 32x32 plane. Planes are interleaved on load.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) == 0 or len(raw) % CIFAR10_RECORD_BYTES != 0:
        raise FormatError(
            f"{path}: length {len(raw)} is not a positive multiple of {CIFAR10_RECORD_BYTES}"
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR10_RECORD_BYTES)
    labels = records[:, 0]
    if labels.max(initial=0) > 9:
        bad = int(np.argmax(labels > 9))
        raise FormatError(f"{path}: record {bad} has label byte {labels[bad]} > 9")
    # planar (n, 3, 32, 32) -> interleaved (n, 32, 32, 3)
    pixels = records[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    images = tuple(RasterImage.from_array(np.ascontiguousarray(p)) for p in pixels)
    return LabeledDataset(
        images=images,
        labels=tuple(int(x) for x in labels),
        class_names=CIFAR10_CLASS_NAMES,
    )


def save_png(image: RasterImage, path: str) -> None:
    """Write an image as 8-bit grayscale or RGB PNG (lossless)."""
    arr = image.to_array()
    if image.channels == 1:
        pil = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(arr, mode="RGB")
    pil.save(path, format="PNG")


def load_png(path: str) -> RasterImage:
    """Load an 8-bit grayscale or RGB PNG; anything else is a format error."""
    try:
        with Image.open(path) as pil:
            if pil.format != "PNG":
                raise FormatError(f"{path}: not a PNG file (format={pil.format})")
            if pil.mode not in ("L", "RGB"):
                raise FormatError(f"{path}: unsupported PNG color type {pil.mode}")
            arr = np.asarray(pil, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: cannot decode PNG: {exc}") from exc
    return RasterImage.from_array(np.ascontiguousarray(arr))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the synthetic shape dataset.

    Classes are concentric glyphs (small disc, large disc, ring) drawn near
    the image center with seeded jitter, size, and intensity, over a dim
    noisy background. The classes differ in radial mass profile, which keeps
    them separable under rotation while pixel noise gradually blurs the size
    boundaries. Assignment is round-robin by image index.
    """

    width: int = 32
    height: int = 32
    channels: int = 3
    classes: tuple[str, ...] = ("small_disc", "large_disc", "ring")
    center_jitter: int = 2
    background_max: int = 50
    min_intensity: int = 140

    def dataset_id(self, n: int, seed: int) -> str:
        cls = "+".join(self.classes)
        return (
            f"synthetic:v1:{self.width}x{self.height}x{self.channels}"
            f":{cls}:n={n}:seed={seed}"
        )


_SHAPE_KINDS = ("small_disc", "large_disc", "ring")


def _draw_shape(kind: str, rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    h, w = spec.height, spec.width
    bg = rng.integers(0, spec.background_max + 1, size=(h, w)).astype(np.uint8)
    jitter = spec.center_jitter
    cx = (w - 1) / 2.0 + rng.integers(-jitter, jitter + 1)
    cy = (h - 1) / 2.0 + rng.integers(-jitter, jitter + 1)
    fg = int(rng.integers(spec.min_intensity, 256))
    ys, xs = np.mgrid[0:h, 0:w]
    rsq = (xs - cx) ** 2 + (ys - cy) ** 2
    if kind == "small_disc":
        r = rng.integers(4, 7)
        mask = rsq <= r * r
    elif kind == "large_disc":
        r = rng.integers(8, 12)
        mask = rsq <= r * r
    elif kind == "ring":
        outer = rng.integers(9, 13)
        inner = outer - 3
        mask = (rsq <= outer * outer) & (rsq > inner * inner)
    else:
        raise DomainError(f"unknown shape class {kind!r}")
    plane = np.where(mask, fg, bg).astype(np.uint8)
    return np.repeat(plane[:, :, np.newaxis], spec.channels, axis=2)


def synth_dataset(spec: SynthSpec, n: int, seed: int) -> LabeledDataset:
    """Deterministic labeled dataset of parametric shapes; same seed, same bytes."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if len(spec.classes) < 2:
        raise DomainError("need at least 2 classes")
    for kind in spec.classes:
        if kind not in _SHAPE_KINDS:
            raise DomainError(f"unknown shape class {kind!r}")
    seeds = SeedSpec(seed)
    images = []
    labels = []
    for i in range(n):
        label = i % len(spec.classes)
        rng = seeds.stream(GROUP_CHANNEL_SYNTH, i, 0)
        arr = _draw_shape(spec.classes[label], rng, spec)
        images.append(RasterImage.from_array(arr))
        labels.append(label)
    return LabeledDataset(
        images=tuple(images), labels=tuple(labels), class_names=spec.classes
    )


def sample_indices(total: int, count: int, seeds: SeedSpec, skip: int = 0) -> list[int]:
    """First ``count`` indices of a seeded shuffle of ``range(total)``, after ``skip``.

    The shuffle uses the reserved sampler stream, so disjoint (skip, count)
    windows over the same source and master seed never share an index.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if skip < 0:
        raise DomainError(f"skip must be >= 0, got {skip}")
    if skip + count > total:
        raise DomainError(
            f"requested window skip={skip} count={count} exceeds dataset size {total}"
        )
    rng = seeds.stream(GROUP_CHANNEL_SAMPLER, 0, 0)
    perm = rng.permutation(total)
    return [int(i) for i in perm[skip:skip + count]]
