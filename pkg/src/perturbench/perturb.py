"""Perturbation operators (salt & pepper, Gaussian noise, rotation) and chains.

All operators are pure: same image, same parameters, same stream state give
the same output bytes. Noise operators document their exact draw order so an
external audit can replay the stream; rotation is fully deterministic.

Intensity re-quantization always rounds half away from zero; with the
non-negative values produced here that is ``floor(v + 0.5)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .raster import RasterImage, SeedSpec


@dataclass(frozen=True)
class SaltPepper:
    """Impulse noise: each pixel is hit with probability ``density``.

    A hit pixel has all its channels forced to 0 (pepper) or 255 (salt) with
    equal probability. Draw order: one uniform (h, w) array for selection,
    then one uniform (h, w) array for the salt/pepper coin.
    """

    density: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.density) and 0.0 <= self.density <= 1.0):
            raise DomainError(f"salt & pepper density must be in [0, 1], got {self.density}")


@dataclass(frozen=True)
class Gaussian:
    """Additive zero-mean Gaussian noise on the [0, 1] intensity scale.

    ``variance`` is the noise variance after normalizing intensities to
    [0, 1]. Draw order: one standard-normal array of the image's full
    (h, w, c) shape, scaled by sqrt(variance).
    """

    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.variance) and self.variance >= 0.0):
            raise DomainError(f"gaussian variance must be >= 0, got {self.variance}")


@dataclass(frozen=True)
class Rotation:
    """Rotation about the image center; positive degrees turn clockwise."""

    degrees: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.degrees):
            raise DomainError(f"rotation degrees must be finite, got {self.degrees}")


PerturbationStep = SaltPepper | Gaussian | Rotation


@dataclass(frozen=True)
class PerturbationChain:
    """Ordered perturbation steps; empty chain is the identity, order matters."""

    steps: tuple[PerturbationStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @classmethod
    def of(cls, *steps: PerturbationStep) -> "PerturbationChain":
        return cls(steps=tuple(steps))


def _requantize(values: np.ndarray) -> np.ndarray:
    # round half away from zero; values are already in [0, 255]
    return np.floor(values + 0.5).astype(np.uint8)


def apply_salt_pepper(
    image: RasterImage, density: float, rng: np.random.Generator
) -> RasterImage:
    """Force a seeded fraction of pixels to pure black or pure white."""
    SaltPepper(density)  # validate
    arr = image.to_array()
    h, w = image.height, image.width
    selected = rng.random((h, w)) < density
    salt = rng.random((h, w)) < 0.5
    out = arr.copy()
    out[selected & ~salt] = 0
    out[selected & salt] = 255
    return RasterImage.from_array(out)


def apply_gaussian(
    image: RasterImage, variance: float, rng: np.random.Generator
) -> RasterImage:
    """Add zero-mean Gaussian noise per channel value, clamp, re-quantize."""
    Gaussian(variance)  # validate
    arr = image.to_array().astype(np.float64) / 255.0
    noise = rng.standard_normal(arr.shape) * math.sqrt(variance)
    clamped = np.clip(arr + noise, 0.0, 1.0) * 255.0
    return RasterImage.from_array(_requantize(clamped))


def rotate(image: RasterImage, degrees: float) -> RasterImage:
    """Rotate about the center, bilinear, same-size crop, black fill.

    Positive degrees rotate clockwise on screen, negative counterclockwise.
    Output dimensions equal input dimensions; samples falling outside the
    source contribute intensity 0.
    """
    Rotation(degrees)  # validate
    arr = image.to_array().astype(np.float64)
    h, w = image.height, image.width
    theta = math.radians(degrees)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    dst_x, dst_y = np.meshgrid(np.arange(w) - cx, np.arange(h) - cy)
    # inverse map: rotate destination offsets by -degrees (x right, y down)
    src_x = dst_x * cos_t + dst_y * sin_t + cx
    src_y = -dst_x * sin_t + dst_y * cos_t + cy

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = (src_x - x0)[:, :, np.newaxis]
    fy = (src_y - y0)[:, :, np.newaxis]

    def tap(yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
        inside = ((xx >= 0) & (xx < w) & (yy >= 0) & (yy < h))[:, :, np.newaxis]
        vals = arr[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1), :]
        return np.where(inside, vals, 0.0)

    out = (
        (1.0 - fx) * (1.0 - fy) * tap(y0, x0)
        + fx * (1.0 - fy) * tap(y0, x0 + 1)
        + (1.0 - fx) * fy * tap(y0 + 1, x0)
        + fx * fy * tap(y0 + 1, x0 + 1)
    )
    return RasterImage.from_array(_requantize(out))


def apply_step(
    image: RasterImage, step: PerturbationStep, rng: np.random.Generator | None
) -> RasterImage:
    if isinstance(step, SaltPepper):
        if rng is None:
            raise DomainError("salt & pepper step requires a random stream")
        return apply_salt_pepper(image, step.density, rng)
    if isinstance(step, Gaussian):
        if rng is None:
            raise DomainError("gaussian step requires a random stream")
        return apply_gaussian(image, step.variance, rng)
    if isinstance(step, Rotation):
        return rotate(image, step.degrees)
    raise DomainError(f"unknown perturbation step {step!r}")


def apply_chain(
    image: RasterImage,
    chain: PerturbationChain,
    seeds: SeedSpec,
    group_id: int,
    image_index: int,
) -> RasterImage:
    """Apply the chain's steps in order, one derived stream per step position.

    Step ``k`` of image ``i`` in group ``g`` draws from
    ``seeds.stream(g, i, k)``; rotation steps consume no stream. Because each
    (group, image, step) owns its stream, parallel and serial generation
    produce identical bytes.
    """
    out = image
    for k, step in enumerate(chain.steps):
        rng = None
        if not isinstance(step, Rotation):
            rng = seeds.stream(group_id, image_index, k)
        out = apply_step(out, step, rng)
    return out
