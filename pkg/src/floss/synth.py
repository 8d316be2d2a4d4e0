"""Seeded synthetic saliency data: ellipse blobs on a noisy background.

Randomness comes from numpy's PCG64 generator. Image ``k`` draws from its
own stream seeded with ``(seed, k)``, so images can be generated in any order
and still come out identical.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import ConfigError
from .maps import BinaryMap, SaliencyMap, _frozen

PRNG_ALGORITHM = "numpy.PCG64/SeedSequence(seed, image_index)"

FEATURE_NAMES = ("intensity", "box_mean_r2", "box_mean_r4", "bias")
MIN_SIDE = 8


@dataclass(frozen=True)
class SynthConfig:
    width: int = 32
    height: int = 32
    n_images: int = 300
    blobs_per_image: tuple[int, int] = (1, 2)
    fg_intensity: tuple[float, float] = (0.6, 0.8)
    bg_intensity: tuple[float, float] = (0.2, 0.4)
    noise_sigma: float = 0.1
    seed: int = 0

    def validate(self):
        if self.n_images < 1:
            raise ConfigError("n_images must be at least 1")
        if min(self.width, self.height) < MIN_SIDE:
            raise ConfigError(
                f"images must be at least {MIN_SIDE}x{MIN_SIDE} so the smallest ellipse "
                f"axis (side/8) covers a pixel; got {self.width}x{self.height}"
            )
        lo, hi = self.blobs_per_image
        if not 1 <= lo <= hi:
            raise ConfigError(f"invalid blob count range {self.blobs_per_image}")
        (f0, f1), (b0, b1) = self.fg_intensity, self.bg_intensity
        if not (0 <= b0 <= b1 < f0 <= f1 <= 1):
            raise ConfigError("background and foreground intensity ranges must be disjoint, bg below fg, inside [0, 1]")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")

    def as_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "n_images": self.n_images,
            "blobs_min": self.blobs_per_image[0],
            "blobs_max": self.blobs_per_image[1],
            "fg_min": self.fg_intensity[0],
            "fg_max": self.fg_intensity[1],
            "bg_min": self.bg_intensity[0],
            "bg_max": self.bg_intensity[1],
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "prng": PRNG_ALGORITHM,
        }


@dataclass(frozen=True)
class FeatureStack:
    """Per-pixel features, shape ``(height, width, 4)``."""

    values: np.ndarray

    @property
    def channels(self) -> int:
        return self.values.shape[-1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[:2]

    def matrix(self) -> np.ndarray:
        """Row-major ``(n_pixels, channels)`` design matrix."""
        return self.values.reshape(-1, self.channels)


@dataclass(frozen=True)
class Sample:
    id: str
    image: SaliencyMap
    mask: BinaryMap
    features: FeatureStack


def _ellipse_mask(rng, width, height) -> np.ndarray:
    ax = rng.uniform(width / 8, width / 3)
    ay = rng.uniform(height / 8, height / 3)
    # center chosen so the whole ellipse lies within the pixel-centre grid
    cx = rng.uniform(ax - 0.5, width - 0.5 - ax)
    cy = rng.uniform(ay - 0.5, height - 0.5 - ay)
    yy, xx = np.mgrid[0:height, 0:width]
    return ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0


def generate_one(config: SynthConfig, index: int):
    """Return ``(image, mask)`` arrays for image ``index``."""
    rng = np.random.default_rng([config.seed, index])
    w, h = config.width, config.height
    n_blobs = int(rng.integers(config.blobs_per_image[0], config.blobs_per_image[1] + 1))
    bg = rng.uniform(*config.bg_intensity)
    fg = rng.uniform(*config.fg_intensity)
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(n_blobs):
        mask |= _ellipse_mask(rng, w, h)
    image = np.where(mask, fg, bg)
    if config.noise_sigma > 0:
        image = image + rng.normal(0.0, config.noise_sigma, size=image.shape)
    return np.clip(image, 0.0, 1.0), mask.astype(np.float64)


def generate(config: SynthConfig) -> list[Sample]:
    config.validate()
    samples = []
    for k in range(config.n_images):
        image, mask = generate_one(config, k)
        samples.append(
            Sample(
                id=f"{k:05d}",
                image=SaliencyMap(_frozen(image)),
                mask=BinaryMap(_frozen(mask)),
                features=extract_features(image),
            )
        )
    return samples


def extract_features(image) -> FeatureStack:
    """Intensity, 5x5 and 9x9 box means (edge-clamped), and a bias of 1."""
    img = np.asarray(getattr(image, "values", image), dtype=np.float64)
    feats = np.stack(
        [
            img,
            uniform_filter(img, size=5, mode="nearest"),
            uniform_filter(img, size=9, mode="nearest"),
            np.ones_like(img),
        ],
        axis=-1,
    )
    feats.setflags(write=False)
    return FeatureStack(feats)


def split(samples, train_fraction: float, seed: int):
    """Seeded shuffle, then the first ``round(n * train_fraction)`` go to train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie strictly between 0 and 1, got {train_fraction}")
    samples = list(samples)
    order = np.random.default_rng(seed).permutation(len(samples))
    n_train = int(round(len(samples) * train_fraction))
    return [samples[i] for i in order[:n_train]], [samples[i] for i in order[n_train:]]


def sample_from_arrays(sample_id: str, image, mask) -> Sample:
    """Rebuild a sample (with features) from stored image and mask arrays."""
    image = np.asarray(image, dtype=np.float64)
    return Sample(
        id=sample_id,
        image=SaliencyMap(_frozen(image)),
        mask=BinaryMap(_frozen(np.asarray(mask, dtype=np.float64))),
        features=extract_features(image),
    )
