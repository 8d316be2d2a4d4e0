"""Dense 2-D map types and their elementwise primitives.

Every map stores a read-only ``float64`` array of shape ``(height, width)``.
Row-major flattening of ``values`` gives back the sequence the map was built
from.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

#: Values this far outside [0, 1] are clamped instead of rejected.
CLAMP_SLACK = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def _reshape(width, height, values) -> np.ndarray:
    if int(width) != width or int(height) != height or width < 1 or height < 1:
        raise DimensionError(f"width and height must be positive integers, got {width}x{height}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size != width * height:
        raise DimensionError(f"expected {width * height} values for a {width}x{height} map, got {arr.size}")
    return arr.reshape(int(height), int(width))


@dataclass(frozen=True, eq=False)
class _Map:
    values: np.ndarray

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.shape == other.shape
            and bool(np.array_equal(self.values, other.values))
        )

    def __hash__(self):
        return hash((type(self).__name__, self.shape, self.values.tobytes()))


class SaliencyMap(_Map):
    """Continuous per-pixel posteriors in [0, 1]."""

    @classmethod
    def from_array(cls, arr) -> "SaliencyMap":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
        return new_saliency_map(arr.shape[1], arr.shape[0], arr.ravel())


class BinaryMap(_Map):
    """Hard {0, 1} labels: ground truth or a thresholded prediction."""

    @classmethod
    def from_array(cls, arr) -> "BinaryMap":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
        return new_binary_map(arr.shape[1], arr.shape[0], arr.ravel())

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.values))

    def as_saliency(self) -> SaliencyMap:
        return SaliencyMap(self.values)


class GradientMap(_Map):
    """Per-pixel partial derivatives of a scalar loss; always finite."""

    @classmethod
    def from_array(cls, arr) -> "GradientMap":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("gradient map contains non-finite entries")
        return cls(_frozen(arr))


def new_saliency_map(width: int, height: int, values) -> SaliencyMap:
    """Build a validated saliency map from a row-major value sequence."""
    arr = _reshape(width, height, values)
    if not np.all(np.isfinite(arr)):
        raise DomainError("saliency values must be finite")
    lo, hi = arr.min(), arr.max()
    if lo < -CLAMP_SLACK or hi > 1.0 + CLAMP_SLACK:
        raise DomainError(f"saliency values must lie in [0, 1], got range [{lo}, {hi}]")
    if lo < 0.0 or hi > 1.0:
        arr = np.clip(arr, 0.0, 1.0)
    return SaliencyMap(_frozen(arr))


def new_binary_map(width: int, height: int, values) -> BinaryMap:
    arr = _reshape(width, height, values)
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise DomainError("binary map values must be exactly 0 or 1")
    return BinaryMap(_frozen(arr))


def binarize(pred: SaliencyMap, t: float) -> BinaryMap:
    """Foreground where ``pred > t`` (strict), background elsewhere."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"threshold must lie in [0, 1], got {t}")
    return BinaryMap(_frozen((_values(pred) > t).astype(np.float64)))


def shape_compatible(a, b) -> bool:
    return np.shape(_values(a)) == np.shape(_values(b))


def _values(m) -> np.ndarray:
    """Underlying array of a map; plain arrays pass through unchanged."""
    if isinstance(m, _Map):
        return m.values
    return np.asarray(m, dtype=np.float64)


def check_shapes(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Return both value arrays, raising DimensionError if they disagree."""
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise DimensionError(f"shape mismatch: {va.shape} vs {vb.shape}")
    return va, vb
