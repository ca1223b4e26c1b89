"""Shared types, error classes, and small numeric helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Dynamic ranges at or below this are treated as constant by min-max
# normalization (constant maps carry no ranking information).
DEGENERATE_RANGE = 1e-9


class FormatError(ValueError):
    """A binary or structured file violates its declared format.

    Carries the byte offset at which the violation was detected.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigurationError(ValueError):
    """Parameters are mutually inconsistent or out of their valid domain."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its required accuracy."""


@dataclass(frozen=True)
class SaliencyMap:
    """Per-pixel saliency in [0, 1] at the input image's resolution."""

    values: np.ndarray  # (H, W) float64 in [0, 1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def validate(self) -> None:
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"saliency map must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("saliency map contains non-finite values")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("saliency map values must lie in [0, 1]")


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Affinely rescale to [0, 1]; a (near-)constant input maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo
    if span <= DEGENERATE_RANGE * max(1.0, abs(lo), abs(hi)):
        return np.zeros_like(values)
    return (values - lo) / span


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check an (H, W, 3) uint8 RGB array against the input-image contract."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB array, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected 8-bit RGB, got dtype {img.dtype}")
    h, w = img.shape[:2]
    if h < 8 or w < 8:
        raise ValueError(f"image must be at least 8x8, got {w}x{h}")
    return img
