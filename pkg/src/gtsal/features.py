"""Per-superpixel feature vectors and pairwise affinity matrices.

Two feature spaces describe each superpixel: a 512-bin Lab color histogram
(8x8x8 uniform partition of L in [0,100], a and b in [-128,127]) and a
pooled dense feature vector (channel-wise mean over the superpixel of a
feature tensor bilinearly resized to image resolution, then scaled to unit
Euclidean norm). Affinities are Gaussian kernels: on squared Euclidean
distance for pooled features, on the symmetric chi-square distance for
histograms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .segmentation import Segmentation

CHI2_GUARD = 1e-10
HISTOGRAM_BINS = 8

# sRGB -> XYZ (D65, 2-degree observer)
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_POINT = np.array([0.95047, 1.0, 1.08883])


@dataclass(frozen=True)
class FeatureSpace:
    """N feature vectors plus the affinity kind that applies to them."""

    kind: str  # "color" | "deep"
    vectors: np.ndarray  # (N, D) float64
    sigma: float

    def __post_init__(self):
        if self.kind not in ("color", "deep"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.vectors.ndim != 2:
            raise ValueError("feature vectors must form an (N, D) matrix")


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert (H, W, 3) uint8 sRGB to CIE-Lab (D65). L in [0,100]."""
    srgb = np.asarray(img, dtype=np.float64) / 255.0
    linear = np.where(srgb > 0.04045, ((srgb + 0.055) / 1.055) ** 2.4, srgb / 12.92)
    xyz = linear @ _RGB_TO_XYZ.T
    ratio = xyz / _WHITE_POINT
    eps = 216.0 / 24389.0
    kappa = 24389.0 / 27.0
    f = np.where(ratio > eps, np.cbrt(ratio), (kappa * ratio + 16.0) / 116.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def _lab_bin_index(lab: np.ndarray) -> np.ndarray:
    """Flat 0..511 bin index of each pixel's Lab triplet."""
    nb = HISTOGRAM_BINS
    l_idx = np.clip((lab[..., 0] / 100.0 * nb).astype(np.int64), 0, nb - 1)
    a_idx = np.clip(((lab[..., 1] + 128.0) / 255.0 * nb).astype(np.int64), 0, nb - 1)
    b_idx = np.clip(((lab[..., 2] + 128.0) / 255.0 * nb).astype(np.int64), 0, nb - 1)
    return (l_idx * nb + a_idx) * nb + b_idx


def color_histogram(seg: "Segmentation", lab: np.ndarray, sigma: float = 0.1) -> FeatureSpace:
    """Per-superpixel L1-normalized 512-bin Lab histogram."""
    if lab.shape[:2] != seg.labels.shape:
        raise ValueError("Lab image resolution does not match the segmentation")
    nbins = HISTOGRAM_BINS**3
    bins = _lab_bin_index(lab).ravel()
    combined = seg.labels.ravel().astype(np.int64) * nbins + bins
    counts = np.bincount(combined, minlength=seg.n * nbins).reshape(seg.n, nbins)
    hist = counts.astype(np.float64)
    hist /= hist.sum(axis=1, keepdims=True)
    return FeatureSpace(kind="color", vectors=hist, sigma=sigma)


def bilinear_resize(tensor: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (h, w, C) -> (out_h, out_w, C) with half-pixel-centered sampling."""
    tensor = np.asarray(tensor, dtype=np.float64)
    h, w = tensor.shape[:2]
    if (h, w) == (out_h, out_w):
        return tensor.copy()

    def axis_coords(n_in, n_out):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = src - lo
        return lo, hi, frac

    y0, y1, fy = axis_coords(h, out_h)
    x0, x1, fx = axis_coords(w, out_w)
    top = tensor[y0][:, x0] * (1 - fx)[None, :, None] + tensor[y0][:, x1] * fx[None, :, None]
    bottom = tensor[y1][:, x0] * (1 - fx)[None, :, None] + tensor[y1][:, x1] * fx[None, :, None]
    return top * (1 - fy)[:, None, None] + bottom * fy[:, None, None]


def pool_deep_features(seg: "Segmentation", tensor: np.ndarray, sigma: float = 0.1) -> FeatureSpace:
    """Pool a feature tensor to per-superpixel unit-norm mean vectors.

    The tensor is resized to the segmentation's resolution first; pooled
    vectors that come out identically zero are left as zero vectors.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.ndim != 3:
        raise ValueError("feature tensor must be (H, W, C)")
    resized = bilinear_resize(tensor, seg.height, seg.width)
    flat = seg.labels.ravel()
    c = resized.shape[2]
    pooled = np.stack(
        [np.bincount(flat, weights=resized[..., ch].ravel(), minlength=seg.n) for ch in range(c)],
        axis=1,
    )
    pooled /= seg.sizes[:, None].astype(np.float64)
    norms = np.linalg.norm(pooled, axis=1)
    nonzero = norms > 0
    pooled[nonzero] /= norms[nonzero, None]
    return FeatureSpace(kind="deep", vectors=pooled, sigma=sigma)


def chi_square_distances(hists: np.ndarray, block: int = 64) -> np.ndarray:
    """Pairwise symmetric chi-square distance matrix between histogram rows."""
    n = hists.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for start in range(0, n, block):
        stop = min(start + block, n)
        a = hists[start:stop, None, :]
        b = hists[None, :, :]
        num = (a - b) ** 2
        den = a + b + CHI2_GUARD
        out[start:stop] = 0.5 * (num / den).sum(axis=-1)
    return out


def affinity(space: FeatureSpace) -> np.ndarray:
    """Gaussian affinity matrix for one feature space.

    Deep features use squared Euclidean distance, color histograms the
    chi-square distance, both divided by sigma^2 inside the exponential.
    Entries are clamped to stay strictly positive; the diagonal is exactly 1.
    """
    vectors = space.vectors
    if space.kind == "deep":
        sq_norms = (vectors**2).sum(axis=1)
        d = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (vectors @ vectors.T)
        np.maximum(d, 0.0, out=d)
    else:
        d = chi_square_distances(vectors)
    d = 0.5 * (d + d.T)
    a = np.exp(-d / (space.sigma**2))
    np.maximum(a, np.finfo(np.float64).tiny, out=a)
    np.fill_diagonal(a, 1.0)
    return a
