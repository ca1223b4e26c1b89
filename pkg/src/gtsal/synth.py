"""Deterministic synthetic test scenes with exact ground truth.

Four desk-scale scenarios: a centered square, an off-center blob, an object
flush against the image border (the case that defeats boundary-seeded
propagation), and a two-object scene. Colors are drawn from the seed; the
geometry is fixed relative to the image size so ground truth is exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

KINDS = ("centered-square", "off-center-blob", "boundary-touching", "two-object")

_FOREGROUNDS = np.array(
    [
        (200, 60, 50),
        (60, 80, 200),
        (40, 160, 70),
        (210, 150, 40),
        (150, 60, 190),
    ],
    dtype=np.int64,
)


def _canvas(size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    gray = int(rng.integers(105, 140))
    img = np.full((size, size, 3), gray, dtype=np.uint8)
    return img, np.zeros((size, size), dtype=bool)


def _foreground_color(rng: np.random.Generator) -> np.ndarray:
    base = _FOREGROUNDS[int(rng.integers(len(_FOREGROUNDS)))]
    jitter = rng.integers(-12, 13, size=3)
    return np.clip(base + jitter, 0, 255).astype(np.uint8)


def _ellipse(size: int, cx: float, cy: float, rx: float, ry: float) -> np.ndarray:
    ys = np.arange(size)[:, None]
    xs = np.arange(size)[None, :]
    return ((xs - cx * size) / (rx * size)) ** 2 + ((ys - cy * size) / (ry * size)) ** 2 <= 1.0


def make_scene(kind: str, size: int = 64, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Return (rgb image, boolean ground truth) for one scenario."""
    if kind not in KINDS:
        raise ValueError(f"unknown scene kind {kind!r}; expected one of {KINDS}")
    if size < 16:
        raise ValueError("scene size must be at least 16")
    rng = np.random.default_rng(seed)
    img, gt = _canvas(size, rng)
    color = _foreground_color(rng)

    if kind == "centered-square":
        half = round(0.1875 * size)
        lo, hi = size // 2 - half, size // 2 + half
        gt[lo:hi, lo:hi] = True
    elif kind == "off-center-blob":
        gt = _ellipse(size, cx=0.36, cy=0.42, rx=0.17, ry=0.14)
    elif kind == "boundary-touching":
        # Flush against the bottom border but reaching past the center, the
        # shape a border-background assumption misclassifies.
        x0, x1 = round(0.375 * size), round(0.625 * size)
        y0 = round(0.28 * size)
        gt[y0:, x0:x1] = True
    else:  # two-object
        gt = _ellipse(size, cx=0.32, cy=0.40, rx=0.13, ry=0.11)
        x0, x1 = round(0.60 * size), round(0.78 * size)
        y0, y1 = round(0.50 * size), round(0.68 * size)
        gt[y0:y1, x0:x1] = True

    img[gt] = color
    return img, gt


def write_scene(kind: str, out_dir: str | Path, size: int = 64, seed: int = 0) -> tuple[Path, Path]:
    """Write `{kind}.png` and `{kind}_gt.png`; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    img, gt = make_scene(kind, size=size, seed=seed)
    img_path = out_dir / f"{kind}.png"
    gt_path = out_dir / f"{kind}_gt.png"
    PILImage.fromarray(img, mode="RGB").save(img_path, format="PNG")
    PILImage.fromarray(np.where(gt, 255, 0).astype(np.uint8), mode="L").save(gt_path, format="PNG")
    return img_path, gt_path


def write_corpus(out_dir: str | Path, size: int = 64, seed: int = 0) -> list[tuple[Path, Path]]:
    """Write all scenarios; each kind's colors derive from seed + its index."""
    return [
        write_scene(kind, out_dir, size=size, seed=seed + i)
        for i, kind in enumerate(KINDS)
    ]
