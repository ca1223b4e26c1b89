"""Class-agnostic object-proposal masks as manifest + binary PNGs.

Proposals come from graph-based segmentation (Felzenszwalb) at a few
parameter settings; each resulting segment inside a sane size band becomes
one 0/255 mask PNG at image resolution. The manifest JSON next to the masks
is ``{"masks": ["m0.png", ...]}``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image
from skimage.segmentation import felzenszwalb

# (scale, sigma, min_size) settings swept per image.
_SETTINGS = ((50, 0.6, 20), (150, 0.8, 40), (400, 0.8, 80))
_MIN_AREA_FRACTION = 0.01
_MAX_AREA_FRACTION = 0.75


def generate_masks(image: np.ndarray, max_count: int) -> list[np.ndarray]:
    """Up to max_count boolean masks, largest segments first, deduplicated."""
    if max_count <= 0:
        return []
    h, w = image.shape[:2]
    area = h * w
    candidates: list[np.ndarray] = []
    seen: set[bytes] = set()
    for scale, sigma, min_size in _SETTINGS:
        segments = felzenszwalb(image, scale=scale, sigma=sigma, min_size=min_size)
        for value in np.unique(segments):
            mask = segments == value
            size = int(mask.sum())
            if not _MIN_AREA_FRACTION * area <= size <= _MAX_AREA_FRACTION * area:
                continue
            key = np.packbits(mask).tobytes()
            if key in seen:
                continue
            seen.add(key)
            candidates.append(mask)
    candidates.sort(key=lambda m: -int(m.sum()))
    return candidates[:max_count]


def export_proposals(
    image_paths: list[str], out_dir: str | Path, max_count: int
) -> list[Path]:
    """Write per-image mask directories with manifests; returns manifest paths."""
    out_root = Path(out_dir)
    manifests = []
    for image_path in image_paths:
        with Image.open(image_path) as im:
            rgb = np.asarray(im.convert("RGB"))
        masks = generate_masks(rgb, max_count)
        target = out_root / Path(image_path).stem
        target.mkdir(parents=True, exist_ok=True)
        names = []
        for i, mask in enumerate(masks):
            name = f"m{i}.png"
            data = np.where(mask, 255, 0).astype(np.uint8)
            Image.fromarray(data, mode="L").save(target / name, format="PNG")
            names.append(name)
        manifest = target / "manifest.json"
        manifest.write_text(json.dumps({"masks": names}))
        manifests.append(manifest)
    return manifests
