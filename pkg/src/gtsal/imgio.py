"""File I/O: images (PNG, binary PPM), FTNS feature tensors, proposal manifests.

FTNS is the bit-exact feature-tensor container consumed and produced here:
bytes 0-3 are the magic ``FTNS``, bytes 4-15 are three little-endian uint32
values H, W, C, followed by exactly H*W*C IEEE-754 float32 little-endian
values in row-major [row][col][channel] order. No padding, no trailer.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .common import FormatError, validate_image

FTNS_MAGIC = b"FTNS"
_HEADER_LEN = 16


def load_image(path: str | Path) -> np.ndarray:
    """Load an 8-bit RGB image (PNG or binary PPM) as an (H, W, 3) uint8 array."""
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return validate_image(arr)


def save_gray_png(path: str | Path, values01: np.ndarray) -> None:
    """Write a [0, 1] map as 8-bit grayscale PNG with value = round(255 * s)."""
    values01 = np.asarray(values01, dtype=np.float64)
    data = np.rint(np.clip(values01, 0.0, 1.0) * 255.0).astype(np.uint8)
    PILImage.fromarray(data, mode="L").save(path, format="PNG")


def load_gray(path: str | Path) -> np.ndarray:
    """Load an 8-bit grayscale PNG as an (H, W) uint8 array."""
    with PILImage.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def load_binary_mask(path: str | Path) -> np.ndarray:
    """Load a mask PNG; nonzero pixels are members."""
    return load_gray(path) != 0


def write_ftns(path: str | Path, tensor: np.ndarray) -> None:
    """Write an (H, W, C) array as an FTNS file (float32 little-endian)."""
    tensor = np.asarray(tensor)
    if tensor.ndim == 2:
        tensor = tensor[:, :, None]
    if tensor.ndim != 3:
        raise ValueError(f"FTNS tensors are (H, W, C), got shape {tensor.shape}")
    h, w, c = tensor.shape
    if h < 1 or w < 1 or c < 1:
        raise ValueError(f"FTNS dimensions must be positive, got {tensor.shape}")
    data = np.ascontiguousarray(tensor, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise ValueError("FTNS tensors must be finite")
    with open(path, "wb") as f:
        f.write(FTNS_MAGIC)
        f.write(struct.pack("<III", h, w, c))
        f.write(data.tobytes(order="C"))


def read_ftns(path: str | Path) -> np.ndarray:
    """Read an FTNS file into an (H, W, C) float32 array, validating strictly."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != FTNS_MAGIC:
        raise FormatError(f"bad FTNS magic in {path!s}", offset=0)
    if len(raw) < _HEADER_LEN:
        raise FormatError(f"truncated FTNS header in {path!s}", offset=len(raw))
    h, w, c = struct.unpack("<III", raw[4:_HEADER_LEN])
    if h < 1 or w < 1 or c < 1:
        raise FormatError(f"nonpositive FTNS dimensions {h}x{w}x{c} in {path!s}", offset=4)
    expected = _HEADER_LEN + 4 * h * w * c
    if len(raw) != expected:
        raise FormatError(
            f"FTNS payload length mismatch in {path!s}: expected {expected} bytes, got {len(raw)}",
            offset=min(len(raw), expected),
        )
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER_LEN)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.argmax(bad))
        raise FormatError(
            f"non-finite value at element {idx} in {path!s}",
            offset=_HEADER_LEN + 4 * idx,
        )
    return values.reshape(h, w, c).copy()


def export_segmentation(seg, png_path: str | Path) -> None:
    """Debug export: label-mod-256 PNG plus a JSON sidecar with n/centroids/boundary."""
    png_path = Path(png_path)
    data = (seg.labels % 256).astype(np.uint8)
    PILImage.fromarray(data, mode="L").save(png_path, format="PNG")
    sidecar = {
        "n": int(seg.n),
        "centroids": [[float(x), float(y)] for x, y in seg.centroids],
        "boundary": sorted(int(i) for i in np.flatnonzero(seg.boundary)),
    }
    png_path.with_suffix(".json").write_text(json.dumps(sidecar))


def load_proposal_manifest(manifest_path: str | Path) -> list[np.ndarray]:
    """Load object-proposal masks listed in a manifest JSON.

    The manifest is ``{"masks": ["m0.png", ...]}`` with paths resolved
    relative to the manifest's directory; nonzero pixels are members.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid proposal manifest {manifest_path!s}: {exc}") from exc
    if not isinstance(manifest, dict) or "masks" not in manifest or not isinstance(manifest["masks"], list):
        raise FormatError(f'proposal manifest {manifest_path!s} must be {{"masks": [...]}}')
    base = manifest_path.parent
    return [load_binary_mask(base / name) for name in manifest["masks"]]


def write_proposal_manifest(out_dir: str | Path, masks: list[np.ndarray], prefix: str = "m") -> Path:
    """Write masks as 0/255 PNGs plus their manifest JSON; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for i, mask in enumerate(masks):
        name = f"{prefix}{i}.png"
        data = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
        PILImage.fromarray(data, mode="L").save(out_dir / name, format="PNG")
        names.append(name)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps({"masks": names}))
    return manifest_path
