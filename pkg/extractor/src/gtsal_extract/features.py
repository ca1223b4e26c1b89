"""Dense feature extraction from convolutional backbones to FTNS files.

The default backbone is VGG16's conv5 block (the fifth convolutional stage,
taken after its last ReLU), which requires pretrained weights available
locally or downloadable. The ``seeded-conv`` model is a small fixed-seed
convolutional stack that needs no weights; it exists so export pipelines and
round-trip checks run anywhere, not as a quality reference.

Tensors are written at the feature map's native resolution; the consumer
performs the resize to image resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch import nn

from .ftns import write_ftns

MODELS = ("vgg16-conv5", "seeded-conv")

_IMAGENET_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(3, 1, 1)
_IMAGENET_STD = torch.tensor([0.229, 0.224, 0.225]).view(3, 1, 1)


class ModelLoadError(RuntimeError):
    """Weights could not be loaded (missing download, bad file, ...)."""


@dataclass(frozen=True)
class ExportJob:
    images: tuple[str, ...]
    out_dir: str
    model: str = "vgg16-conv5"
    weights: str | None = None  # local state-dict path for vgg16-conv5


def _build_vgg16_conv5(weights_path: str | None) -> nn.Module:
    import torchvision

    vgg = torchvision.models.vgg16(weights=None)
    if weights_path is not None:
        try:
            state = torch.load(weights_path, map_location="cpu", weights_only=True)
        except Exception as exc:
            raise ModelLoadError(f"failed to read weights file {weights_path!r}: {exc}") from exc
        try:
            vgg.load_state_dict(state)
        except RuntimeError as exc:
            raise ModelLoadError(f"weights file {weights_path!r} does not match VGG16: {exc}") from exc
    else:
        try:
            pretrained = torchvision.models.vgg16(
                weights=torchvision.models.VGG16_Weights.IMAGENET1K_V1
            )
        except Exception as exc:
            raise ModelLoadError(
                "could not obtain pretrained VGG16 weights (no local cache and "
                f"download failed: {exc}); pass --weights or use --model seeded-conv"
            ) from exc
        vgg = pretrained
    # Feature stage up to conv5_3 + ReLU (layer 29), before the final pool.
    return nn.Sequential(*list(vgg.features.children())[:30]).eval()


def _build_seeded_conv() -> nn.Module:
    generator = torch.Generator().manual_seed(181)
    layers = []
    channels = [3, 16, 32]
    for cin, cout in zip(channels[:-1], channels[1:]):
        conv = nn.Conv2d(cin, cout, kernel_size=3, stride=2, padding=1)
        with torch.no_grad():
            conv.weight.copy_(torch.randn(conv.weight.shape, generator=generator) * 0.2)
            conv.bias.zero_()
        layers += [conv, nn.ReLU(inplace=True)]
    return nn.Sequential(*layers).eval()


def build_model(name: str, weights: str | None = None) -> nn.Module:
    if name == "vgg16-conv5":
        return _build_vgg16_conv5(weights)
    if name == "seeded-conv":
        return _build_seeded_conv()
    raise ValueError(f"unknown model {name!r}; expected one of {MODELS}")


def _load_image_tensor(path: str | Path) -> torch.Tensor:
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    tensor = torch.from_numpy(rgb).permute(2, 0, 1)
    return (tensor - _IMAGENET_MEAN) / _IMAGENET_STD


def extract_features(model: nn.Module, image_path: str | Path) -> np.ndarray:
    """(H, W, C) float32 feature map at the backbone's native resolution."""
    batch = _load_image_tensor(image_path)[None]
    threads = torch.get_num_threads()
    torch.set_num_threads(1)  # pin for byte-stable outputs
    try:
        with torch.no_grad():
            out = model(batch)[0]
    finally:
        torch.set_num_threads(threads)
    return out.permute(1, 2, 0).contiguous().numpy().astype(np.float32, copy=False)


def export_features(job: ExportJob) -> list[Path]:
    """One FTNS file per image, named after the image stem."""
    model = build_model(job.model, job.weights)
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for image in job.images:
        features = extract_features(model, image)
        target = out_dir / (Path(image).stem + ".ftns")
        write_ftns(target, features)
        written.append(target)
    return written
