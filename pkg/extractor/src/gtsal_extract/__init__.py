"""Feature-tensor and object-proposal exporters feeding the gtsal detector."""

from .features import ExportJob, ModelLoadError, build_model, export_features, extract_features
from .proposals import export_proposals, generate_masks

__all__ = [
    "ExportJob",
    "ModelLoadError",
    "build_model",
    "export_features",
    "extract_features",
    "export_proposals",
    "generate_masks",
]

__version__ = "0.1.0"
