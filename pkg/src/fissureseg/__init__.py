"""Segmentation of thin planar structures in 3D scalar volumes.

The pipeline enhances line-like profiles per cross-section with an oriented
multi-stick filter, fuses the three views into a thresholded orientation
field, selects orientation-consistent planar candidates, and separates
sheets from tubular clutter with a topology-preserving skeleton analysis.
Includes band-tolerance evaluation metrics and synthetic phantoms with
exact ground truth.
"""

from .metaimage import load_binary_volume, load_volume, write_volume
from .metrics import MetricsReport, aggregate, band, score
from .phantom import PhantomSpec, canonical_suite, generate
from .pipeline import PipelineConfig, SegmentResult, load_config, segment
from .stickfilter import FilterParams, OrientationField
from .volume import BinaryVolume, ScalarVolume, ViewAxis, apply_mask

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ScalarVolume",
    "BinaryVolume",
    "ViewAxis",
    "apply_mask",
    "load_volume",
    "load_binary_volume",
    "write_volume",
    "FilterParams",
    "OrientationField",
    "MetricsReport",
    "band",
    "score",
    "aggregate",
    "PhantomSpec",
    "generate",
    "canonical_suite",
    "PipelineConfig",
    "load_config",
    "segment",
    "SegmentResult",
]
