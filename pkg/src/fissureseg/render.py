"""PNG overlay renders of volume slices.

The slice is windowed to grayscale over its own min/max; segmentation-only
pixels are painted green, reference-only pixels yellow, and their overlap
purple.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import InputError
from .volume import BinaryVolume, ScalarVolume, ViewAxis, require_same_geometry

GREEN = (0, 255, 0)
YELLOW = (255, 255, 0)
PURPLE = (160, 32, 240)


def compose_overlay(gray_slice: np.ndarray, mask_slice=None, gt_slice=None) -> np.ndarray:
    """(rows, cols, 3) uint8 image of a grayscale slice with overlays."""
    g = np.asarray(gray_slice, dtype=np.float64)
    lo, hi = float(g.min()), float(g.max())
    if hi > lo:
        g = (g - lo) / (hi - lo) * 255.0
    else:
        g = np.zeros_like(g)
    rgb = np.repeat(np.round(g).astype(np.uint8)[..., None], 3, axis=2)
    mask = np.zeros(g.shape, bool) if mask_slice is None else np.asarray(mask_slice, bool)
    gt = np.zeros(g.shape, bool) if gt_slice is None else np.asarray(gt_slice, bool)
    rgb[mask & ~gt] = GREEN
    rgb[gt & ~mask] = YELLOW
    rgb[mask & gt] = PURPLE
    return rgb


def render_overlay(volume: ScalarVolume, mask: BinaryVolume | None,
                   gt: BinaryVolume | None, axis: ViewAxis, index: int,
                   out_png: str) -> None:
    """Write one overlaid slice as a PNG file."""
    for other in (mask, gt):
        if other is not None:
            require_same_geometry(volume, other, "volume and overlay")
    n = volume.data.shape[axis.array_axis]
    if not 0 <= index < n:
        raise InputError(f"slice {index} out of range [0, {n}) for {axis.value}")
    rgb = compose_overlay(
        volume.slice_2d(axis, index),
        None if mask is None else mask.slice_2d(axis, index),
        None if gt is None else gt.slice_2d(axis, index),
    )
    Image.fromarray(rgb, mode="RGB").save(out_png, format="PNG")


__all__ = ["GREEN", "YELLOW", "PURPLE", "compose_overlay", "render_overlay"]
