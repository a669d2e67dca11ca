"""Connected-component labeling helpers shared by the selection stages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


def structure_3d_26() -> np.ndarray:
    return np.ones((3, 3, 3), dtype=bool)


def structure_2d_8() -> np.ndarray:
    return np.ones((3, 3), dtype=bool)


def structure_in_plane(array_axis: int) -> np.ndarray:
    """8-connectivity within slices perpendicular to ``array_axis`` and no
    connectivity across them, so one 3D labeling pass labels every slice
    independently."""
    s = np.zeros((3, 3, 3), dtype=bool)
    idx = [slice(None)] * 3
    idx[array_axis] = 1
    s[tuple(idx)] = True
    return s


@dataclass
class ComponentTable:
    """Labeled components of a mask: a label image plus per-label voxel counts.

    Labels run 1..n_components; 0 is background. ``sizes[k]`` is the voxel
    count of label k (``sizes[0]`` counts background).
    """

    labels: np.ndarray
    n_components: int
    sizes: np.ndarray

    @classmethod
    def from_mask(cls, mask: np.ndarray, structure: np.ndarray) -> "ComponentTable":
        labels, n = ndimage.label(mask, structure=structure)
        sizes = np.bincount(labels.ravel(), minlength=n + 1)
        return cls(labels=labels, n_components=n, sizes=sizes)

    def filter_by_size(self, min_size: int) -> np.ndarray:
        """Boolean mask keeping only components with >= min_size voxels."""
        if self.n_components == 0:
            return np.zeros(self.labels.shape, dtype=bool)
        keep = self.sizes >= min_size
        keep[0] = False
        return keep[self.labels]


__all__ = [
    "ComponentTable",
    "structure_3d_26",
    "structure_2d_8",
    "structure_in_plane",
]
