"""3D volume containers with physical voxel spacing.

Arrays are stored in ``(z, y, x)`` index order so that the flat C-order
buffer is x-fastest, which matches the on-disk raw layout used by the
MetaImage reader/writer. Volumes are immutable after construction: the
underlying numpy buffer is marked read-only so any number of readers can
share one instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InputError


class ViewAxis(Enum):
    """Cross-section family of a volume.

    sagittal = slices of constant x, coronal = constant y, axial = constant z.
    """

    SAGITTAL = "sagittal"
    AXIAL = "axial"
    CORONAL = "coronal"

    @property
    def array_axis(self) -> int:
        """Index into the (z, y, x) data array that the slice position fixes."""
        return {ViewAxis.SAGITTAL: 2, ViewAxis.CORONAL: 1, ViewAxis.AXIAL: 0}[self]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _check_geometry(data: np.ndarray, spacing: tuple[float, float, float]) -> None:
    if data.ndim != 3:
        raise InputError(f"volume data must be 3D, got ndim={data.ndim}")
    if min(data.shape) < 1:
        raise InputError(f"volume dims must all be positive, got {data.shape[::-1]}")
    if len(spacing) != 3:
        raise InputError("spacing must have three components")
    if not all(np.isfinite(s) and s > 0 for s in spacing):
        raise InputError(f"spacing components must be finite and > 0, got {spacing}")


@dataclass(frozen=True)
class ScalarVolume:
    """A 3D grid of float32 intensities with voxel spacing in mm.

    ``data`` has shape (nz, ny, nx); ``spacing`` is (sx, sy, sz).
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        _check_geometry(self.data, self.spacing)
        data = self.data.astype(np.float32, copy=False)
        if not np.all(np.isfinite(data)):
            raise InputError("volume intensities must be finite")
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        """(nx, ny, nz) voxel counts."""
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    def slice_2d(self, axis: ViewAxis, index: int) -> np.ndarray:
        return slice_2d(self.data, axis, index)


@dataclass(frozen=True)
class BinaryVolume:
    """A 3D boolean mask with the same geometry conventions as ScalarVolume."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        _check_geometry(self.data, self.spacing)
        object.__setattr__(self, "data", _freeze(self.data.astype(bool, copy=False)))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    def slice_2d(self, axis: ViewAxis, index: int) -> np.ndarray:
        return slice_2d(self.data, axis, index)

    def with_data(self, data: np.ndarray) -> "BinaryVolume":
        """New mask with the same geometry and different voxels."""
        return BinaryVolume(data, self.spacing)


Volume = ScalarVolume | BinaryVolume


def same_geometry(a: Volume, b: Volume) -> bool:
    return a.data.shape == b.data.shape and a.spacing == b.spacing


def require_same_geometry(a: Volume, b: Volume, what: str = "volumes") -> None:
    if not same_geometry(a, b):
        raise InputError(
            f"{what} must share dims and spacing: "
            f"{a.dims}/{a.spacing} vs {b.dims}/{b.spacing}"
        )


def slice_2d(data: np.ndarray, axis: ViewAxis, index: int) -> np.ndarray:
    """Extract one 2D cross-section along a view axis.

    Row/column layout per view: sagittal -> (z, y), coronal -> (z, x),
    axial -> (y, x).
    """
    n = data.shape[axis.array_axis]
    if not 0 <= index < n:
        raise InputError(f"slice index {index} out of range [0, {n}) for {axis.value}")
    if axis is ViewAxis.SAGITTAL:
        return data[:, :, index]
    if axis is ViewAxis.CORONAL:
        return data[:, index, :]
    return data[index, :, :]


def stack_for_view(data: np.ndarray, axis: ViewAxis) -> np.ndarray:
    """All slices of a view as a (n_slices, rows, cols) stack (a view, no copy)."""
    if axis is ViewAxis.SAGITTAL:
        return np.moveaxis(data, 2, 0)
    if axis is ViewAxis.CORONAL:
        return np.moveaxis(data, 1, 0)
    return data


def unstack_from_view(stack: np.ndarray, axis: ViewAxis) -> np.ndarray:
    """Inverse of stack_for_view; returns a contiguous (z, y, x) array."""
    if axis is ViewAxis.SAGITTAL:
        return np.ascontiguousarray(np.moveaxis(stack, 0, 2))
    if axis is ViewAxis.CORONAL:
        return np.ascontiguousarray(np.moveaxis(stack, 0, 1))
    return np.ascontiguousarray(stack)


def apply_mask(v: ScalarVolume, m: BinaryVolume, fill: float = -1000.0) -> ScalarVolume:
    """Restrict a volume to a mask: keep intensities where the mask is true,
    replace everything else with ``fill``.

    The default fill of -1000 (air in HU terms) keeps masked-out regions from
    producing positive stick differentials against real tissue.
    """
    require_same_geometry(v, m, "volume and mask")
    out = np.where(m.data, v.data, np.float32(fill))
    return ScalarVolume(out, v.spacing)


__all__ = [
    "ViewAxis",
    "ScalarVolume",
    "BinaryVolume",
    "Volume",
    "apply_mask",
    "slice_2d",
    "stack_for_view",
    "unstack_from_view",
    "same_geometry",
    "require_same_geometry",
]
