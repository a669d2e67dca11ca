"""Orientation-partition selection of planar candidates.

The thresholded orientation field is split into overlapping angular
sub-regions. Within each sub-region, 2D components whose member orientations
stray outside the sub-region's range are dropped, small 3D components are
discarded, and the per-bin survivors are unioned; the three views' results
are unioned last. Flat structures keep a narrow orientation spread and
survive whole inside some bin, while twisting structures fragment across
bins and fall below the size floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .components import ComponentTable, structure_3d_26, structure_in_plane
from .errors import InputError
from .stickfilter import OrientationField
from .volume import ViewAxis


@dataclass(frozen=True)
class PreprocessParams:
    """n_bins: number of overlapping orientation sub-regions.
    min_3d_component: voxel floor for per-bin 3D components.
    curvature_tolerance: fraction of a 2D component's voxels whose orientation
    must lie inside the bin (1.0 = all of them)."""

    n_bins: int = 8
    min_3d_component: int = 200
    curvature_tolerance: float = 1.0

    def __post_init__(self):
        if self.n_bins < 2:
            raise InputError(f"need at least 2 orientation bins, got {self.n_bins}")
        if self.min_3d_component < 1:
            raise InputError("min_3d_component must be >= 1")
        if not 0.0 < self.curvature_tolerance <= 1.0:
            raise InputError("curvature_tolerance must be in (0, 1]")


@dataclass(frozen=True)
class OrientationBin:
    """Angular sub-region i of n (1-based), of width 2*(180/n) degrees
    starting at (i-1)*(180/n), wrapping modulo 180.

    Membership is half-open [start, start + width) so the n bins cover
    [0, 180) exactly twice; angles on a step boundary belong to exactly two
    bins rather than three.
    """

    index: int
    n_bins: int = 8

    def __post_init__(self):
        if not 1 <= self.index <= self.n_bins:
            raise InputError(f"bin index {self.index} outside 1..{self.n_bins}")

    @property
    def step_deg(self) -> float:
        return 180.0 / self.n_bins

    @property
    def start_deg(self) -> float:
        return (self.index - 1) * self.step_deg

    @property
    def width_deg(self) -> float:
        return 2.0 * self.step_deg

    @property
    def range_deg(self) -> tuple[float, float]:
        """(start, end) with end reduced modulo 180 (wrapping bins end small)."""
        return (self.start_deg, (self.start_deg + self.width_deg) % 180.0)

    def contains(self, theta_deg) -> np.ndarray:
        """Membership of axial angles (degrees, interpreted modulo 180)."""
        t = np.asarray(theta_deg, dtype=np.float64)
        return np.mod(t - self.start_deg, 180.0) < self.width_deg


def all_bins(p: PreprocessParams) -> list[OrientationBin]:
    return [OrientationBin(i, p.n_bins) for i in range(1, p.n_bins + 1)]


def partition(field: OrientationField, view: ViewAxis,
              bin_: OrientationBin) -> np.ndarray:
    """Voxels whose orientation vector is nonzero and whose best angle for
    this view falls inside the bin."""
    return field.nonzero & bin_.contains(field.theta[view])


def curvature_filter_2d(binmask: np.ndarray, field: OrientationField,
                        view: ViewAxis, bin_: OrientationBin,
                        p: PreprocessParams) -> np.ndarray:
    """Drop 2D components whose member orientations leave the bin's range.

    Components are 8-connected within each slice along the view axis. A
    component survives when at least ``curvature_tolerance`` of its voxels
    have their best angle inside the bin; at the default tolerance of 1.0
    a single stray voxel removes the whole component.
    """
    table = ComponentTable.from_mask(binmask, structure_in_plane(view.array_axis))
    if table.n_components == 0:
        return np.zeros(binmask.shape, dtype=bool)
    in_bin = bin_.contains(field.theta[view])
    hits = np.bincount(table.labels[binmask & in_bin].ravel(),
                       minlength=table.n_components + 1)
    frac = hits / np.maximum(table.sizes, 1)
    keep = frac >= p.curvature_tolerance
    keep[0] = False
    return keep[table.labels]


def planar_filter_3d(binmask: np.ndarray, p: PreprocessParams) -> np.ndarray:
    """Keep 26-connected 3D components with at least min_3d_component voxels."""
    table = ComponentTable.from_mask(binmask, structure_3d_26())
    return table.filter_by_size(p.min_3d_component)


def integrate_bins(masks: list[np.ndarray]) -> np.ndarray:
    """Voxelwise OR across per-bin candidate masks."""
    if not masks:
        raise InputError("integrate_bins needs at least one mask")
    shape = masks[0].shape
    out = np.zeros(shape, dtype=bool)
    for m in masks:
        if m.shape != shape:
            raise InputError("bin masks must share dims")
        out |= m
    return out


def integrate_views(m_s: np.ndarray, m_a: np.ndarray, m_c: np.ndarray) -> np.ndarray:
    """Voxelwise OR of the sagittal, axial and coronal detections."""
    return integrate_bins([m_s, m_a, m_c])


def detect_view(field: OrientationField, view: ViewAxis,
                p: PreprocessParams) -> np.ndarray:
    """Full per-view chain: partition -> orientation-consistency filter ->
    3D size filter, then union over all bins."""
    per_bin = []
    for bin_ in all_bins(p):
        m = partition(field, view, bin_)
        m = curvature_filter_2d(m, field, view, bin_, p)
        m = planar_filter_3d(m, p)
        per_bin.append(m)
    return integrate_bins(per_bin)


__all__ = [
    "PreprocessParams",
    "OrientationBin",
    "all_bins",
    "partition",
    "curvature_filter_2d",
    "planar_filter_3d",
    "integrate_bins",
    "integrate_views",
    "detect_view",
]
