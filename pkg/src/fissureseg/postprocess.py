"""Skeleton-based separation of planar sheets from tubular clutter.

The candidate patch is first cleaned per sagittal slice with an ellipse-axis
shape measure (near-isotropic cross-sections are tubular and removed). The
cleaned volume is thinned, branch points are removed so that branching tubes
fall apart into short fragments while sheet skeletons stay large, fragments
below a size floor become clutter, removed branch points adjacent to kept
skeleton are put back, thickness is restored by competitive flooding inside
the cleaned volume, and finally small leftovers adjacent to the sheets are
merged back in while large residual objects are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import ndimage

from .components import ComponentTable, structure_3d_26, structure_in_plane
from .errors import InputError
from .topology import SkeletonVolume
from .volume import ViewAxis


@dataclass(frozen=True)
class PostprocessParams:
    """shape_ratio_threshold: minor/major axis ratio at and above which a 2D
    component counts as tubular and is removed.
    skel_min_component: minimum size of a pruned-skeleton component kept as
    sheet candidate.
    repair_big_threshold: residual components at least this large are treated
    as clutter objects and excluded from repair.
    final_min_component: size floor for the final selection."""

    shape_ratio_threshold: float = 0.5
    skel_min_component: int = 50
    repair_big_threshold: int = 500
    final_min_component: int = 100

    def __post_init__(self):
        if not 0.0 < self.shape_ratio_threshold <= 1.0:
            raise InputError("shape_ratio_threshold must be in (0, 1]")
        for name in ("skel_min_component", "repair_big_threshold",
                     "final_min_component"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1")


@dataclass(frozen=True)
class ShapeStats:
    """Ellipse-axis statistics of one 2D component: major axis H, minor axis
    W (4 * sqrt of the coordinate-covariance eigenvalues) and voxel count."""

    major: float
    minor: float
    count: int

    @property
    def ratio(self) -> float:
        """minor/major; defined as 1.0 for degenerate (single-pixel) shapes
        so they always classify as isotropic."""
        return self.minor / self.major if self.major > 0 else 1.0


def _component_axis_ratios(table: ComponentTable, mask: np.ndarray,
                           rows: np.ndarray, cols: np.ndarray):
    """Per-label (major, minor) ellipse axes from second central moments."""
    n = table.n_components
    lab = table.labels[mask]
    cnt = np.maximum(table.sizes[1:n + 1], 1).astype(np.float64)
    r = rows[mask].astype(np.float64)
    c = cols[mask].astype(np.float64)
    s_r = np.bincount(lab, weights=r, minlength=n + 1)[1:]
    s_c = np.bincount(lab, weights=c, minlength=n + 1)[1:]
    s_rr = np.bincount(lab, weights=r * r, minlength=n + 1)[1:]
    s_cc = np.bincount(lab, weights=c * c, minlength=n + 1)[1:]
    s_rc = np.bincount(lab, weights=r * c, minlength=n + 1)[1:]
    m_r = s_r / cnt
    m_c = s_c / cnt
    v_rr = s_rr / cnt - m_r * m_r
    v_cc = s_cc / cnt - m_c * m_c
    v_rc = s_rc / cnt - m_r * m_c
    mean = 0.5 * (v_rr + v_cc)
    spread = np.sqrt(np.clip(0.25 * (v_rr - v_cc) ** 2 + v_rc * v_rc, 0.0, None))
    hi = np.clip(mean + spread, 0.0, None)
    lo = np.clip(mean - spread, 0.0, None)
    return 4.0 * np.sqrt(hi), 4.0 * np.sqrt(lo)


def shape_stats_2d(mask2d: np.ndarray) -> list[ShapeStats]:
    """ShapeStats for every 8-connected component of one 2D mask."""
    mask2d = np.asarray(mask2d, dtype=bool)
    table = ComponentTable.from_mask(mask2d, np.ones((3, 3), dtype=bool))
    if table.n_components == 0:
        return []
    rr, cc = np.indices(mask2d.shape)
    major, minor = _component_axis_ratios(table, mask2d, rr, cc)
    return [ShapeStats(major=float(h), minor=float(w), count=int(s))
            for h, w, s in zip(major, minor, table.sizes[1:])]


def shape_measure_filter(patch: np.ndarray, p: PostprocessParams) -> np.ndarray:
    """Remove tubular cross-sections per sagittal slice.

    Components whose minor/major ellipse-axis ratio is >= the threshold are
    near-isotropic (tube cross-sections, blobs) and removed; elongated
    profiles survive. Single-pixel components are always removed. Sheets cut
    by sagittal slices appear as long thin traces, so they pass.
    """
    patch = np.asarray(patch, dtype=bool)
    table = ComponentTable.from_mask(
        patch, structure_in_plane(ViewAxis.SAGITTAL.array_axis))
    if table.n_components == 0:
        return np.zeros(patch.shape, dtype=bool)
    # In-plane coordinates of a sagittal slice are (z, y).
    zz, yy, _ = np.indices(patch.shape)
    major, minor = _component_axis_ratios(table, patch, zz, yy)
    ratio = np.where(major > 0, minor / np.where(major > 0, major, 1.0), 1.0)
    keep = np.concatenate([[False], ratio < p.shape_ratio_threshold])
    return keep[table.labels]


def _neighborhood_counts(mask: np.ndarray) -> np.ndarray:
    """Number of true voxels in each voxel's closed 3x3x3 neighborhood."""
    padded = np.pad(mask, 1).astype(np.uint8)
    z, y, x = mask.shape
    counts = np.zeros(mask.shape, dtype=np.int16)
    for dz, dy, dx in product((0, 1, 2), repeat=3):
        counts += padded[dz:dz + z, dy:dy + y, dx:dx + x]
    return counts


def remove_branch_points(sk: SkeletonVolume) -> SkeletonVolume:
    """Flag and delete skeleton voxels with four or more skeleton voxels in
    their closed 26-neighborhood (themselves included).

    Interior voxels of a 1-voxel arc count three (themselves plus two), so
    arcs survive while junctions of three or more arms are removed. All
    branch points are identified on the input skeleton first and removed
    simultaneously, so the result does not depend on enumeration order.
    Removed coordinates are recorded for later hole filling.
    """
    skel = sk.skeleton
    counts = _neighborhood_counts(skel)
    flagged = skel & (counts >= 4)
    return SkeletonVolume(skeleton=skel & ~flagged,
                          removed_branch_points=np.argwhere(flagged))


def select_candidates(sk: SkeletonVolume, p: PostprocessParams) -> np.ndarray:
    """Keep 26-connected pruned-skeleton components of at least
    skel_min_component voxels; the rest is clutter."""
    table = ComponentTable.from_mask(sk.skeleton, structure_3d_26())
    return table.filter_by_size(p.skel_min_component)


def fill_holes(candidate: np.ndarray, sk: SkeletonVolume) -> np.ndarray:
    """Re-add removed branch points that touch the kept skeleton.

    A re-added point can connect further branch points, so this iterates to
    a fixed point. Branch points whose arms were all discarded stay out.
    """
    out = np.asarray(candidate, dtype=bool).copy()
    points = sk.removed_branch_points
    if len(points) == 0:
        return out
    pending = np.ones(len(points), dtype=bool)
    struct = structure_3d_26()
    while pending.any():
        adjacent = ndimage.binary_dilation(out, structure=struct)
        hit = pending & adjacent[tuple(points.T)]
        if not hit.any():
            break
        out[tuple(points[hit].T)] = True
        pending &= ~hit
    return out


def restore_thickness(q: np.ndarray, fissure_skel: np.ndarray,
                      clutter_skel: np.ndarray) -> np.ndarray:
    """Grow the two skeleton classes back to full thickness inside ``q``.

    Both seed sets flood simultaneously through 26-connectivity; each voxel
    of ``q`` takes the class whose front reaches it first, with the sheet
    class winning ties. Voxels unreachable from any seed stay clutter.
    Returns the sheet-labeled subset of ``q``.
    """
    q = np.asarray(q, dtype=bool)
    front_f = np.asarray(fissure_skel, dtype=bool)
    front_c = np.asarray(clutter_skel, dtype=bool) & ~front_f
    if (front_f & ~q).any() or (front_c & ~q).any():
        raise InputError("skeleton seeds must lie inside the candidate volume")
    label_f = front_f.copy()
    assigned = front_f | front_c
    struct = structure_3d_26()
    while front_f.any() or front_c.any():
        grow_f = ndimage.binary_dilation(front_f, structure=struct) & q & ~assigned
        assigned |= grow_f
        grow_c = ndimage.binary_dilation(front_c, structure=struct) & q & ~assigned
        assigned |= grow_c
        label_f |= grow_f
        front_f, front_c = grow_f, grow_c
    return label_f


def repair_fissures(q: np.ndarray, q_s: np.ndarray,
                    p: PostprocessParams) -> np.ndarray:
    """Merge small residual fragments back into the sheets and drop large
    residual objects, then apply the final size floor.

    The residue q - q_s is split into 26-components; components of at least
    repair_big_threshold voxels are clutter objects and excluded, smaller
    ones are unioned with q_s (they are typically sheet pieces that lost
    their skeleton seed). Final components below final_min_component voxels
    are dropped.
    """
    q = np.asarray(q, dtype=bool)
    q_s = np.asarray(q_s, dtype=bool)
    if (q_s & ~q).any():
        raise InputError("segmented sheet must be a subset of the candidate volume")
    residue = q & ~q_s
    table = ComponentTable.from_mask(residue, structure_3d_26())
    big = table.filter_by_size(p.repair_big_threshold)
    merged = (residue & ~big) | q_s
    final = ComponentTable.from_mask(merged, structure_3d_26())
    return final.filter_by_size(p.final_min_component)


__all__ = [
    "PostprocessParams",
    "ShapeStats",
    "shape_stats_2d",
    "shape_measure_filter",
    "remove_branch_points",
    "select_candidates",
    "fill_holes",
    "restore_thickness",
    "repair_fissures",
]
