"""Euler characteristic of voxel objects and topology-preserving 3D thinning.

A binary volume is treated as the union of closed unit cubes, one per true
voxel, which matches 26-connectivity of the foreground. Its Euler
characteristic equals v - e + f - t over the distinct vertices, edges, square
faces and cubes of that complex, and also equals objects - tunnels + cavities.

Thinning iteratively deletes border voxels from the six face directions in a
fixed order (U, D, N, S, E, W). A voxel may be deleted only when deletion
leaves the Euler characteristic unchanged (checked on the 3x3x3 neighborhood,
where all affected cells live) and leaves its foreground neighbors in a
single 26-connected piece, so objects, tunnels and cavities are preserved.
Arc endpoints (exactly one neighbor) are kept. Candidates are detected in
parallel per sub-iteration and deleted in a sequential scan-order pass that
re-validates both conditions whenever an earlier deletion touched the
neighborhood, which keeps the result independent of any parallel schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np


def euler_characteristic(mask: np.ndarray) -> int:
    """v - e + f - t of the cubical complex induced by the true voxels."""
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 3:
        raise ValueError(f"expected a 3D mask, got ndim={m.ndim}")
    if not m.any():
        return 0
    p = np.pad(m, 1)
    z, y, x = m.shape

    def present(spans: tuple[bool, bool, bool]) -> int:
        # A cell is present when any incident cube is: cubes share the cell's
        # coordinate on span axes and sit at g-1/g on grid axes.
        out = None
        sizes = [n if s else n + 1 for s, n in zip(spans, (z, y, x))]
        for dz in (1,) if spans[0] else (0, 1):
            for dy in (1,) if spans[1] else (0, 1):
                for dx in (1,) if spans[2] else (0, 1):
                    view = p[dz:dz + sizes[0], dy:dy + sizes[1], dx:dx + sizes[2]]
                    out = view.copy() if out is None else (out | view)
        return int(out.sum())

    v = present((False, False, False))
    e = sum(present(tuple(ax == i for ax in range(3))) for i in range(3))
    f = sum(present(tuple(ax != i for ax in range(3))) for i in range(3))
    t = int(m.sum())
    return v - e + f - t


# ---------------------------------------------------------------------------
# Local 3x3x3 machinery. Cells are the 27 cubes indexed (dz+1)*9+(dy+1)*3+(dx+1);
# index 13 is the voxel under test.

_CENTER = 13


def _build_incidence() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cube_index = {(cz, cy, cx): (cz * 3 + cy) * 3 + cx
                  for cz, cy, cx in product(range(3), repeat=3)}

    def incidence(spans: tuple[bool, bool, bool]) -> np.ndarray:
        ranges = [range(3) if s else range(4) for s in spans]
        rows = []
        for pos in product(*ranges):
            row = np.zeros(27, dtype=np.uint8)
            cube_ranges = [(c,) if s else tuple(q for q in (c - 1, c) if 0 <= q < 3)
                           for s, c in zip(spans, pos)]
            for cube in product(*cube_ranges):
                row[cube_index[cube]] = 1
            rows.append(row)
        return np.array(rows, dtype=np.uint8)

    verts = incidence((False, False, False))
    edges = np.concatenate([incidence(tuple(ax == i for ax in range(3)))
                            for i in range(3)])
    faces = np.concatenate([incidence(tuple(ax != i for ax in range(3)))
                            for i in range(3)])
    return verts, edges, faces


_V_INC, _E_INC, _F_INC = _build_incidence()
_V_T = _V_INC.T.astype(np.float32)
_E_T = _E_INC.T.astype(np.float32)
_F_T = _F_INC.T.astype(np.float32)

# 26-adjacency among the non-center cells (paths may not run through the
# center, which is the voxel being deleted).
_NBR_CELLS = [i for i in range(27) if i != _CENTER]
_CELL_POS = [((i // 9) - 1, (i // 3) % 3 - 1, i % 3 - 1) for i in range(27)]


def _build_adjacency() -> np.ndarray:
    adj = []
    for a in _NBR_CELLS:
        za, ya, xa = _CELL_POS[a]
        row = []
        for bi, b in enumerate(_NBR_CELLS):
            if a == b:
                continue
            zb, yb, xb = _CELL_POS[b]
            if max(abs(za - zb), abs(ya - yb), abs(xa - xb)) <= 1:
                row.append(bi)
        adj.append(row)
    width = max(len(r) for r in adj)
    padded = np.array([[r[i] if i < len(r) else ai for i in range(width)]
                       for ai, r in enumerate(adj)], dtype=np.int64)
    return padded


_ADJ_PAD = _build_adjacency()
_BG_LABEL = 26


def _local_chi(cfg: np.ndarray) -> np.ndarray:
    """Euler characteristic of each (k, 27) local configuration."""
    cfg_f = cfg.astype(np.float32)
    v = np.count_nonzero(cfg_f @ _V_T > 0.5, axis=1)
    e = np.count_nonzero(cfg_f @ _E_T > 0.5, axis=1)
    f = np.count_nonzero(cfg_f @ _F_T > 0.5, axis=1)
    t = cfg.sum(axis=1)
    return v - e + f - t


def _euler_invariant(cfg: np.ndarray) -> np.ndarray:
    """True where deleting the center voxel keeps the Euler characteristic.

    Cells affected by the deletion are all incident to the center cube and
    therefore live inside the 3x3x3 block, so the local change equals the
    global one.
    """
    without = cfg.copy()
    without[:, _CENTER] = False
    return _local_chi(cfg) == _local_chi(without)


def _neighbors_connected(cfg: np.ndarray) -> np.ndarray:
    """True where the foreground 26-neighbors form exactly one 26-connected
    component (excluding the center)."""
    fg = cfg[:, _NBR_CELLS]
    labels = np.where(fg, np.arange(26, dtype=np.int64), _BG_LABEL)
    while True:
        gathered = labels[:, _ADJ_PAD].min(axis=2)
        new = np.minimum(labels, gathered)
        new[~fg] = _BG_LABEL
        if np.array_equal(new, labels):
            break
        labels = new
    roots = (labels == np.arange(26)) & fg
    return roots.sum(axis=1) == 1


def _deletable(cfg: np.ndarray) -> np.ndarray:
    return _euler_invariant(cfg) & _neighbors_connected(cfg)


@dataclass
class SkeletonVolume:
    """A thinning result: the skeleton mask plus any branch-point voxels
    removed from it later (recorded so they can be re-added)."""

    skeleton: np.ndarray
    removed_branch_points: np.ndarray = field(
        default_factory=lambda: np.empty((0, 3), dtype=np.int64))


# Sub-iteration directions in (dz, dy, dx), fixed order U, D, N, S, E, W.
_DIRECTIONS = [(1, 0, 0), (-1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, 1), (0, 0, -1)]


def skeletonize_3d(q: np.ndarray) -> SkeletonVolume:
    """Thin a binary volume to its skeleton; see the module docstring.

    The output is a subset of the input with identical Euler characteristic
    and 26-component structure; re-thinning a skeleton returns it unchanged.
    """
    mask = np.asarray(q, dtype=bool)
    if mask.ndim != 3:
        raise ValueError(f"expected a 3D mask, got ndim={mask.ndim}")
    if not mask.any():
        return SkeletonVolume(skeleton=mask.copy())

    img = np.pad(mask, 1).astype(np.uint8)
    zp, yp, xp = img.shape
    flat = img.ravel()
    off27 = np.array([(dz * yp + dy) * xp + dx
                      for dz, dy, dx in product((-1, 0, 1), repeat=3)],
                     dtype=np.int64)
    nbr_offsets = off27[np.arange(27) != _CENTER]
    touched = np.zeros(flat.shape, dtype=bool)

    z, y, x = mask.shape
    changed = True
    while changed:
        changed = False
        for dz, dy, dx in _DIRECTIONS:
            core = img[1:-1, 1:-1, 1:-1]
            ahead = img[1 + dz:1 + dz + z, 1 + dy:1 + dy + y, 1 + dx:1 + dx + x]
            border = (core == 1) & (ahead == 0)
            coords = np.argwhere(border)
            if coords.size == 0:
                continue
            lin = ((coords[:, 0] + 1) * yp + coords[:, 1] + 1) * xp + coords[:, 2] + 1
            cfg = flat[lin[:, None] + off27[None, :]].astype(bool)
            not_endpoint = cfg.sum(axis=1) >= 3  # center plus at least 2 neighbors
            lin = lin[not_endpoint]
            if lin.size == 0:
                continue
            cfg = cfg[not_endpoint]
            lin = lin[_deletable(cfg)]

            # Sequential pass in scan order. A candidate whose neighborhood
            # was modified by an earlier deletion gets fully re-validated.
            deleted = []
            for p in lin:
                if touched[p + nbr_offsets].any():
                    cfg_p = flat[p + off27][None, :].astype(bool)
                    if cfg_p[0].sum() < 3 or not _deletable(cfg_p)[0]:
                        continue
                flat[p] = 0
                touched[p] = True
                deleted.append(p)
                changed = True
            if deleted:
                # Markers only need to flag deletions within one scan.
                touched[np.array(deleted)] = False

    return SkeletonVolume(skeleton=img[1:-1, 1:-1, 1:-1].astype(bool))


__all__ = ["euler_characteristic", "skeletonize_3d", "SkeletonVolume"]
