"""Independent reference implementations used to verify the package.

Everything here evaluates definitions directly (per-sample clamped
addressing, exhaustive distances, flood fill) and deliberately avoids the
padded-window accumulation, scipy labeling and distance-transform routes
used by the implementation.
"""

from collections import deque
from itertools import product

import numpy as np


# --- stick filter ----------------------------------------------------------

def clamped_gather(img, rows, cols):
    r = np.clip(rows, 0, img.shape[0] - 1)
    c = np.clip(cols, 0, img.shape[1] - 1)
    return img[r, c]


def naive_stick_differentials(img, kernel, kappa):
    """Direct evaluation of the three stick differentials: loop over sticks
    and samples, gathering per pixel with clamped coordinates."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    rr, cc = np.indices((h, w))

    def stick_mean(offsets):
        acc = np.zeros((h, w))
        for dx, dy in offsets:
            acc += clamped_gather(img, rr + dy, cc + dx)
        return acc / len(offsets)

    u_m = stick_mean(kernel.offsets_m)
    u_l = stick_mean(kernel.offsets_l)
    u_r = stick_mean(kernel.offsets_r)
    sq = np.zeros((h, w))
    for dx, dy in kernel.offsets_m:
        sq += clamped_gather(img, rr + dy, cc + dx) ** 2
    var = np.clip(sq / len(kernel.offsets_m) - u_m ** 2, 0.0, None)
    lam_par = np.sqrt(var)
    d_l, d_r = u_m - u_l, u_m - u_r
    return np.maximum(d_l, d_r), np.minimum(d_l, d_r), lam_par


def naive_line_strength(img, params, kernels):
    """Triple loop over orientations, sticks and samples (pixels vectorized)."""
    img = np.asarray(img, dtype=np.float64)
    best_max = np.full(img.shape, -np.inf)
    best_min = np.full(img.shape, -np.inf)
    arg = np.zeros(img.shape, dtype=int)
    for idx, k in enumerate(kernels):
        lam_max, lam_min, lam_par = naive_stick_differentials(img, k, params.kappa)
        i_max = lam_max - params.kappa * lam_par
        i_min = lam_min - params.kappa * lam_par
        better = i_max > best_max
        arg[better] = idx
        best_max = np.maximum(best_max, i_max)
        best_min = np.maximum(best_min, i_min)
    thetas = np.array([k.theta_deg for k in kernels])
    return np.clip(best_max, 0, None), np.clip(best_min, 0, None), thetas[arg]


# --- connected components / topology ---------------------------------------

def _neighbor_offsets(connectivity, ndim):
    offs = []
    for delta in product((-1, 0, 1), repeat=ndim):
        if all(d == 0 for d in delta):
            continue
        order = sum(abs(d) for d in delta)
        if connectivity == 6 and order > 1:
            continue
        if connectivity == 18 and order > 2:
            continue
        offs.append(delta)
    return offs


def flood_fill_components(mask, connectivity=26):
    """Label components by BFS; returns (labels, count). Works in 2D or 3D
    (2D connectivity values: 4 or 8 map onto 6/26 semantics)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 2:
        connectivity = {4: 6, 8: 26}.get(connectivity, connectivity)
    offs = _neighbor_offsets(connectivity, mask.ndim)
    labels = np.zeros(mask.shape, dtype=np.int32)
    current = 0
    for start in zip(*np.nonzero(mask)):
        if labels[start]:
            continue
        current += 1
        queue = deque([start])
        labels[start] = current
        while queue:
            pos = queue.popleft()
            for off in offs:
                nxt = tuple(p + o for p, o in zip(pos, off))
                if any(n < 0 or n >= s for n, s in zip(nxt, mask.shape)):
                    continue
                if mask[nxt] and not labels[nxt]:
                    labels[nxt] = current
                    queue.append(nxt)
    return labels, current


def count_objects(mask):
    """Number of 26-connected foreground components."""
    return flood_fill_components(mask, 26)[1]


def count_cavities(mask):
    """6-connected background components not touching the border."""
    bg = ~np.asarray(mask, dtype=bool)
    labels, n = flood_fill_components(bg, 6)
    border = set()
    for axis in range(3):
        for idx in (0, -1):
            sl = [slice(None)] * 3
            sl[axis] = idx
            border |= set(np.unique(labels[tuple(sl)])) - {0}
    return n - len(border)


def euler_from_counts(mask, tunnels):
    """Objects - tunnels + cavities, with tunnel count supplied analytically
    (counting genus digitally is what the local formula is for)."""
    return count_objects(mask) - tunnels + count_cavities(mask)


def brute_force_branch_points(skeleton):
    """Voxels with >= 4 skeleton voxels in their closed 26-neighborhood."""
    skel = np.asarray(skeleton, dtype=bool)
    flagged = set()
    for z, y, x in np.argwhere(skel):
        count = 0
        for dz, dy, dx in product((-1, 0, 1), repeat=3):
            zz, yy, xx = z + dz, y + dy, x + dx
            if (0 <= zz < skel.shape[0] and 0 <= yy < skel.shape[1]
                    and 0 <= xx < skel.shape[2]):
                count += bool(skel[zz, yy, xx])
        if count >= 4:
            flagged.add((int(z), int(y), int(x)))
    return flagged


def bfs_two_front_labels(region, seeds_f, seeds_c):
    """Reference for the competitive restore: hop distances from both seed
    sets inside the region (26-connectivity); F wins ties. Returns the F set."""
    region = np.asarray(region, dtype=bool)
    offs = _neighbor_offsets(26, 3)

    def distances(seeds):
        dist = np.full(region.shape, np.inf)
        queue = deque()
        for pos in zip(*np.nonzero(seeds)):
            dist[pos] = 0
            queue.append(pos)
        while queue:
            pos = queue.popleft()
            for off in offs:
                nxt = tuple(p + o for p, o in zip(pos, off))
                if any(n < 0 or n >= s for n, s in zip(nxt, region.shape)):
                    continue
                if region[nxt] and np.isinf(dist[nxt]):
                    dist[nxt] = dist[pos] + 1
                    queue.append(nxt)
        return dist

    d_f = distances(seeds_f)
    d_c = distances(seeds_c)
    return region & (d_f <= d_c) & np.isfinite(d_f)


# --- metrics ----------------------------------------------------------------

def exhaustive_band(mask, spacing, width_mm):
    """Band membership by exhaustive distance to every true voxel."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros(mask.shape, dtype=bool)
    sx, sy, sz = spacing
    scale = np.array([sz, sy, sx], dtype=np.float64)
    true_pts = np.argwhere(mask) * scale
    all_pts = np.argwhere(np.ones(mask.shape, dtype=bool)) * scale
    d2 = ((all_pts[:, None, :] - true_pts[None, :, :]) ** 2).sum(axis=2)
    dmin = np.sqrt(d2.min(axis=1))
    return (dmin <= width_mm).reshape(mask.shape)


def brute_force_score(seg, gt, spacing, width_mm):
    """Counts and rates straight from the definitions."""
    band_gt = exhaustive_band(gt, spacing, width_mm)
    band_seg = exhaustive_band(seg, spacing, width_mm)
    tp1 = int(np.count_nonzero(seg & band_gt))
    fp = int(np.count_nonzero(seg & ~band_gt))
    tp2 = int(np.count_nonzero(gt & band_seg))
    fn = int(np.count_nonzero(gt & ~band_seg))
    fdr = fp / (tp1 + fp) if tp1 + fp else 0.0
    fnr = fn / (tp2 + fn) if tp2 + fn else 0.0
    if fdr == 1.0 and fnr == 1.0:
        f1 = 0.0
    else:
        f1 = 2 * (1 - fdr) * (1 - fnr) / (2 - fdr - fnr)
    return tp1, fp, tp2, fn, fdr, fnr, f1


def sorted_quantile(values, q):
    """Sort-based quantile with linear interpolation between order stats."""
    s = sorted(values)
    if len(s) == 1:
        return float(s[0])
    pos = q * (len(s) - 1)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    frac = pos - lo
    return float(s[lo] * (1 - frac) + s[hi] * frac)
