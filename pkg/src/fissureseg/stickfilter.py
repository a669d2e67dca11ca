"""Oriented multi-stick line filter over 2D cross-sections of a volume.

Each kernel is a triple of parallel digital line segments ("sticks") of L
pixels at an orientation theta: a middle stick through the pixel and two
flanking sticks offset by +-S along the discretized perpendicular. The
perpendicular intensity differentials of the stick means enhance thin lines,
an along-stick variance term suppresses wider tubular profiles, and a
max-then-min cascade of the two differential branches sharpens the response.
Per-pixel best orientations are kept so later stages can partition structures
by direction.

Slices are treated as isotropic grids. Samples that fall outside a slice are
clamped to the nearest in-slice pixel (edge replication), which avoids
spurious differentials at mask borders. Accumulation happens in float64 and
results are stored as float32.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .volume import ScalarVolume, ViewAxis, stack_for_view, unstack_from_view


@dataclass(frozen=True)
class FilterParams:
    """Stick filter parameters.

    length: stick length L in pixels (odd). spacing: perpendicular inter-stick
    offset S in pixels. kappa: weight of the along-stick variance penalty.
    threshold: minimal fused response required to keep an orientation vector.
    """

    length: int = 11
    spacing: int = 2
    kappa: float = 0.7
    threshold: float = 1.0

    def __post_init__(self):
        if self.length < 3 or self.length % 2 == 0:
            raise InputError(f"stick length must be odd and >= 3, got {self.length}")
        if self.spacing < 1:
            raise InputError(f"stick spacing must be >= 1, got {self.spacing}")
        if self.kappa < 0:
            raise InputError(f"kappa must be >= 0, got {self.kappa}")
        if self.threshold < 0:
            raise InputError(f"threshold must be >= 0, got {self.threshold}")

    @property
    def n_orientations(self) -> int:
        return 2 * (self.length - 1)

    @property
    def margin(self) -> int:
        """Padding needed so every stick sample lands inside the padded slice."""
        return (self.length - 1) // 2 + self.spacing + 1


@dataclass(frozen=True)
class StickKernel:
    """One orientation's stick triple. Offsets are (dx, dy) pixel pairs,
    x along slice columns and y along rows."""

    theta_deg: float
    offsets_m: np.ndarray
    offsets_l: np.ndarray
    offsets_r: np.ndarray
    perp: tuple[int, int]


def _round_sym(x: float) -> int:
    """Round half away from zero; odd-symmetric so kernels stay centered."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def build_kernels(p: FilterParams) -> list[StickKernel]:
    """Digital stick kernels for all 2(L-1) orientations.

    theta_i = i * 180 / (2(L-1)) for i = 0 .. 2(L-1)-1, covering [0, 180).
    The middle stick is an L-point digital line through the origin; flanking
    sticks are the same line translated by the componentwise-rounded
    perpendicular vector of length S.
    """
    n = p.n_orientations
    half = (p.length - 1) // 2
    kernels = []
    for i in range(n):
        theta = 180.0 * i / n
        rad = math.radians(theta)
        c, s = math.cos(rad), math.sin(rad)
        js = range(-half, half + 1)
        if abs(c) >= abs(s):
            mid = [(j, _round_sym(j * s / c)) for j in js]
        else:
            mid = [(_round_sym(j * c / s), j) for j in js]
        perp = (_round_sym(-p.spacing * s), _round_sym(p.spacing * c))
        off_m = np.array(mid, dtype=np.int64)
        t = np.array(perp, dtype=np.int64)
        kernels.append(
            StickKernel(
                theta_deg=theta,
                offsets_m=off_m,
                offsets_l=off_m - t,
                offsets_r=off_m + t,
                perp=perp,
            )
        )
    return kernels


def _pad_stack(stack: np.ndarray, margin: int) -> np.ndarray:
    return np.pad(stack, ((0, 0), (margin, margin), (margin, margin)), mode="edge")


def _shifted_sum(padded: np.ndarray, offsets: np.ndarray, margin: int,
                 rows: int, cols: int) -> np.ndarray:
    acc = np.zeros((padded.shape[0], rows, cols))
    for dx, dy in offsets:
        acc += padded[:, margin + dy:margin + dy + rows, margin + dx:margin + dx + cols]
    return acc


def _kernel_differentials(padded, padded_sq, kernel, p, rows, cols):
    """(lambda_perp_max, lambda_perp_min, lambda_par) for one orientation."""
    inv_l = 1.0 / p.length
    u_m = _shifted_sum(padded, kernel.offsets_m, p.margin, rows, cols) * inv_l
    u_l = _shifted_sum(padded, kernel.offsets_l, p.margin, rows, cols) * inv_l
    u_r = _shifted_sum(padded, kernel.offsets_r, p.margin, rows, cols) * inv_l
    mean_sq = _shifted_sum(padded_sq, kernel.offsets_m, p.margin, rows, cols) * inv_l
    var = np.clip(mean_sq - u_m * u_m, 0.0, None)
    lam_par = np.sqrt(var)
    d_l = u_m - u_l
    d_r = u_m - u_r
    return np.maximum(d_l, d_r), np.minimum(d_l, d_r), lam_par


def _line_strength_stack(stack: np.ndarray, p: FilterParams,
                         kernels: list[StickKernel] | None = None):
    """Per-pixel (F_max, F_min, theta_of_best_max) over a slice stack.

    F_max/F_min are the orientation maxima of the max/min differential branch
    (each penalized by kappa * lambda_par), clamped at zero. theta is the
    orientation that maximizes the unclamped max branch; ties go to the
    smallest orientation index.
    """
    kernels = kernels or build_kernels(p)
    stack = np.asarray(stack, dtype=np.float64)
    n, rows, cols = stack.shape
    padded = _pad_stack(stack, p.margin)
    padded_sq = padded * padded

    best_max = np.full((n, rows, cols), -np.inf)
    best_min = np.full((n, rows, cols), -np.inf)
    arg = np.zeros((n, rows, cols), dtype=np.int16)
    for idx, k in enumerate(kernels):
        lam_max, lam_min, lam_par = _kernel_differentials(
            padded, padded_sq, k, p, rows, cols)
        i_max = lam_max - p.kappa * lam_par
        i_min = lam_min - p.kappa * lam_par
        better = i_max > best_max
        arg[better] = idx
        np.maximum(best_max, i_max, out=best_max)
        np.maximum(best_min, i_min, out=best_min)

    thetas = np.array([k.theta_deg for k in kernels])
    return (np.clip(best_max, 0.0, None),
            np.clip(best_min, 0.0, None),
            thetas[arg])


def _cascade_stack(stack, p, kernels=None):
    """Max-branch pass on the input, min-branch pass on its response."""
    kernels = kernels or build_kernels(p)
    f_max, _, theta = _line_strength_stack(stack, p, kernels)
    _, f_o, _ = _line_strength_stack(f_max, p, kernels)
    return f_o, theta


def _check_slice(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise InputError(f"expected a non-empty 2D slice, got shape {img.shape}")
    return img


def stick_differentials(img, kernel: StickKernel, p: FilterParams):
    """Perpendicular max/min differentials and along-stick deviation for one
    orientation, per pixel.

    lambda_perp_max/min = max/min(u_M - u_L, u_M - u_R) of the three stick
    means; lambda_par is the population standard deviation of the L samples
    along the middle stick.
    """
    img = _check_slice(img)
    rows, cols = img.shape
    padded = _pad_stack(img[None], p.margin)
    lam_max, lam_min, lam_par = _kernel_differentials(
        padded, padded * padded, kernel, p, rows, cols)
    return lam_max[0], lam_min[0], lam_par[0]


def line_strength(img, p: FilterParams):
    """(F_max, F_min, theta_max) per pixel of a single slice."""
    img = _check_slice(img)
    f_max, f_min, theta = _line_strength_stack(img[None], p)
    return f_max[0], f_min[0], theta[0]


def cascade(img, p: FilterParams) -> np.ndarray:
    """Cascaded response of one slice: min-branch filter applied to the
    max-branch filter's output. Non-negative everywhere."""
    img = _check_slice(img)
    f_o, _ = _cascade_stack(img[None], p)
    return f_o[0]


def run_view(v: ScalarVolume, axis: ViewAxis, p: FilterParams,
             threads: int | None = None):
    """Filter every slice of one view; returns (response, theta) float32 volumes.

    Slices are independent, so the stack is split into contiguous chunks
    processed in parallel. Results are bitwise identical for any thread count.
    """
    kernels = build_kernels(p)
    stack = stack_for_view(v.data, axis)
    n = stack.shape[0]
    f_out = np.empty(stack.shape, dtype=np.float32)
    t_out = np.empty(stack.shape, dtype=np.float32)

    def work(lo: int, hi: int) -> None:
        f_o, theta = _cascade_stack(stack[lo:hi], p, kernels)
        f_out[lo:hi] = f_o
        t_out[lo:hi] = theta

    threads = max(1, threads or 1)
    if threads == 1 or n == 1:
        work(0, n)
    else:
        bounds = np.linspace(0, n, min(threads, n) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(work, lo, hi)
                    for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
            for f in futs:
                f.result()

    return unstack_from_view(f_out, axis), unstack_from_view(t_out, axis)


def fuse_3d(f_s: np.ndarray, f_a: np.ndarray, f_c: np.ndarray) -> np.ndarray:
    """Fuse per-view responses into a shape-tuned magnitude.

    fused = (sum of the three) * median / max, and 0 where the max is 0.
    Planar structures respond in all views, so their median stays comparable
    to the max; view-isolated clutter is damped.
    """
    if not (f_s.shape == f_a.shape == f_c.shape):
        raise InputError("per-view responses must share dims")
    a = np.asarray(f_a, dtype=np.float64)
    s = np.asarray(f_s, dtype=np.float64)
    c = np.asarray(f_c, dtype=np.float64)
    total = a + s + c
    hi = np.maximum(np.maximum(a, s), c)
    lo = np.minimum(np.minimum(a, s), c)
    med = total - hi - lo
    with np.errstate(divide="ignore", invalid="ignore"):
        fused = np.where(hi > 0, total * med / np.where(hi > 0, hi, 1.0), 0.0)
    return fused.astype(np.float32)


@dataclass
class OrientationField:
    """Fused magnitude plus per-view responses and best orientations.

    ``unit_vectors`` yields (cos theta, sin theta) wherever the fused
    magnitude exceeds the threshold and the zero vector elsewhere.
    """

    response: dict[ViewAxis, np.ndarray]
    theta: dict[ViewAxis, np.ndarray]
    f3d: np.ndarray
    threshold: float

    @property
    def nonzero(self) -> np.ndarray:
        return self.f3d > self.threshold

    def unit_vectors(self, view: ViewAxis) -> np.ndarray:
        """(2, nz, ny, nx) float32 array of per-voxel unit vectors (or zeros)."""
        rad = np.deg2rad(self.theta[view].astype(np.float64))
        vec = np.stack([np.cos(rad), np.sin(rad)]).astype(np.float32)
        vec[:, ~self.nonzero] = 0.0
        return vec


def vector_field(f3d: np.ndarray, response: dict[ViewAxis, np.ndarray],
                 theta: dict[ViewAxis, np.ndarray], p: FilterParams) -> OrientationField:
    """Assemble the thresholded orientation field from fused magnitude and
    per-view orientation volumes."""
    for d in (response, theta):
        for view in ViewAxis:
            if view not in d or d[view].shape != f3d.shape:
                raise InputError("orientation field inputs must cover all views "
                                 "with matching dims")
    return OrientationField(response=response, theta=theta,
                            f3d=np.asarray(f3d, dtype=np.float32),
                            threshold=p.threshold)


__all__ = [
    "FilterParams",
    "StickKernel",
    "OrientationField",
    "build_kernels",
    "stick_differentials",
    "line_strength",
    "cascade",
    "run_view",
    "fuse_3d",
    "vector_field",
]
