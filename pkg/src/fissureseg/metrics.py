"""Band-tolerance segmentation scoring.

A tolerance band of physical width (mm) is placed around each mask using an
exact Euclidean distance transform with anisotropic spacing. Voxels of the
segmentation inside the reference band are hits, the rest false discoveries;
symmetrically, reference voxels inside the segmentation band are covered,
the rest misses.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, asdict

import numpy as np
from scipy import ndimage

from .errors import InputError
from .volume import BinaryVolume, require_same_geometry


@dataclass(frozen=True)
class MetricsReport:
    """Voxel counts and derived rates for one scored case.

    fdr = fp / (tp1 + fp), fnr = fn / (tp2 + fn), and
    f1 = 2 (1-fdr)(1-fnr) / (2 - fdr - fnr). Degenerate cases are pinned:
    an empty segmentation has fdr = 0, an empty reference has fnr = 0, and
    f1 = 0 when fdr = fnr = 1 (the formula's 0/0 case).
    """

    tp1: int
    tp2: int
    fp: int
    fn: int
    fdr: float
    fnr: float
    f1: float
    band_mm: float

    CSV_FIELDS = ("case_id", "tp1", "fp", "tp2", "fn", "fdr", "fnr", "f1", "band_mm")

    def csv_row(self, case_id: str) -> dict:
        d = asdict(self)
        return {"case_id": case_id, "tp1": d["tp1"], "fp": d["fp"],
                "tp2": d["tp2"], "fn": d["fn"], "fdr": d["fdr"],
                "fnr": d["fnr"], "f1": d["f1"], "band_mm": d["band_mm"]}


def band(mask: BinaryVolume, width_mm: float) -> BinaryVolume:
    """All voxels within ``width_mm`` of the mask (anisotropic Euclidean
    distance, spacing-aware). Contains the mask itself; empty for an empty
    mask."""
    if width_mm < 0:
        raise InputError(f"band width must be >= 0, got {width_mm}")
    if not mask.data.any():
        return mask.with_data(np.zeros(mask.data.shape, dtype=bool))
    sx, sy, sz = mask.spacing
    dist = ndimage.distance_transform_edt(~mask.data, sampling=(sz, sy, sx))
    return mask.with_data(dist <= width_mm)


def _f1_from_rates(fdr: float, fnr: float) -> float:
    if fdr == 1.0 and fnr == 1.0:
        return 0.0
    return 2.0 * (1.0 - fdr) * (1.0 - fnr) / (2.0 - fdr - fnr)


def score(seg: BinaryVolume, gt: BinaryVolume, width_mm: float = 3.0) -> MetricsReport:
    """Score a segmentation against a reference with tolerance bands of
    ``width_mm`` on both sides."""
    require_same_geometry(seg, gt, "segmentation and reference")
    gt_band = band(gt, width_mm).data
    seg_band = band(seg, width_mm).data
    tp1 = int(np.count_nonzero(seg.data & gt_band))
    fp = int(np.count_nonzero(seg.data & ~gt_band))
    tp2 = int(np.count_nonzero(gt.data & seg_band))
    fn = int(np.count_nonzero(gt.data & ~seg_band))
    fdr = fp / (tp1 + fp) if (tp1 + fp) > 0 else 0.0
    fnr = fn / (tp2 + fn) if (tp2 + fn) > 0 else 0.0
    return MetricsReport(tp1=tp1, tp2=tp2, fp=fp, fn=fn, fdr=fdr, fnr=fnr,
                         f1=_f1_from_rates(fdr, fnr), band_mm=float(width_mm))


def aggregate(reports: list[MetricsReport]) -> dict[str, dict[str, float]]:
    """Median and quartiles (linear interpolation) of fdr, fnr and f1."""
    if not reports:
        raise InputError("aggregate needs at least one report")
    out: dict[str, dict[str, float]] = {}
    for metric in ("fdr", "fnr", "f1"):
        values = np.array([getattr(r, metric) for r in reports], dtype=np.float64)
        q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
        out[metric] = {"q1": float(q1), "median": float(med), "q3": float(q3)}
    return out


def write_csv(path: str, rows: list[tuple[str, MetricsReport]],
              append_aggregate: bool = True) -> None:
    """One CSV row per case; in batch mode summary rows (q1/median/q3 of the
    rate columns) are appended."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MetricsReport.CSV_FIELDS)
        writer.writeheader()
        for case_id, report in rows:
            writer.writerow(report.csv_row(case_id))
        if append_aggregate and len(rows) > 1:
            summary = aggregate([r for _, r in rows])
            for stat in ("q1", "median", "q3"):
                writer.writerow({
                    "case_id": stat,
                    "fdr": summary["fdr"][stat],
                    "fnr": summary["fnr"][stat],
                    "f1": summary["f1"][stat],
                    "band_mm": rows[0][1].band_mm,
                })


__all__ = ["MetricsReport", "band", "score", "aggregate", "write_csv"]
