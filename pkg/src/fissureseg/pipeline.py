"""End-to-end segmentation pipeline and its flat key=value configuration.

Stage order: mask -> per-view stick filtering -> fusion -> thresholded
orientation field -> per-view orientation-partition selection -> view
integration -> sagittal shape measure -> thinning -> branch-point removal ->
skeleton selection -> hole filling -> thickness restoration -> repair.
Every run produces a machine-readable report with the fully resolved
parameter set and per-stage wall times.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import metaimage
from .errors import InputError, StageError
from .orientation import (PreprocessParams, all_bins, curvature_filter_2d,
                          integrate_bins, integrate_views, partition,
                          planar_filter_3d)
from .postprocess import (PostprocessParams, fill_holes, remove_branch_points,
                          repair_fissures, restore_thickness, select_candidates,
                          shape_measure_filter)
from .stickfilter import FilterParams, fuse_3d, run_view, vector_field
from .topology import skeletonize_3d
from .volume import (BinaryVolume, ScalarVolume, ViewAxis, apply_mask,
                     require_same_geometry)

_VIEW_ORDER = (ViewAxis.SAGITTAL, ViewAxis.AXIAL, ViewAxis.CORONAL)

# key -> (attribute path, parser, default)
_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def _parse_bool(s: str) -> bool:
    try:
        return _BOOL[s.strip().lower()]
    except KeyError:
        raise InputError(f"expected a boolean, got {s!r}")


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved parameters of one pipeline run. Field names carry units where
    they have one (voxels, mm)."""

    stick_length_vox: int = 11
    stick_spacing_vox: int = 2
    tubular_suppression_weight: float = 0.7
    vector_field_threshold: float = 1.0
    orientation_bin_count: int = 8
    min_plane_component_vox: int = 200
    curvature_tolerance: float = 1.0
    shape_ratio_threshold: float = 0.5
    skeleton_min_component_vox: int = 50
    repair_big_object_vox: int = 500
    final_min_component_vox: int = 100
    band_mm: float = 3.0
    mask_fill_intensity: float = -1000.0
    threads: int = 1
    dump_intermediates: bool = False

    def filter_params(self) -> FilterParams:
        return FilterParams(length=self.stick_length_vox,
                            spacing=self.stick_spacing_vox,
                            kappa=self.tubular_suppression_weight,
                            threshold=self.vector_field_threshold)

    def preprocess_params(self) -> PreprocessParams:
        return PreprocessParams(n_bins=self.orientation_bin_count,
                                min_3d_component=self.min_plane_component_vox,
                                curvature_tolerance=self.curvature_tolerance)

    def postprocess_params(self) -> PostprocessParams:
        return PostprocessParams(
            shape_ratio_threshold=self.shape_ratio_threshold,
            skel_min_component=self.skeleton_min_component_vox,
            repair_big_threshold=self.repair_big_object_vox,
            final_min_component=self.final_min_component_vox)

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    def replace(self, **kw) -> "PipelineConfig":
        merged = self.to_dict()
        merged.update(kw)
        return PipelineConfig(**merged)


_PARSERS = {
    "stick_length_vox": int,
    "stick_spacing_vox": int,
    "tubular_suppression_weight": float,
    "vector_field_threshold": float,
    "orientation_bin_count": int,
    "min_plane_component_vox": int,
    "curvature_tolerance": float,
    "shape_ratio_threshold": float,
    "skeleton_min_component_vox": int,
    "repair_big_object_vox": int,
    "final_min_component_vox": int,
    "band_mm": float,
    "mask_fill_intensity": float,
    "threads": int,
    "dump_intermediates": _parse_bool,
}


def load_config(path: str) -> PipelineConfig:
    """Parse a flat ``key = value`` file. Blank lines and ``#`` comments are
    allowed; unknown keys are rejected."""
    if not os.path.exists(path):
        raise InputError(f"config file not found: {path}")
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            if key not in _PARSERS:
                raise InputError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = _PARSERS[key](value)
            except (ValueError, InputError) as e:
                raise InputError(f"{path}:{lineno}: bad value for {key}: {e}")
    return PipelineConfig(**values)


@dataclass
class SegmentResult:
    mask: BinaryVolume
    report: dict


class _StageClock:
    """Runs named stages, records wall times, and tags failures."""

    def __init__(self):
        self.timings: list[dict] = []

    def run(self, name: str, fn, *args, **kw):
        start = time.perf_counter()
        try:
            out = fn(*args, **kw)
        except InputError:
            raise
        except Exception as e:  # pragma: no cover - defensive
            raise StageError(name, e) from e
        self.timings.append({"stage": name,
                             "seconds": time.perf_counter() - start})
        return out


class _Dumper:
    def __init__(self, out_dir: str | None, spacing, enabled: bool):
        self.dir = os.path.join(out_dir, "intermediates") if out_dir else None
        self.spacing = spacing
        self.enabled = enabled and out_dir is not None
        if self.enabled:
            os.makedirs(self.dir, exist_ok=True)

    def mask(self, name: str, data: np.ndarray) -> None:
        if self.enabled:
            metaimage.write_volume(BinaryVolume(data, self.spacing),
                                   os.path.join(self.dir, name + ".mhd"))

    def scalar(self, name: str, data: np.ndarray) -> None:
        if self.enabled:
            metaimage.write_volume(ScalarVolume(data, self.spacing),
                                   os.path.join(self.dir, name + ".mhd"))


def _segment_one_mask(ct: ScalarVolume, lung: BinaryVolume,
                      config: PipelineConfig, clock: _StageClock,
                      dump: _Dumper, tag: str = "") -> np.ndarray:
    fparams = config.filter_params()
    pre = config.preprocess_params()
    post = config.postprocess_params()
    threads = config.threads if config.threads > 0 else (os.cpu_count() or 1)

    masked = clock.run("mask" + tag, apply_mask, ct, lung,
                       config.mask_fill_intensity)

    responses: dict[ViewAxis, np.ndarray] = {}
    thetas: dict[ViewAxis, np.ndarray] = {}
    for view in _VIEW_ORDER:
        f_o, theta = clock.run(f"filter_{view.value}{tag}", run_view,
                               masked, view, fparams, threads)
        responses[view] = f_o
        thetas[view] = theta

    f3d = clock.run("fuse" + tag, fuse_3d, responses[ViewAxis.SAGITTAL],
                    responses[ViewAxis.AXIAL], responses[ViewAxis.CORONAL])
    field = clock.run("vector_field" + tag, vector_field, f3d, responses,
                      thetas, fparams)
    dump.scalar(f"f3d{tag}", f3d)
    for view in _VIEW_ORDER:
        dump.scalar(f"theta_{view.value}{tag}", thetas[view])

    def select_view(view: ViewAxis) -> np.ndarray:
        bin_masks = []
        for b in all_bins(pre):
            m = partition(field, view, b)
            m = curvature_filter_2d(m, field, view, b, pre)
            m = planar_filter_3d(m, pre)
            bin_masks.append(m)
            dump.mask(f"bin_{view.value}_{b.index}{tag}", m)
        return integrate_bins(bin_masks)

    view_masks = {}
    for view in _VIEW_ORDER:
        view_masks[view] = clock.run(f"select_{view.value}{tag}", select_view, view)
        dump.mask(f"view_{view.value}{tag}", view_masks[view])

    patch = clock.run("integrate_views" + tag, integrate_views,
                      view_masks[ViewAxis.SAGITTAL], view_masks[ViewAxis.AXIAL],
                      view_masks[ViewAxis.CORONAL])
    dump.mask(f"patch{tag}", patch)

    q = clock.run("shape_measure" + tag, shape_measure_filter, patch, post)
    dump.mask(f"q{tag}", q)

    sk = clock.run("skeletonize" + tag, skeletonize_3d, q)
    dump.mask(f"q_k{tag}", sk.skeleton)

    pruned = clock.run("branch_points" + tag, remove_branch_points, sk)
    dump.mask(f"skeleton_pruned{tag}", pruned.skeleton)

    candidate = clock.run("select_skeleton" + tag, select_candidates, pruned, post)
    fissure_seed = clock.run("fill_holes" + tag, fill_holes, candidate, pruned)
    all_skeleton = sk.skeleton
    clutter_seed = all_skeleton & ~fissure_seed

    q_s = clock.run("restore_thickness" + tag, restore_thickness, q,
                    fissure_seed, clutter_seed)
    dump.mask(f"q_s{tag}", q_s)

    final = clock.run("repair" + tag, repair_fissures, q, q_s, post)
    return final


def segment(ct: ScalarVolume, lung_mask: ScalarVolume,
            config: PipelineConfig | None = None,
            out_dir: str | None = None) -> SegmentResult:
    """Run the full pipeline.

    ``lung_mask`` is a label volume: with exactly two distinct nonzero
    labels each side is processed independently and the results are unioned;
    otherwise all nonzero voxels form a single mask. The returned report
    echoes the resolved configuration and per-stage timings.
    """
    config = config or PipelineConfig()
    require_same_geometry(ct, lung_mask, "CT and lung mask")
    clock = _StageClock()
    dump = _Dumper(out_dir, ct.spacing, config.dump_intermediates)

    labels = np.unique(lung_mask.data)
    labels = labels[labels != 0]
    final = np.zeros(ct.data.shape, dtype=bool)
    if len(labels) == 2:
        for value in labels:
            lung = BinaryVolume(lung_mask.data == value, lung_mask.spacing)
            final |= _segment_one_mask(ct, lung, config, clock, dump,
                                       tag=f"_label{value:g}")
    else:
        lung = BinaryVolume(lung_mask.data != 0, lung_mask.spacing)
        final = _segment_one_mask(ct, lung, config, clock, dump)

    mask = BinaryVolume(final, ct.spacing)
    dump.mask("final", final)
    report = {
        "config": config.to_dict(),
        "dims": list(ct.dims),
        "spacing": list(ct.spacing),
        "lung_labels": [float(v) for v in labels],
        "stages": clock.timings,
        "total_seconds": sum(t["seconds"] for t in clock.timings),
        "final_voxels": mask.count,
    }
    return SegmentResult(mask=mask, report=report)


def write_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = ["PipelineConfig", "load_config", "segment", "SegmentResult",
           "write_report"]
