"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured numbers (run with `pytest -s` or `-v` to
see them). Criteria and tolerances are pinned here, not configurable.
"""

import json
import os
import time
from itertools import product

import numpy as np
import pytest

from fissureseg.cli import main
from fissureseg.metaimage import load_binary_volume, write_volume
from fissureseg.metrics import score
from fissureseg.phantom import canonical_suite, generate, union_truth
from fissureseg.pipeline import PipelineConfig, segment
from fissureseg.postprocess import (PostprocessParams, remove_branch_points,
                                    shape_measure_filter)
from fissureseg.stickfilter import FilterParams, build_kernels, line_strength
from fissureseg.topology import euler_characteristic, skeletonize_3d
from fissureseg.volume import BinaryVolume, ScalarVolume

from oracles import (brute_force_branch_points, brute_force_score,
                     flood_fill_components, naive_line_strength)


def report(name, ok, detail):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_metric_oracle_equivalence(rng):
    spacings = [(1.0, 1.0, 1.0), (0.5, 0.5, 2.0), (0.75, 1.25, 0.5)]
    start = time.perf_counter()
    worst = 0.0
    n_pairs = 200
    for i in range(n_pairs):
        spacing = spacings[i % 3]
        if i < 3:  # pin the degenerate empties
            seg = np.zeros((16, 16, 16), dtype=bool)
            gt = rng.random((16, 16, 16)) < 0.02 if i else np.zeros((16, 16, 16), bool)
        else:
            seg = rng.random((16, 16, 16)) < rng.uniform(0.002, 0.05)
            gt = rng.random((16, 16, 16)) < rng.uniform(0.002, 0.05)
        r = score(BinaryVolume(seg, spacing), BinaryVolume(gt, spacing), 3.0)
        tp1, fp, tp2, fn, fdr, fnr, f1 = brute_force_score(seg, gt, spacing, 3.0)
        assert (r.tp1, r.fp, r.tp2, r.fn) == (tp1, fp, tp2, fn), f"pair {i}"
        worst = max(worst, abs(r.fdr - fdr), abs(r.fnr - fnr), abs(r.f1 - f1))
    elapsed = time.perf_counter() - start
    report("metric-oracle-equivalence",
           worst <= 1e-12 and elapsed < 30.0,
           f"{n_pairs} pairs, max rate deviation {worst:.2e}, {elapsed:.1f}s < 30s")


def test_filter_oracle_equivalence(rng):
    params = FilterParams()
    kernels = build_kernels(params)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        img = rng.random((16, 16))
        got = line_strength(img, params)
        want = naive_line_strength(img, params, kernels)
        worst = max(worst, np.abs(got[0] - want[0]).max(),
                    np.abs(got[1] - want[1]).max())
        assert np.array_equal(got[2], want[2])
    elapsed = time.perf_counter() - start
    report("filter-oracle-equivalence",
           worst <= 1e-6 and elapsed < 30.0,
           f"50 slices, max deviation {worst:.2e} <= 1e-6, {elapsed:.1f}s < 30s")


def test_zero_response_end_to_end(tmp_path):
    start = time.perf_counter()
    vol = ScalarVolume(np.full((64, 64, 64), -700.0, dtype=np.float32))
    lung = BinaryVolume(np.ones((64, 64, 64), dtype=bool))
    ct, mask, out = (str(tmp_path / n) for n in ("ct.mhd", "lung.mhd", "out"))
    write_volume(vol, ct)
    write_volume(lung, mask)
    code = main(["segment", "--ct", ct, "--lung-mask", mask, "--out", out,
                 "--threads", "0"])
    final = load_binary_volume(os.path.join(out, "fissure_mask.mhd"))
    elapsed = time.perf_counter() - start
    report("zero-response",
           code == 0 and final.count == 0 and elapsed < 60.0,
           f"exit {code}, {final.count} voxels, {elapsed:.1f}s < 60s")


TOPOLOGY_SOLIDS = ["SOLID_CUBE", "HOLLOW_BOX", "TORUS", "STRAIGHT_TUBE", "Y_TUBE"]
ANALYTIC_EULER = {"SOLID_CUBE": 1, "HOLLOW_BOX": 2, "TORUS": 0}


def test_topology_preservation():
    suite = canonical_suite()
    details = []
    ok = True
    for name in TOPOLOGY_SOLIDS:
        mask = union_truth(generate(suite[name])[1]).data
        sk = skeletonize_3d(mask)
        chi0, chi1 = euler_characteristic(mask), euler_characteristic(sk.skeleton)
        c0 = flood_fill_components(mask, 26)[1]
        c1 = flood_fill_components(sk.skeleton, 26)[1]
        subset = not (sk.skeleton & ~mask).any()
        identity = np.array_equal(skeletonize_3d(sk.skeleton).skeleton, sk.skeleton)
        good = chi0 == chi1 and c0 == c1 and subset and identity
        if name in ANALYTIC_EULER:
            good = good and chi0 == ANALYTIC_EULER[name]
        ok = ok and good
        details.append(f"{name} chi {chi0}->{chi1} comps {c0}->{c1}")
    report("topology-preservation", ok, "; ".join(details))


def test_branch_point_exactness():
    suite = canonical_suite()
    y_mask = union_truth(generate(suite["Y_TUBE"])[1]).data
    y_sk = skeletonize_3d(y_mask)
    y_pruned = remove_branch_points(y_sk)
    y_flagged = set(map(tuple, y_pruned.removed_branch_points))
    y_expected = brute_force_branch_points(y_sk.skeleton)

    s_mask = union_truth(generate(suite["STRAIGHT_TUBE"])[1]).data
    s_pruned = remove_branch_points(skeletonize_3d(s_mask))

    ok = (y_flagged == y_expected and len(y_flagged) > 0
          and len(s_pruned.removed_branch_points) == 0)
    report("branch-point-exactness", ok,
           f"Y_TUBE flagged {len(y_flagged)} == oracle {len(y_expected)}, "
           f"STRAIGHT_TUBE flagged {len(s_pruned.removed_branch_points)}")


def test_shape_measure_monotonicity():
    slice_ = np.zeros((64, 64), dtype=bool)
    slice_[6, 4:40] = True                       # long line
    slice_[20:22, 10:50] = True                  # 2-wide line
    yy, xx = np.indices((64, 64))
    slice_ |= (yy - 44) ** 2 + (xx - 14) ** 2 <= 20        # disc
    slice_ |= ((yy - 48) / 2.0) ** 2 + ((xx - 44) / 4.0) ** 2 <= 4  # ellipse
    slice_ |= ((yy - 30) / 1.2) ** 2 + ((xx - 30) / 2.0) ** 2 <= 2  # small blob
    vol = np.zeros((64, 64, 1), dtype=bool)
    vol[:, :, 0] = slice_

    removed_sets = []
    for t_s in (0.4, 0.5, 0.6, 0.7):
        kept = shape_measure_filter(vol, PostprocessParams(shape_ratio_threshold=t_s))
        removed_sets.append(vol & ~kept)
    ok = True
    sizes = [int(r.sum()) for r in removed_sets]
    for prev, cur in zip(removed_sets, removed_sets[1:]):
        ok = ok and not (cur & ~prev).any()   # removed set only shrinks
    ok = ok and sizes[0] > 0
    report("shape-measure-monotonicity", ok,
           f"removed voxels over T_s 0.4..0.7: {sizes}")


@pytest.fixture(scope="module")
def composite_case(tmp_path_factory):
    """COMPOSITE phantom segmented once through the CLI; shared by the
    end-to-end, determinism and band-monotonicity criteria."""
    tmp = tmp_path_factory.mktemp("composite")
    vol, truths = generate(canonical_suite()["COMPOSITE"])
    lung = BinaryVolume(np.ones(vol.data.shape, dtype=bool))
    paths = {"ct": str(tmp / "ct.mhd"), "lung": str(tmp / "lung.mhd"),
             "out": str(tmp / "out")}
    write_volume(vol, paths["ct"])
    write_volume(lung, paths["lung"])
    start = time.perf_counter()
    code = main(["segment", "--ct", paths["ct"], "--lung-mask", paths["lung"],
                 "--out", paths["out"], "--threads", "0"])
    elapsed = time.perf_counter() - start
    final = load_binary_volume(os.path.join(paths["out"], "fissure_mask.mhd"))
    return {"volume": vol, "truths": truths, "code": code,
            "elapsed": elapsed, "final": final}


def test_composite_end_to_end_quality(composite_case):
    truths = composite_case["truths"]
    final = composite_case["final"]
    r = score(final, truths["plane"], width_mm=1.0)  # 1-voxel band at 1 mm spacing
    tube = truths["tube"]
    contamination = np.count_nonzero(final.data & tube.data) / tube.count
    ok = (composite_case["code"] == 0 and r.f1 >= 0.85
          and contamination <= 0.05 and composite_case["elapsed"] < 120.0)
    report("composite-end-to-end", ok,
           f"F1 {r.f1:.3f} >= 0.85, tube contamination {contamination:.3f} "
           f"<= 0.05, {composite_case['elapsed']:.1f}s < 120s")


def test_composite_determinism_across_threads(composite_case):
    vol = composite_case["volume"]
    lung = ScalarVolume(np.ones(vol.data.shape, dtype=np.float32))
    one = segment(vol, lung, PipelineConfig(threads=1))
    many = segment(vol, lung, PipelineConfig(threads=0))  # 0 = all cores
    identical = (np.array_equal(one.mask.data, many.mask.data)
                 and np.array_equal(one.mask.data, composite_case["final"].data))
    report("determinism-across-threads", identical,
           f"1-thread vs all-cores vs CLI masks identical: {identical}, "
           f"{one.mask.count} voxels")


def test_band_monotonicity_on_phantom(composite_case):
    truths = composite_case["truths"]
    final = composite_case["final"]
    f1s = [score(final, truths["plane"], width_mm=w).f1 for w in (0.0, 1.0, 2.0, 3.0)]
    ok = all(a <= b + 1e-12 for a, b in zip(f1s, f1s[1:]))
    report("band-monotonicity", ok,
           "F1 over band 0/1/2/3 mm: " + ", ".join(f"{v:.3f}" for v in f1s))
