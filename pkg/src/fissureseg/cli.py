"""Command-line interface: segment, evaluate, phantom, render.

Exit codes: 0 success, 2 input error (missing/malformed files, bad
arguments), 3 internal stage failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import metaimage, phantom as phantom_mod, pipeline
from .errors import InputError, StageError
from .metrics import MetricsReport, score, write_csv
from .render import render_overlay
from .volume import BinaryVolume, ScalarVolume, ViewAxis


def _parse_triple(text: str, cast, what: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError(f"{what} must be three comma-separated values, got {text!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError:
        raise InputError(f"unparseable {what}: {text!r}")


def _raw_kwargs(args) -> dict:
    """Raw-mode loader arguments from --dims/--spacing/--dtype (if given)."""
    if args.dims is None and args.spacing is None and args.dtype is None:
        return {}
    if None in (args.dims, args.spacing, args.dtype):
        raise InputError("raw input needs --dims, --spacing and --dtype together")
    return {
        "dims": _parse_triple(args.dims, int, "--dims"),
        "spacing": _parse_triple(args.spacing, float, "--spacing"),
        "dtype": args.dtype,
    }


def _load_any(path: str, raw_kwargs: dict) -> ScalarVolume:
    if path.endswith(".mhd"):
        return metaimage.load_volume(path)
    if raw_kwargs:
        return metaimage.load_volume(path, **raw_kwargs)
    return metaimage.load_volume(path)


def _add_raw_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dims", help="raw input: nx,ny,nz")
    p.add_argument("--spacing", help="raw input: sx,sy,sz in mm")
    p.add_argument("--dtype", choices=sorted(metaimage.RAW_DTYPES),
                   help="raw input element type")


def _cmd_segment(args) -> int:
    raw = _raw_kwargs(args)
    ct = _load_any(args.ct, raw)
    lung = _load_any(args.lung_mask, raw)
    config = pipeline.load_config(args.config) if args.config else pipeline.PipelineConfig()
    if args.threads is not None:
        config = config.replace(threads=args.threads)
    if args.dump_intermediates:
        config = config.replace(dump_intermediates=True)

    os.makedirs(args.out, exist_ok=True)
    result = pipeline.segment(ct, lung, config, out_dir=args.out)
    mask_path = os.path.join(args.out, "fissure_mask.mhd")
    metaimage.write_volume(result.mask, mask_path)
    result.report["outputs"] = {"mask": mask_path}
    pipeline.write_report(result.report, os.path.join(args.out, "report.json"))
    print(f"wrote {mask_path} ({result.mask.count} voxels)")
    return 0


def _load_mask(path: str, raw: dict) -> BinaryVolume:
    v = _load_any(path, raw)
    return BinaryVolume(v.data != 0, v.spacing)


def _cmd_evaluate(args) -> int:
    raw = _raw_kwargs(args)
    cases: list[tuple[str, str, str]] = []
    if args.manifest:
        if not os.path.exists(args.manifest):
            raise InputError(f"manifest not found: {args.manifest}")
        with open(args.manifest, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = [p.strip() for p in line.split(",")]
                if len(parts) != 3:
                    raise InputError(
                        f"{args.manifest}:{lineno}: expected case_id,seg,gt")
                cases.append(tuple(parts))
    else:
        if not (args.seg and args.gt):
            raise InputError("evaluate needs --seg and --gt (or --manifest)")
        cases.append((args.case_id, args.seg, args.gt))

    rows: list[tuple[str, MetricsReport]] = []
    for case_id, seg_path, gt_path in cases:
        seg = _load_mask(seg_path, raw)
        gt = _load_mask(gt_path, raw)
        rows.append((case_id, score(seg, gt, args.band_mm)))

    write_csv(args.out_csv, rows)
    for case_id, r in rows:
        print(f"{case_id}: f1={r.f1:.4f} fdr={r.fdr:.4f} fnr={r.fnr:.4f}")
    return 0


def _cmd_phantom(args) -> int:
    suite = phantom_mod.canonical_suite()
    if args.list:
        for name in suite:
            print(name)
        return 0
    if args.name not in suite:
        raise InputError(f"unknown phantom {args.name!r}; try --list")
    if not args.out:
        raise InputError("phantom needs --out DIR")
    os.makedirs(args.out, exist_ok=True)
    volume, truths = phantom_mod.generate(suite[args.name])
    vol_path = os.path.join(args.out, "volume.mhd")
    metaimage.write_volume(volume, vol_path)
    print(f"wrote {vol_path}")
    for kind, truth in truths.items():
        path = os.path.join(args.out, f"truth_{kind}.mhd")
        metaimage.write_volume(truth, path)
        print(f"wrote {path}")
    return 0


def _cmd_render(args) -> int:
    raw = _raw_kwargs(args)
    volume = _load_any(args.volume, raw)
    mask = _load_mask(args.mask, raw) if args.mask else None
    gt = _load_mask(args.gt, raw) if args.gt else None
    render_overlay(volume, mask, gt, ViewAxis(args.axis), args.slice,
                   args.out_png)
    print(f"wrote {args.out_png}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fissureseg",
        description="Segment thin planar structures in 3D volumes and "
                    "evaluate the results.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="run the full segmentation pipeline")
    p.add_argument("--ct", required=True, help="input volume (.mhd or raw)")
    p.add_argument("--lung-mask", required=True,
                   help="mask/label volume restricting the search region")
    p.add_argument("--config", help="key = value parameter file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
    p.add_argument("--dump-intermediates", action="store_true",
                   help="write per-stage volumes under OUT/intermediates")
    _add_raw_flags(p)
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("evaluate", help="score a segmentation against a reference")
    p.add_argument("--seg", help="segmentation mask")
    p.add_argument("--gt", help="reference mask")
    p.add_argument("--case-id", default="case", help="row id for single mode")
    p.add_argument("--manifest", help="batch CSV: case_id,seg_path,gt_path")
    p.add_argument("--band-mm", type=float, default=3.0,
                   help="tolerance band width in mm")
    p.add_argument("--out-csv", required=True)
    _add_raw_flags(p)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("phantom", help="generate a synthetic test volume")
    p.add_argument("--name", help="phantom name (see --list)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--list", action="store_true", help="list phantom names")
    p.set_defaults(fn=_cmd_phantom)

    p = sub.add_parser("render", help="write a PNG slice overlay")
    p.add_argument("--volume", required=True)
    p.add_argument("--mask")
    p.add_argument("--gt")
    p.add_argument("--axis", choices=[v.value for v in ViewAxis],
                   default="sagittal")
    p.add_argument("--slice", type=int, required=True)
    p.add_argument("--out-png", required=True)
    _add_raw_flags(p)
    p.set_defaults(fn=_cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
