"""Batch front-end: `enhance` and `canny` for single images, `bench` to run
the full 15-pipeline benchmark over a manifest of crops and masks, and
`report` to rebuild the outputs from a cached record set.

Exit codes: 0 success, 1 runtime failure, 2 usage or manifest error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .edges import canny, edges_to_image
from .errors import (
    ImageError,
    IncompleteRecordsError,
    InvalidParameterError,
)
from .evaluate import (
    CropId,
    EvalRecord,
    build_report_tree,
    emit_report_json,
    emit_table,
    evaluate_crop_maps,
    records_from_json,
    records_to_json,
    summarize_method_effect,
)
from .imagecore import Rect, crop, load_image, load_mask, save_image
from .pipeline import (
    METHOD_ORDER,
    Pipeline,
    PipelineParams,
    params_from_obj,
    parse_pipeline,
    pipeline_name,
    run_pipeline,
)

ORIGINAL = "original"


class ManifestError(Exception):
    """Manifest file is structurally invalid."""


class UsageError(Exception):
    """Bad command-line arguments."""


@dataclass(frozen=True)
class ManifestEntry:
    crop_id: CropId
    image_path: Path
    mask_path: Path
    rect: Rect | None


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    output_dir: Path
    params: PipelineParams


def load_manifest(path) -> Manifest:
    """Parse and validate a bench manifest (JSON).

    Relative paths inside the manifest resolve against the manifest's own
    directory.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    unknown = set(payload) - {"entries", "output_dir", "params"}
    if unknown:
        raise ManifestError(f"{path}: unknown manifest keys {sorted(unknown)}")

    base = path.parent
    raw_entries = payload.get("entries")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise ManifestError(f"{path}: manifest needs a non-empty 'entries' list")
    entries = []
    seen = set()
    for i, raw in enumerate(raw_entries):
        try:
            crop_id = CropId.parse(raw["crop_id"])
            rect = None if raw.get("rect") is None else Rect(*(int(x) for x in raw["rect"]))
            entry = ManifestEntry(
                crop_id=crop_id,
                image_path=base / raw["image"],
                mask_path=base / raw["mask"],
                rect=rect,
            )
        except (KeyError, TypeError, InvalidParameterError) as exc:
            raise ManifestError(f"{path}: bad entry #{i}: {exc}") from exc
        if crop_id in seen:
            raise ManifestError(f"{path}: duplicate crop_id {crop_id}")
        seen.add(crop_id)
        entries.append(entry)

    try:
        params = params_from_obj(payload.get("params"))
    except InvalidParameterError as exc:
        raise ManifestError(f"{path}: bad params: {exc}") from exc
    output_dir = base / str(payload.get("output_dir", "results"))
    return Manifest(entries=tuple(entries), output_dir=output_dir, params=params)


def _parse_tiles(text: str) -> tuple[int, int]:
    try:
        if "x" in text:
            x, y = text.split("x", 1)
            return int(x), int(y)
        return int(text), int(text)
    except ValueError as exc:
        raise UsageError(f"--tiles expects N or NxM, got {text!r}") from exc


def _parse_scales(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--scales expects comma-separated numbers, got {text!r}") from exc


def _override_params(base: PipelineParams, args: argparse.Namespace) -> PipelineParams:
    """Fold CLI flag overrides into a parameter set."""
    try:
        brightening = base.brightening
        if getattr(args, "k", None) is not None:
            brightening = dataclasses.replace(brightening, k=args.k)
        retinex = base.retinex
        if getattr(args, "scales", None) is not None:
            scales = _parse_scales(args.scales)
            retinex = dataclasses.replace(retinex, scales=scales, weights=None)
        clahe_params = base.clahe
        if getattr(args, "clip_limit", None) is not None:
            clahe_params = dataclasses.replace(clahe_params, clip_limit=args.clip_limit)
        if getattr(args, "tiles", None) is not None:
            tiles_x, tiles_y = _parse_tiles(args.tiles)
            clahe_params = dataclasses.replace(clahe_params, tiles_x=tiles_x, tiles_y=tiles_y)
        canny_params = base.canny
        if getattr(args, "low", None) is not None:
            canny_params = dataclasses.replace(canny_params, low_threshold=args.low)
        if getattr(args, "high", None) is not None:
            canny_params = dataclasses.replace(canny_params, high_threshold=args.high)
        if getattr(args, "sigma", None) is not None:
            canny_params = dataclasses.replace(canny_params, blur_sigma=args.sigma)
        return PipelineParams(
            brightening=brightening, retinex=retinex, clahe=clahe_params, canny=canny_params
        )
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from exc


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=float, help="brightening gain per pixel of distance")
    parser.add_argument("--scales", help="retinex surround scales, e.g. 15,80,250")
    parser.add_argument("--clip-limit", dest="clip_limit", type=float, help="CLAHE clip limit")
    parser.add_argument("--tiles", help="CLAHE tile grid: N or NxM")
    parser.add_argument("--low", type=float, help="canny low threshold")
    parser.add_argument("--high", type=float, help="canny high threshold")
    parser.add_argument("--sigma", type=float, help="canny pre-blur sigma (0 disables)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgebench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_enhance = sub.add_parser("enhance", help="apply a method or pipeline to one image")
    p_enhance.add_argument("input")
    p_enhance.add_argument("pipeline", help="e.g. clahe or brightening-retinex-clahe")
    p_enhance.add_argument("output")
    _add_param_flags(p_enhance)
    p_enhance.set_defaults(func=cmd_enhance)

    p_canny = sub.add_parser("canny", help="write the binary edge map of one image")
    p_canny.add_argument("input")
    p_canny.add_argument("output")
    _add_param_flags(p_canny)
    p_canny.set_defaults(func=cmd_canny)

    p_bench = sub.add_parser("bench", help="run the 15-pipeline benchmark over a manifest")
    p_bench.add_argument("manifest")
    p_bench.add_argument("--out", help="output directory (overrides the manifest)")
    p_bench.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    p_bench.add_argument(
        "--mask-before-canny",
        action="store_true",
        help="blacken outside the mask before edge detection (mask-then-detect order)",
    )
    _add_param_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_report = sub.add_parser("report", help="rebuild table/tree from cached records.json")
    p_report.add_argument("outdir", help="bench output directory containing records.json")
    p_report.set_defaults(func=cmd_report)

    return parser


def cmd_enhance(args: argparse.Namespace) -> int:
    try:
        pipeline = parse_pipeline(args.pipeline)
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from exc
    params = _override_params(PipelineParams(), args)
    img = load_image(args.input)
    save_image(run_pipeline(img, pipeline, params), args.output)
    return 0


def cmd_canny(args: argparse.Namespace) -> int:
    params = _override_params(PipelineParams(), args)
    img = load_image(args.input)
    save_image(edges_to_image(canny(img, params.canny)), args.output)
    return 0


def _eval_task(task) -> list[tuple[Pipeline | None, int, np.ndarray]]:
    img, mask, params, mask_before = task
    return evaluate_crop_maps(img, mask, params=params, mask_before_canny=mask_before)


def cmd_bench(args: argparse.Namespace) -> int:
    if args.jobs is not None and args.jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {args.jobs}")
    manifest = load_manifest(args.manifest)
    params = _override_params(manifest.params, args)
    outdir = Path(args.out) if args.out else manifest.output_dir
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)

    loaded = []
    failures = []
    for entry in manifest.entries:
        try:
            img = load_image(entry.image_path)
            if entry.rect is not None:
                img = crop(img, entry.rect)
            if img.ndim != 3:
                raise InvalidParameterError("benchmark crops must be color images")
            mask = load_mask(entry.mask_path)
            if mask.shape != img.shape[:2]:
                raise InvalidParameterError(
                    f"mask {mask.shape} does not match crop {img.shape[:2]}"
                )
            loaded.append((entry.crop_id, img, mask))
        except Exception as exc:  # keep the batch alive, report at the end
            failures.append((entry.crop_id, str(exc)))

    records: list[EvalRecord] = []
    if loaded:
        tasks = [(img, mask, params, args.mask_before_canny) for _, img, mask in loaded]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_eval_task, tasks, chunksize=1))
        else:
            results = [_eval_task(task) for task in tasks]

        outdir.mkdir(parents=True, exist_ok=True)
        for (crop_id, _, _), crop_results in zip(loaded, results):
            crop_dir = outdir / str(crop_id)
            crop_dir.mkdir(parents=True, exist_ok=True)
            for variant, count, edge_map in crop_results:
                records.append(EvalRecord(crop_id, variant, count))
                name = ORIGINAL if variant is None else pipeline_name(variant)
                save_image(edges_to_image(edge_map), crop_dir / f"{name}.png")

        (outdir / "records.json").write_text(records_to_json(records), encoding="utf-8")
        _write_reports(records, outdir)

    for crop_id, message in failures:
        print(f"FAILED {crop_id}: {message}", file=sys.stderr)
    return 1 if failures else 0


def cmd_report(args: argparse.Namespace) -> int:
    outdir = Path(args.outdir)
    records = records_from_json((outdir / "records.json").read_text(encoding="utf-8"))
    _write_reports(records, outdir)
    return 0


def _write_reports(records: list[EvalRecord], outdir: Path) -> None:
    tree = build_report_tree(records)
    (outdir / "table.csv").write_text(emit_table(records), encoding="utf-8")
    (outdir / "report.json").write_text(emit_report_json(tree), encoding="utf-8")
    crops = len({rec.crop for rec in records})
    print(f"crops: {crops}, original tp sum: {tree.tp_sum}")
    ranges = summarize_method_effect(tree)
    for method in METHOD_ORDER:
        if method in ranges:
            lo, hi = ranges[method]
            print(f"{method.value}: {lo:+.2f}% .. {hi:+.2f}%")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ImageError, InvalidParameterError, IncompleteRecordsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
