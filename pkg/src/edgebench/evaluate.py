"""Measurement: run pipelines over crops, count edge pixels inside the
object mask ("true positives"), and aggregate into the per-step report
tree and the per-crop table.

By default edges are detected on the *unmasked* crop and then intersected
with the mask, so the mask boundary itself never contributes edges. The
``mask_before_canny`` flag blackens the surroundings first instead, which
reproduces a mask-then-detect protocol (and its boundary artifacts).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .edges import canny
from .errors import DimensionMismatchError, IncompleteRecordsError, InvalidParameterError
from .imagecore import apply_mask
from .pipeline import (
    METHOD_ORDER,
    Method,
    Pipeline,
    PipelineParams,
    apply_method,
    enumerate_pipelines,
    pipeline_name,
    parse_pipeline,
    run_pipeline,
)

ORIGINAL = "original"

_CROP_ID_RE = re.compile(r"^i(\d+)_crop_(\d+)$")


@dataclass(frozen=True, order=True)
class CropId:
    """Names a crop as "i<image>_crop_<crop>", e.g. i0_crop_1."""

    image_index: int
    crop_index: int

    def __post_init__(self):
        if self.image_index < 0 or self.crop_index < 1:
            raise InvalidParameterError(f"bad crop id indices: {self.image_index}, {self.crop_index}")

    def __str__(self) -> str:
        return f"i{self.image_index}_crop_{self.crop_index}"

    @classmethod
    def parse(cls, text: str) -> "CropId":
        m = _CROP_ID_RE.match(text)
        if not m:
            raise InvalidParameterError(f"crop id must look like i0_crop_1, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class EvalRecord:
    """True-positive pixel count for one crop under one pipeline.

    ``pipeline`` is None for the unprocessed original.
    """

    crop: CropId
    pipeline: Pipeline | None
    tp_count: int


@dataclass
class ReportNode:
    """Node of the per-step report tree; ``method`` is None at the root.

    ``pct_change`` is relative to the parent node and None for the root or
    when the parent sum is zero.
    """

    method: Method | None
    tp_sum: int
    pct_change: float | None = None
    children: list["ReportNode"] = field(default_factory=list)


def tp_count(edges: np.ndarray, mask: np.ndarray) -> int:
    """Count pixels that are edge AND mask."""
    e = np.asarray(edges, dtype=bool)
    m = np.asarray(mask, dtype=bool)
    if e.shape != m.shape:
        raise DimensionMismatchError(f"edge map {e.shape} does not match mask {m.shape}")
    return int(np.count_nonzero(e & m))


def evaluate_one(
    crop: np.ndarray,
    mask: np.ndarray,
    pipeline: Pipeline | None,
    params: PipelineParams,
    mask_before_canny: bool = False,
) -> tuple[int, np.ndarray]:
    """Enhance, detect, mask-restrict, count. Returns (tp_count, edge map)."""
    processed = run_pipeline(crop, pipeline, params) if pipeline is not None else np.asarray(crop)
    detected = apply_mask(processed, mask) if mask_before_canny else processed
    edges = canny(detected, params.canny)
    return tp_count(edges, mask), edges


def evaluate_crop_maps(
    crop: np.ndarray,
    mask: np.ndarray,
    pipelines: list[Pipeline] | None = None,
    params: PipelineParams | None = None,
    mask_before_canny: bool = False,
) -> list[tuple[Pipeline | None, int, np.ndarray]]:
    """Counts plus edge maps for the original and every pipeline.

    Enhancement outputs are memoized along shared pipeline prefixes
    (brightening-clahe reuses the brightening image), which changes nothing
    numerically: each step is a pure function, so the composed result is
    byte-identical to running every pipeline from scratch.
    """
    params = params or PipelineParams()
    pipelines = enumerate_pipelines() if pipelines is None else pipelines
    m = np.asarray(mask, dtype=bool)
    crop = np.asarray(crop)
    if crop.shape[:2] != m.shape:
        raise DimensionMismatchError(f"crop {crop.shape[:2]} vs mask {m.shape}")
    if not m.any():
        raise InvalidParameterError("mask excludes every pixel")

    images: dict[tuple[Method, ...], np.ndarray] = {(): crop}

    def image_for(path: tuple[Method, ...]) -> np.ndarray:
        if path not in images:
            images[path] = apply_method(image_for(path[:-1]), path[-1], params)
        return images[path]

    results = []
    for pipeline in [None, *pipelines]:
        processed = image_for(() if pipeline is None else pipeline.steps)
        detected = apply_mask(processed, m) if mask_before_canny else processed
        edges = canny(detected, params.canny)
        results.append((pipeline, tp_count(edges, m), edges))
    return results


def evaluate_crop(
    crop: np.ndarray,
    mask: np.ndarray,
    pipelines: list[Pipeline] | None = None,
    params: PipelineParams | None = None,
    crop_id: CropId = CropId(0, 1),
    mask_before_canny: bool = False,
) -> list[EvalRecord]:
    """One record for the unprocessed crop plus one per pipeline."""
    return [
        EvalRecord(crop_id, pipeline, count)
        for pipeline, count, _ in evaluate_crop_maps(crop, mask, pipelines, params, mask_before_canny)
    ]


def _record_key(pipeline: Pipeline | None) -> str:
    return ORIGINAL if pipeline is None else pipeline_name(pipeline)


def _aggregate(records: list[EvalRecord]) -> tuple[list[CropId], dict[tuple[CropId, str], int]]:
    """Index records by (crop, pipeline) and require a full 16-cell grid."""
    if not records:
        raise IncompleteRecordsError("no evaluation records")
    cells: dict[tuple[CropId, str], int] = {}
    for rec in records:
        key = (rec.crop, _record_key(rec.pipeline))
        if key in cells and cells[key] != rec.tp_count:
            raise InvalidParameterError(f"conflicting records for {key[0]} / {key[1]}")
        cells[key] = rec.tp_count
    crops = sorted({rec.crop for rec in records})
    wanted = [ORIGINAL] + [pipeline_name(p) for p in enumerate_pipelines()]
    for crop in crops:
        for name in wanted:
            if (crop, name) not in cells:
                raise IncompleteRecordsError(f"missing record for {crop} / {name}")
    return crops, cells


def build_report_tree(records: list[EvalRecord]) -> ReportNode:
    """Sum counts over all crops along every method path (the 16-node tree)."""
    crops, cells = _aggregate(records)

    def path_sum(path: tuple[Method, ...]) -> int:
        name = ORIGINAL if not path else pipeline_name(Pipeline(path))
        return sum(cells[(crop, name)] for crop in crops)

    def build(path: tuple[Method, ...], parent_sum: int | None) -> ReportNode:
        total = path_sum(path)
        if parent_sum is None:
            pct = None
        elif parent_sum > 0:
            pct = 100.0 * (total - parent_sum) / parent_sum
        else:
            pct = None
        node = ReportNode(method=path[-1] if path else None, tp_sum=total, pct_change=pct)
        if len(path) < len(METHOD_ORDER):
            node.children = [build(path + (m,), total) for m in METHOD_ORDER if m not in path]
        return node

    return build((), None)


def emit_table(records: list[EvalRecord]) -> str:
    """CSV: one row per crop, "original" first then the 15 pipelines."""
    crops, cells = _aggregate(records)
    columns = [ORIGINAL] + [pipeline_name(p) for p in enumerate_pipelines()]
    lines = [",".join(["crop", *columns])]
    for crop in crops:
        lines.append(",".join([str(crop)] + [str(cells[(crop, name)]) for name in columns]))
    return "\n".join(lines) + "\n"


def _node_to_obj(node: ReportNode, is_root: bool) -> dict:
    obj: dict = {
        "method": node.method.value if node.method is not None else ORIGINAL,
        "tp_sum": node.tp_sum,
    }
    if not is_root:
        obj["pct_change"] = None if node.pct_change is None else f"{node.pct_change:+.2f}"
    obj["children"] = [_node_to_obj(child, False) for child in node.children]
    return obj


def emit_report_json(tree: ReportNode) -> str:
    """Serialize the report tree; percentages carry an explicit sign and two
    decimals ("+54.23"), the root has no pct_change field."""
    return json.dumps(_node_to_obj(tree, True), indent=2) + "\n"


def parse_report_json(text: str) -> ReportNode:
    def build(obj: dict) -> ReportNode:
        method = None if obj["method"] == ORIGINAL else Method(obj["method"])
        pct = obj.get("pct_change")
        return ReportNode(
            method=method,
            tp_sum=int(obj["tp_sum"]),
            pct_change=None if pct is None else float(pct),
            children=[build(c) for c in obj.get("children", [])],
        )

    return build(json.loads(text))


def summarize_method_effect(tree: ReportNode) -> dict[Method, tuple[float, float]]:
    """(min, max) pct_change over every tree edge labeled with each method."""
    ranges: dict[Method, tuple[float, float]] = {}

    def walk(node: ReportNode) -> None:
        for child in node.children:
            if child.pct_change is not None:
                lo, hi = ranges.get(child.method, (child.pct_change, child.pct_change))
                ranges[child.method] = (min(lo, child.pct_change), max(hi, child.pct_change))
            walk(child)

    walk(tree)
    return ranges


def records_to_json(records: list[EvalRecord]) -> str:
    """Cache format used by the CLI so reports can be rebuilt without rerunning."""
    rows = [
        {
            "crop": str(rec.crop),
            "pipeline": None if rec.pipeline is None else pipeline_name(rec.pipeline),
            "tp_count": rec.tp_count,
        }
        for rec in records
    ]
    return json.dumps({"records": rows}, indent=2) + "\n"


def records_from_json(text: str) -> list[EvalRecord]:
    try:
        payload = json.loads(text)
        rows = payload["records"]
        return [
            EvalRecord(
                crop=CropId.parse(row["crop"]),
                pipeline=None if row["pipeline"] is None else parse_pipeline(row["pipeline"]),
                tp_count=int(row["tp_count"]),
            )
            for row in rows
        ]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InvalidParameterError(f"malformed records cache: {exc}") from exc
