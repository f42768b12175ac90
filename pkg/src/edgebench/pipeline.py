"""Enumerate and execute the ordered, duplicate-free combinations of the
three enhancement methods: 3 singletons + 6 pairs + 6 triples = 15.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .edges import CannyParams
from .enhance import (
    BrighteningParams,
    ClaheParams,
    RetinexParams,
    clahe,
    msrcr,
    radial_brighten,
)
from .errors import ChannelMismatchError, InvalidParameterError


class Method(Enum):
    BRIGHTENING = "brightening"
    CLAHE = "clahe"
    RETINEX = "retinex"


#: Canonical ordering used for enumeration and report columns.
METHOD_ORDER = (Method.BRIGHTENING, Method.CLAHE, Method.RETINEX)


@dataclass(frozen=True)
class Pipeline:
    """Ordered, non-empty sequence of distinct methods (at most one each)."""

    steps: tuple[Method, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        if not 1 <= len(steps) <= len(METHOD_ORDER):
            raise InvalidParameterError(f"pipeline needs 1..{len(METHOD_ORDER)} steps, got {len(steps)}")
        if len(set(steps)) != len(steps):
            raise InvalidParameterError(f"pipeline repeats a method: {steps}")
        if not all(isinstance(s, Method) for s in steps):
            raise InvalidParameterError(f"pipeline steps must be Method values: {steps}")


@dataclass(frozen=True)
class PipelineParams:
    """One shared parameter set for every pipeline in a run."""

    brightening: BrighteningParams = field(default_factory=BrighteningParams)
    retinex: RetinexParams = field(default_factory=RetinexParams)
    clahe: ClaheParams = field(default_factory=ClaheParams)
    canny: CannyParams = field(default_factory=CannyParams)


def enumerate_pipelines() -> list[Pipeline]:
    """All 15 pipelines, ordered by length then lexicographically."""
    out = []
    for length in range(1, len(METHOD_ORDER) + 1):
        for steps in itertools.permutations(METHOD_ORDER, length):
            out.append(Pipeline(steps))
    return out


def pipeline_name(pipeline: Pipeline) -> str:
    """Hyphen-joined method names, e.g. "retinex-brightening-clahe"."""
    return "-".join(step.value for step in pipeline.steps)


def parse_pipeline(name: str) -> Pipeline:
    """Inverse of :func:`pipeline_name`."""
    try:
        steps = tuple(Method(part) for part in name.split("-"))
    except ValueError as exc:
        raise InvalidParameterError(f"unknown method in pipeline name {name!r}") from exc
    return Pipeline(steps)


def apply_method(img: np.ndarray, method: Method, params: PipelineParams) -> np.ndarray:
    if method is Method.BRIGHTENING:
        return radial_brighten(img, params.brightening)
    if method is Method.CLAHE:
        return clahe(img, params.clahe)
    return msrcr(img, params.retinex)


def run_pipeline(img: np.ndarray, pipeline: Pipeline, params: PipelineParams | None = None) -> np.ndarray:
    """Apply the pipeline's steps left to right."""
    params = params or PipelineParams()
    out = np.asarray(img)
    if out.ndim != 3 or out.shape[2] != 3:
        raise ChannelMismatchError(f"pipelines run on 3-channel images, got shape {out.shape}")
    for step in pipeline.steps:
        out = apply_method(out, step, params)
    return out


def params_to_obj(params: PipelineParams) -> dict:
    """Plain-dict form of the parameter set, as stored in manifests."""
    return {
        "brightening": {
            "k": params.brightening.k,
            "anchor": None if params.brightening.anchor is None else list(params.brightening.anchor),
        },
        "retinex": {
            "scales": list(params.retinex.scales),
            "weights": list(params.retinex.weights),
            "alpha": params.retinex.alpha,
            "beta": params.retinex.beta,
            "gain": params.retinex.gain,
            "offset": params.retinex.offset,
        },
        "clahe": {
            "clip_limit": params.clahe.clip_limit,
            "tiles_x": params.clahe.tiles_x,
            "tiles_y": params.clahe.tiles_y,
        },
        "canny": {
            "low_threshold": params.canny.low_threshold,
            "high_threshold": params.canny.high_threshold,
            "blur_sigma": params.canny.blur_sigma,
            "blur_radius": params.canny.blur_radius,
        },
    }


def params_from_obj(obj: dict | None) -> PipelineParams:
    """Inverse of :func:`params_to_obj`; missing fields keep their defaults."""
    obj = obj or {}
    unknown = set(obj) - {"brightening", "retinex", "clahe", "canny"}
    if unknown:
        raise InvalidParameterError(f"unknown params sections: {sorted(unknown)}")

    def build(cls, section, convert=None):
        fields = dict(obj.get(section) or {})
        if convert:
            for key, fn in convert.items():
                if key in fields and fields[key] is not None:
                    fields[key] = fn(fields[key])
        try:
            return cls(**fields)
        except TypeError as exc:
            raise InvalidParameterError(f"bad {section} params: {exc}") from exc

    return PipelineParams(
        brightening=build(BrighteningParams, "brightening", {"anchor": tuple}),
        retinex=build(RetinexParams, "retinex", {"scales": tuple, "weights": tuple}),
        clahe=build(ClaheParams, "clahe"),
        canny=build(CannyParams, "canny"),
    )
