"""Deterministic synthetic benchmark corpus.

Each crop is a dim, noisy, teal seafloor-style background holding one
low-contrast elliptical object. Object interiors carry fine texture and a
spread of sub-blob contrasts (every third image instead splits the object
into a bright half and a deep shadow half); the background gets a few dark
patches. Those ingredients give the three enhancement methods room to move
edge counts in different directions, which is what the benchmark measures.
An elliptical mask with a small margin accompanies every crop.

Everything is reproducible from a seed, so tests can pin exact counts.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .enhance import ClaheParams
from .evaluate import CropId
from .imagecore import mask_to_image, save_image
from .pipeline import PipelineParams, params_to_obj

# Channel gains with ITU-R 601 luma ~= 1, so the luma patterns below are what
# the edge detector effectively sees.
_CHANNEL_GAINS = (0.656, 1.094, 1.422)

_BACKGROUND = 36.0
_NOISE_SIGMA = 4.0
_BODY_DELTA = 40.0
_BLOB_DELTA = (25.0, 150.0)
_BLOBS_PER_OBJECT = 6
_TEXTURE_AMPLITUDE = 12.0
_TEXTURE_CELL = 4
_DARK_PATCHES = 3
_DARK_VALUE = 12.0
_SHADOW_SPLIT = (14.0, 195.0)  # dark half / bright half absolute levels
_SHADOW_EVERY = 3  # every n-th crop is a shadow-split object
_MASK_PAD = 4.0


def corpus_params(size: int = 128) -> PipelineParams:
    """Benchmark profile for the synthetic corpus.

    Everything is at its default except the CLAHE grid: a 50x50 grid on a
    128 px crop would degenerate to 2-3 px micro-tiles, so the grid is
    scaled to keep tiles around 16 px, the tile size a 50x50 grid yields on
    full-size survey crops.
    """
    tiles = max(1, int(size) // 16)
    return PipelineParams(clahe=ClaheParams(clip_limit=2.0, tiles_x=tiles, tiles_y=tiles))


def _value_noise(rng: np.random.Generator, size: int, cell: int) -> np.ndarray:
    """Smooth value noise: a coarse Gaussian grid, bilinearly upsampled."""
    grid = rng.normal(0.0, 1.0, (size // cell + 2, size // cell + 2))
    yy, xx = np.mgrid[0:size, 0:size] / cell
    y0 = yy.astype(int)
    x0 = xx.astype(int)
    fy = yy - y0
    fx = xx - x0
    top = grid[y0, x0] * (1 - fx) + grid[y0, x0 + 1] * fx
    bottom = grid[y0 + 1, x0] * (1 - fx) + grid[y0 + 1, x0 + 1] * fx
    return top * (1 - fy) + bottom * fy


def synthetic_crop(rng: np.random.Generator, size: int = 128, shadow: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """One (image, mask) pair; all randomness comes from ``rng``."""
    h = w = int(size)
    scale = size / 128.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)

    ramp_x, ramp_y = rng.uniform(-8.0, 8.0, size=2)
    luma = _BACKGROUND + rng.uniform(-3.0, 3.0) + ramp_x * (xx / w - 0.5) + ramp_y * (yy / h - 0.5)

    cx = w * rng.uniform(0.44, 0.56)
    cy = h * rng.uniform(0.44, 0.56)
    ax = w * rng.uniform(0.20, 0.27)
    ay = h * rng.uniform(0.16, 0.23)
    theta = rng.uniform(0.0, np.pi)
    u = (xx - cx) * np.cos(theta) + (yy - cy) * np.sin(theta)
    v = -(xx - cx) * np.sin(theta) + (yy - cy) * np.cos(theta)
    inside = (u / ax) ** 2 + (v / ay) ** 2 <= 1.0
    obj = np.where(inside, _BODY_DELTA, 0.0)

    if shadow:
        split_dir = rng.uniform(0.0, np.pi)
        half = ((xx - cx) * np.cos(split_dir) + (yy - cy) * np.sin(split_dir)) >= 0
        dark_level, bright_level = _SHADOW_SPLIT
        obj = np.where(inside & half, bright_level - _BACKGROUND, obj)
        obj = np.where(inside & ~half, dark_level - _BACKGROUND, obj)
    else:
        deltas = np.linspace(*_BLOB_DELTA, _BLOBS_PER_OBJECT) * rng.uniform(0.85, 1.15, _BLOBS_PER_OBJECT)
        for delta in deltas:
            for _ in range(60):
                bu = rng.uniform(-0.6, 0.6) * ax
                bv = rng.uniform(-0.6, 0.6) * ay
                br = rng.uniform(3.0, 6.5) * scale
                bx = cx + bu * np.cos(theta) - bv * np.sin(theta)
                by = cy + bu * np.sin(theta) + bv * np.cos(theta)
                blob = (xx - bx) ** 2 + (yy - by) ** 2 <= br * br
                if (blob & inside).sum() == blob.sum():
                    obj = np.where(blob, _BODY_DELTA + delta, obj)
                    break

    luma = luma + obj + inside * (_value_noise(rng, size, _TEXTURE_CELL) * _TEXTURE_AMPLITUDE)
    mask = (u / (ax + _MASK_PAD * scale)) ** 2 + (v / (ay + _MASK_PAD * scale)) ** 2 <= 1.0

    for _ in range(_DARK_PATCHES):
        for _ in range(60):
            px, py = rng.uniform(0.08, 0.92, size=2) * size
            pr = rng.uniform(6.0, 11.0) * scale
            patch = (xx - px) ** 2 + (yy - py) ** 2 <= pr * pr
            if not (patch & mask).any():
                luma = np.where(patch, _DARK_VALUE + rng.uniform(0.0, 3.0), luma)
                break

    luma = luma + rng.normal(0.0, _NOISE_SIGMA, size=(h, w))
    img = np.clip(
        np.floor(np.stack([luma * g for g in _CHANNEL_GAINS], axis=-1) + 0.5), 0, 255
    ).astype(np.uint8)
    return img, mask


def make_corpus(count: int = 8, size: int = 128, seed: int = 11) -> list[tuple[CropId, np.ndarray, np.ndarray]]:
    """``count`` deterministic (crop id, image, mask) triples."""
    rng = np.random.default_rng(seed)
    corpus = []
    for i in range(count):
        shadow = i % _SHADOW_EVERY == _SHADOW_EVERY - 1
        img, mask = synthetic_crop(rng, size, shadow=shadow)
        corpus.append((CropId(i, 1), img, mask))
    return corpus


def write_corpus(
    dest_dir,
    count: int = 8,
    size: int = 128,
    seed: int = 11,
    params: PipelineParams | None = None,
) -> Path:
    """Materialize the corpus plus a bench manifest; returns the manifest path.

    The manifest embeds :func:`corpus_params` unless ``params`` is given.
    """
    dest = Path(dest_dir)
    dest.mkdir(parents=True, exist_ok=True)
    entries = []
    for crop_id, img, mask in make_corpus(count, size, seed):
        image_name = f"{crop_id}.png"
        mask_name = f"{crop_id}_mask.png"
        save_image(img, dest / image_name)
        save_image(mask_to_image(mask), dest / mask_name)
        entries.append({"crop_id": str(crop_id), "image": image_name, "mask": mask_name, "rect": None})
    manifest = {
        "output_dir": "results",
        "params": params_to_obj(params if params is not None else corpus_params(size)),
        "entries": entries,
    }
    manifest_path = dest / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path
