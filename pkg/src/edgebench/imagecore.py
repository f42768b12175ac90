"""Pixel buffers, color conversion, raster file I/O, cropping and masking.

Array conventions used throughout the package:

* color image: ``uint8`` array of shape ``(h, w, 3)``, RGB channel order
* grayscale image: ``uint8`` array of shape ``(h, w)``
* float plane: ``float64`` array of shape ``(h, w)``
* HSV plane: ``float64`` array of shape ``(h, w, 3)``; hue in degrees
  [0, 360), saturation and value in [0, 1]
* mask: ``bool`` array of shape ``(h, w)``, True = pixel participates

All functions return new arrays and never mutate their inputs, so buffers
are safe to share across worker processes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ChannelMismatchError,
    CorruptDataError,
    DimensionMismatchError,
    InvalidParameterError,
    OutOfBoundsError,
    UnsupportedFormatError,
)

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned crop window; (x, y) is the top-left corner."""

    x: int
    y: int
    w: int
    h: int


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check that ``img`` is a uint8 grayscale or RGB raster and return it."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise InvalidParameterError(f"image must be uint8, got {arr.dtype}")
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise InvalidParameterError(f"color images must have 3 channels, got {arr.shape[2]}")
    if arr.ndim not in (2, 3):
        raise InvalidParameterError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidParameterError(f"image must be at least 1x1, got shape {arr.shape}")
    return arr


def load_image(path) -> np.ndarray:
    """Load an 8-bit PNG, binary PPM (P6) or PGM (P5) file.

    Returns an (h, w, 3) array for color sources and (h, w) for grayscale.
    16-bit files and alpha channels are rejected rather than converted.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image: {path}")
    data = path.read_bytes()
    if data[:8] == _PNG_SIGNATURE:
        return _decode_png(data, path)
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data, path)
    raise UnsupportedFormatError(f"{path}: not a PNG, PPM (P6) or PGM (P5) file")


def save_image(img: np.ndarray, path) -> None:
    """Write ``img`` as PNG, PPM or PGM depending on the file extension.

    The written file reloads byte-exactly via :func:`load_image`.
    """
    arr = validate_image(img)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        Image.fromarray(arr).save(path, format="PNG")
    elif suffix == ".ppm":
        if arr.ndim != 3:
            raise UnsupportedFormatError("PPM (P6) stores color images; use .pgm for grayscale")
        _write_pnm(arr, b"P6", path)
    elif suffix == ".pgm":
        if arr.ndim != 2:
            raise UnsupportedFormatError("PGM (P5) stores grayscale images; use .ppm for color")
        _write_pnm(arr, b"P5", path)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported extension (use .png, .ppm or .pgm)")


def _decode_png(data: bytes, path: Path) -> np.ndarray:
    if len(data) < 25:
        raise CorruptDataError(f"{path}: truncated PNG header")
    bit_depth = data[24]
    if bit_depth == 16:
        raise UnsupportedFormatError(f"{path}: 16-bit PNG is not supported")
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            if im.mode == "P":
                im = im.convert("RGB")
            elif im.mode == "1":
                im = im.convert("L")
            if im.mode not in ("L", "RGB"):
                raise UnsupportedFormatError(
                    f"{path}: unsupported PNG mode {im.mode!r} (alpha and 16-bit are rejected)"
                )
            return np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise CorruptDataError(f"{path}: unreadable PNG stream") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptDataError(f"{path}: corrupt PNG data ({exc})") from exc


def _decode_pnm(data: bytes, path: Path) -> np.ndarray:
    (width, height, maxval), offset = _parse_pnm_header(data, path)
    if width < 1 or height < 1:
        raise CorruptDataError(f"{path}: bad PNM dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: PNM maxval must be 255, got {maxval}")
    channels = 3 if data[:2] == b"P6" else 1
    need = width * height * channels
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise CorruptDataError(f"{path}: PNM payload truncated ({len(payload)} of {need} bytes)")
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 3:
        return arr.reshape(height, width, 3).copy()
    return arr.reshape(height, width).copy()


def _parse_pnm_header(data: bytes, path: Path) -> tuple[tuple[int, int, int], int]:
    # Magic, then three whitespace/comment-separated integers, then a single
    # whitespace byte before the raster payload.
    pos = 2
    n = len(data)
    values = []
    while len(values) < 3:
        while pos < n and (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
            if data[pos : pos + 1] == b"#":
                while pos < n and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise CorruptDataError(f"{path}: malformed PNM header")
        values.append(int(data[start:pos]))
    if pos >= n or not data[pos : pos + 1].isspace():
        raise CorruptDataError(f"{path}: malformed PNM header")
    return (values[0], values[1], values[2]), pos + 1


def _write_pnm(arr: np.ndarray, magic: bytes, path: Path) -> None:
    h, w = arr.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, w, h)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Standard hexcone RGB -> HSV; hue in [0, 360), gray pixels get h = 0."""
    arr = _require_color(img)
    rgb = arr.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn
    safe = np.where(delta > 0.0, delta, 1.0)
    h = np.where(
        mx == r,
        ((g - b) / safe) % 6.0,
        np.where(mx == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    )
    h = np.where(delta > 0.0, 60.0 * h, 0.0)
    s = np.where(mx > 0.0, delta / np.where(mx > 0.0, mx, 1.0), 0.0)
    return np.stack([h, s, mx], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse hexcone mapping, rounding to the nearest 8-bit value."""
    arr = np.asarray(hsv, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidParameterError(f"HSV plane must have shape (h, w, 3), got {arr.shape}")
    h, s, v = arr[..., 0], arr[..., 1], arr[..., 2]
    if (
        not np.all(np.isfinite(arr))
        or np.any((h < 0.0) | (h >= 360.0))
        or np.any((s < 0.0) | (s > 1.0))
        or np.any((v < 0.0) | (v > 1.0))
    ):
        raise InvalidParameterError("HSV fields out of range: need h in [0, 360), s and v in [0, 1]")
    c = v * s
    hp = h / 60.0
    x = c * (1.0 - np.abs(hp % 2.0 - 1.0))
    sector = np.floor(hp).astype(np.int64) % 6
    zeros = np.zeros_like(c)
    r1 = np.choose(sector, [c, x, zeros, zeros, x, c])
    g1 = np.choose(sector, [x, c, c, x, zeros, zeros])
    b1 = np.choose(sector, [zeros, zeros, x, c, c, x])
    rgb = np.stack([r1, g1, b1], axis=-1) + (v - c)[..., None]
    return np.floor(rgb * 255.0 + 0.5).astype(np.uint8)


def crop(img: np.ndarray, rect: Rect) -> np.ndarray:
    """Copy the ``rect`` window out of ``img``."""
    arr = np.asarray(img)
    if arr.ndim not in (2, 3):
        raise InvalidParameterError(f"cannot crop array of shape {arr.shape}")
    h, w = arr.shape[:2]
    if rect.w < 1 or rect.h < 1 or rect.x < 0 or rect.y < 0 or rect.x + rect.w > w or rect.y + rect.h > h:
        raise OutOfBoundsError(f"crop {rect} outside {w}x{h} image")
    return arr[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w].copy()


def apply_mask(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero every pixel where ``mask`` is False; masked-in pixels are untouched."""
    arr = np.asarray(img)
    m = np.asarray(mask, dtype=bool)
    if arr.shape[:2] != m.shape:
        raise DimensionMismatchError(f"mask {m.shape} does not match image {arr.shape[:2]}")
    out = arr.copy()
    out[~m] = 0
    return out


def mask_from_image(img: np.ndarray) -> np.ndarray:
    """Interpret a raster as a mask: samples > 127 are included.

    Color rasters are reduced with the ITU-R 601 luma first.
    """
    arr = np.asarray(img)
    if arr.ndim == 3:
        gray = 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]
    else:
        gray = arr
    return np.asarray(gray > 127)


def mask_to_image(mask: np.ndarray) -> np.ndarray:
    """Render a mask as an 8-bit grayscale raster (0 / 255)."""
    return np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)


def load_mask(path) -> np.ndarray:
    """Load a mask file; it must include at least one pixel."""
    mask = mask_from_image(load_image(path))
    if not mask.any():
        raise InvalidParameterError(f"{path}: mask excludes every pixel")
    return mask


def _require_color(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ChannelMismatchError(f"expected a 3-channel image, got shape {arr.shape}")
    return arr
