"""The three enhancement operators: radial brightening, Retinex (SSR /
MSR / MSRCR) and CLAHE.

Every operator is a pure function: uint8 in, uint8 out, dimensions
preserved, deterministic down to the byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ChannelMismatchError, InvalidParameterError
from .imagecore import hsv_to_rgb, rgb_to_hsv

DEFAULT_BRIGHTENING_GAIN = 0.00025
DEFAULT_RETINEX_SCALES = (15.0, 80.0, 250.0)


@dataclass(frozen=True)
class BrighteningParams:
    """Distance-proportional V-channel gain.

    ``anchor`` is the (x, y) pixel the distance is measured from; None means
    bottom-center, (width // 2, height - 1).
    """

    k: float = DEFAULT_BRIGHTENING_GAIN
    anchor: tuple[int, int] | None = None

    def __post_init__(self):
        if self.k < 0:
            raise InvalidParameterError(f"brightening gain k must be >= 0, got {self.k}")


@dataclass(frozen=True)
class RetinexParams:
    """MSRCR constants. Defaults follow the classic parameterization:
    scales (15, 80, 250) with uniform weights, alpha 125, beta 46,
    gain 192, offset -30.
    """

    scales: tuple[float, ...] = DEFAULT_RETINEX_SCALES
    weights: tuple[float, ...] | None = None
    alpha: float = 125.0
    beta: float = 46.0
    gain: float = 192.0
    offset: float = -30.0

    def __post_init__(self):
        scales = tuple(float(c) for c in self.scales)
        if not scales or any(c <= 0 for c in scales):
            raise InvalidParameterError(f"scales must be nonempty and positive, got {self.scales}")
        object.__setattr__(self, "scales", scales)
        if self.weights is None:
            weights = (1.0 / len(scales),) * len(scales)
        else:
            weights = tuple(float(w) for w in self.weights)
        if len(weights) != len(scales) or any(w < 0 for w in weights):
            raise InvalidParameterError("weights must be nonnegative, one per scale")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise InvalidParameterError(f"weights must sum to 1, got {sum(weights)}")
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True)
class ClaheParams:
    """Clip-limited adaptive histogram equalization parameters.

    ``clip_limit`` is relative to the uniform bin height; ``tiles_x`` x
    ``tiles_y`` is the tile grid (clamped so every tile is at least one
    pixel on small images).
    """

    clip_limit: float = 2.0
    tiles_x: int = 50
    tiles_y: int = 50
    bins: int = 256

    def __post_init__(self):
        if self.clip_limit < 1.0:
            raise InvalidParameterError(f"clip_limit must be >= 1.0, got {self.clip_limit}")
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise InvalidParameterError("tile grid dimensions must be >= 1")
        if self.bins != 256:
            raise InvalidParameterError("histogram bins are fixed at 256 for 8-bit data")


def radial_brighten(img: np.ndarray, params: BrighteningParams | None = None) -> np.ndarray:
    """Add k * distance-to-anchor to each pixel's HSV value, clamped to 1."""
    params = params or BrighteningParams()
    arr = _require_color(img)
    h, w = arr.shape[:2]
    if params.anchor is None:
        x0, y0 = w // 2, h - 1
    else:
        x0, y0 = params.anchor
        if not (0 <= x0 < w and 0 <= y0 < h):
            raise InvalidParameterError(f"anchor ({x0}, {y0}) outside {w}x{h} image")
    hsv = rgb_to_hsv(arr)
    dist = np.hypot(np.arange(w, dtype=np.float64)[None, :] - x0, np.arange(h, dtype=np.float64)[:, None] - y0)
    hsv[..., 2] = np.clip(hsv[..., 2] + params.k * dist, 0.0, 1.0)
    return hsv_to_rgb(hsv)


def surround_radius(c: float) -> int:
    """Kernel truncation radius for a Gaussian surround of scale ``c``."""
    return max(1, int(round(3.0 * c)))


def build_surround_kernel(c: float, radius: int) -> np.ndarray:
    """Square Gaussian surround exp(-r^2 / c^2), normalized to sum 1."""
    if c <= 0:
        raise InvalidParameterError(f"surround scale must be > 0, got {c}")
    if radius < 1:
        raise InvalidParameterError(f"kernel radius must be >= 1, got {radius}")
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kern = np.exp(-(offsets[:, None] ** 2 + offsets[None, :] ** 2) / (c * c))
    return kern / kern.sum()


@lru_cache(maxsize=64)
def _blur_matrix(n: int, c: float, radius: int) -> np.ndarray:
    """Dense 1-D convolution operator with edge-replicate padding folded in.

    Row i holds the surround weights of output sample i over the n input
    samples; out-of-range taps accumulate onto the clamped border sample, so
    M @ plane equals convolution of the replicate-padded plane.
    """
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kern = np.exp(-(offsets**2) / (c * c))
    kern /= kern.sum()
    m = np.zeros((n, n), dtype=np.float64)
    src = np.clip(np.arange(n)[:, None] + np.arange(-radius, radius + 1)[None, :], 0, n - 1)
    rows = np.repeat(np.arange(n), 2 * radius + 1)
    np.add.at(m, (rows, src.ravel()), np.tile(kern, n))
    m.setflags(write=False)  # cached and shared
    return m


def _surround_blur(plane: np.ndarray, c: float, radius: int) -> np.ndarray:
    # The 2-D surround exp(-(dx^2+dy^2)/c^2) is separable, so two matrix
    # products give the exact replicate-padded 2-D convolution.
    h, w = plane.shape
    return _blur_matrix(h, float(c), radius) @ plane @ _blur_matrix(w, float(c), radius).T


def ssr(channel: np.ndarray, c: float) -> np.ndarray:
    """Single-scale Retinex: log(I + 1) - log(surround-blurred I + 1).

    The blur is a 2-D convolution against the Gaussian surround of scale
    ``c``, truncated at radius 3c, with edge-replicate padding.
    """
    if c <= 0:
        raise InvalidParameterError(f"surround scale must be > 0, got {c}")
    plane = np.asarray(channel, dtype=np.float64)
    if plane.ndim != 2:
        raise InvalidParameterError(f"SSR operates on a single plane, got shape {plane.shape}")
    if plane.size and plane.min() < 0:
        raise InvalidParameterError("SSR input samples must be >= 0")
    blurred = _surround_blur(plane, c, surround_radius(c))
    return np.log1p(plane) - np.log1p(blurred)


def msr(channel: np.ndarray, params: RetinexParams | None = None) -> np.ndarray:
    """Multi-scale Retinex: weighted sum of SSR outputs over the scales."""
    params = params or RetinexParams()
    out = None
    for weight, scale in zip(params.weights, params.scales):
        term = weight * ssr(channel, scale)
        out = term if out is None else out + term
    return out


def color_restoration(img: np.ndarray, alpha: float = 125.0, beta: float = 46.0) -> np.ndarray:
    """Per-band restoration factor beta * (log(alpha*I_i + 1) - log(sum_i I_i + 1)).

    Returns an (h, w, 3) float plane stack, finite everywhere.
    """
    arr = _require_color(img)
    rgb = arr.astype(np.float64)
    band_sum = rgb.sum(axis=2)
    return beta * (np.log1p(alpha * rgb) - np.log1p(band_sum)[..., None])


def msrcr(img: np.ndarray, params: RetinexParams | None = None) -> np.ndarray:
    """Multi-scale Retinex with color restoration.

    Per band: raw = gain * (C_i * MSR_i) + offset, then each band is
    independently min-max rescaled to [0, 255]. A constant raw band (which
    min-max cannot spread) maps to 0.
    """
    params = params or RetinexParams()
    arr = _require_color(img)
    rgb = arr.astype(np.float64)
    restored = color_restoration(arr, params.alpha, params.beta)
    out = np.empty_like(rgb)
    for i in range(3):
        raw = params.gain * (restored[..., i] * msr(rgb[..., i], params)) + params.offset
        out[..., i] = _rescale_band(raw)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _rescale_band(raw: np.ndarray) -> np.ndarray:
    lo = raw.min()
    hi = raw.max()
    # Bands that are constant up to float cancellation noise must map to 0,
    # not have that noise stretched across [0, 255]. Real dynamic ranges at
    # these gains are O(100+), so 1e-9 only catches the degenerate case.
    if hi - lo <= 1e-9:
        return np.zeros_like(raw)
    return (raw - lo) * (255.0 / (hi - lo))


def clahe(img: np.ndarray, params: ClaheParams | None = None) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization.

    Grayscale images are equalized directly. Color images are converted to
    HSV, the 8-bit V channel is equalized, and the result converted back,
    which avoids hue shifts.

    Per tile: a 256-bin histogram is clipped at
    ``max(1, int(clip_limit * tile_pixels / 256))``; the excess is spread
    evenly over all bins in one pass, with the remainder handed out
    round-robin from bin 0. The tile mapping is the clipped CDF scaled to
    [0, 255]. Each output pixel bilinearly interpolates the mappings of its
    up-to-4 neighboring tile centers, with weights clamped at the borders.
    """
    params = params or ClaheParams()
    arr = np.asarray(img)
    if arr.ndim == 2:
        return _clahe_plane(arr, params)
    if arr.ndim == 3 and arr.shape[2] == 3:
        hsv = rgb_to_hsv(arr)
        value8 = arr.max(axis=2)  # HSV value as 8-bit: max(r, g, b)
        hsv[..., 2] = _clahe_plane(value8, params) / 255.0
        return hsv_to_rgb(hsv)
    raise ChannelMismatchError(f"CLAHE needs a grayscale or 3-channel image, got shape {arr.shape}")


def _tile_edges(length: int, tiles: int) -> np.ndarray:
    return (np.arange(tiles + 1, dtype=np.int64) * length) // tiles


def _tile_mappings(plane: np.ndarray, edges_y: np.ndarray, edges_x: np.ndarray, clip_limit: float) -> np.ndarray:
    """Clipped-CDF lookup table per tile, shape (tiles_y, tiles_x, 256)."""
    ty = len(edges_y) - 1
    tx = len(edges_x) - 1
    h, w = plane.shape
    col_tile = np.searchsorted(edges_x, np.arange(w), side="right") - 1
    row_tile = np.searchsorted(edges_y, np.arange(h), side="right") - 1
    tile_of = row_tile[:, None] * tx + col_tile[None, :]
    hist = np.bincount(
        (tile_of.astype(np.int64) * 256 + plane.astype(np.int64)).ravel(),
        minlength=ty * tx * 256,
    ).reshape(ty * tx, 256)

    npix = (np.diff(edges_y)[:, None] * np.diff(edges_x)[None, :]).reshape(-1)
    limit = np.maximum(1, (clip_limit * npix / 256.0).astype(np.int64))
    excess = np.maximum(hist - limit[:, None], 0).sum(axis=1)
    hist = np.minimum(hist, limit[:, None])
    hist += (excess // 256)[:, None]
    hist += np.arange(256)[None, :] < (excess % 256)[:, None]

    cdf = hist.cumsum(axis=1)
    maps = np.floor(cdf * 255.0 / npix[:, None] + 0.5)
    return maps.reshape(ty, tx, 256)


def _interp_axis(length: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Neighboring tile indices and interpolation weight per coordinate."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    coords = np.arange(length, dtype=np.float64)
    hi = np.searchsorted(centers, coords, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    frac = np.where(span > 0, (coords - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, frac


def _clahe_plane(plane: np.ndarray, params: ClaheParams) -> np.ndarray:
    plane = np.asarray(plane)
    h, w = plane.shape
    ty = min(params.tiles_y, h)  # clamp so every tile spans >= 1 px
    tx = min(params.tiles_x, w)
    edges_y = _tile_edges(h, ty)
    edges_x = _tile_edges(w, tx)
    maps = _tile_mappings(plane, edges_y, edges_x, params.clip_limit)

    i0, i1, wy = _interp_axis(h, edges_y)
    j0, j1, wx = _interp_axis(w, edges_x)
    v = plane.astype(np.int64)
    m00 = maps[i0[:, None], j0[None, :], v]
    m01 = maps[i0[:, None], j1[None, :], v]
    m10 = maps[i1[:, None], j0[None, :], v]
    m11 = maps[i1[:, None], j1[None, :], v]
    wx = wx[None, :]
    top = m00 + wx * (m01 - m00)
    bottom = m10 + wx * (m11 - m10)
    out = top + wy[:, None] * (bottom - top)
    return np.floor(out + 0.5).astype(np.uint8)


def _require_color(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ChannelMismatchError(f"expected a 3-channel image, got shape {arr.shape}")
    return arr
