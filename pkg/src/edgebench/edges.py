"""Canny edge detection: blur, Sobel gradients, non-maximum suppression,
double-threshold hysteresis.

Edge maps are ``bool`` arrays with the source image's dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ChannelMismatchError, DimensionMismatchError, InvalidParameterError


@dataclass(frozen=True)
class CannyParams:
    """Thresholds apply to Sobel magnitudes of 8-bit luma.

    Setting ``blur_sigma`` or ``blur_radius`` to 0 disables the smoothing
    stage.
    """

    low_threshold: float = 100.0
    high_threshold: float = 200.0
    blur_sigma: float = 1.4
    blur_radius: int = 4

    def __post_init__(self):
        if not (0 <= self.low_threshold <= self.high_threshold):
            raise InvalidParameterError(
                f"need 0 <= low <= high, got {self.low_threshold}/{self.high_threshold}"
            )
        if self.blur_sigma < 0 or self.blur_radius < 0:
            raise InvalidParameterError("blur sigma and radius must be >= 0")


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma as a float plane; grayscale input passes through."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        return arr.astype(np.float64)
    if arr.ndim == 3 and arr.shape[2] == 3:
        rgb = arr.astype(np.float64)
        return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    raise ChannelMismatchError(f"expected 1 or 3 channels, got shape {arr.shape}")


def gaussian_blur(plane: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """Separable Gaussian blur with edge-replicate padding, kernel sum 1."""
    if sigma <= 0:
        raise InvalidParameterError(f"blur sigma must be > 0, got {sigma}")
    if radius < 1:
        raise InvalidParameterError(f"blur radius must be >= 1, got {radius}")
    arr = np.asarray(plane, dtype=np.float64)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kern = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    kern /= kern.sum()
    return _conv1d_replicate(_conv1d_replicate(arr, kern, axis=0), kern, axis=1)


def _conv1d_replicate(plane: np.ndarray, kern: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kern) // 2
    h, w = plane.shape
    if axis == 0:
        padded = np.pad(plane, ((radius, radius), (0, 0)), mode="edge")
    else:
        padded = np.pad(plane, ((0, 0), (radius, radius)), mode="edge")
    out = np.zeros_like(plane)
    for i, kv in enumerate(kern):
        out += kv * (padded[i : i + h, :] if axis == 0 else padded[:, i : i + w])
    return out


def sobel_gradients(plane: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel magnitude and direction (atan2(gy, gx), radians), replicate padding."""
    arr = np.asarray(plane, dtype=np.float64)
    h, w = arr.shape
    if h < 3 or w < 3:
        raise InvalidParameterError(f"gradients need at least a 3x3 plane, got {w}x{h}")
    p = np.pad(arr, 1, mode="edge")

    def s(dy, dx):
        return p[dy : dy + h, dx : dx + w]

    # Terms accumulate in row-major kernel order so results match a scalar
    # reference loop bit for bit.
    gx = -s(0, 0) + s(0, 2) - 2.0 * s(1, 0) + 2.0 * s(1, 2) - s(2, 0) + s(2, 2)
    gy = -s(0, 0) - 2.0 * s(0, 1) - s(0, 2) + s(2, 0) + 2.0 * s(2, 1) + s(2, 2)
    magnitude = np.sqrt(gx * gx + gy * gy)
    direction = np.arctan2(gy, gx)
    return magnitude, direction


# Neighbor offsets (dy, dx) on each side of a pixel for the four quantized
# gradient directions: 0 deg, 45 deg, 90 deg, 135 deg. Rows index the sector,
# y grows downward.
_SECTOR_NEIGHBORS = (
    ((0, -1), (0, 1)),
    ((-1, -1), (1, 1)),
    ((-1, 0), (1, 0)),
    ((-1, 1), (1, -1)),
)


def quantize_direction(direction: np.ndarray) -> np.ndarray:
    """Map angles (radians) to sectors 0..3 = 0, 45, 90, 135 degrees."""
    a = np.mod(np.asarray(direction, dtype=np.float64), np.pi)
    sector = np.zeros(a.shape, dtype=np.int64)
    sector[(a >= np.pi / 8) & (a < 3 * np.pi / 8)] = 1
    sector[(a >= 3 * np.pi / 8) & (a < 5 * np.pi / 8)] = 2
    sector[(a >= 5 * np.pi / 8) & (a < 7 * np.pi / 8)] = 3
    return sector


def non_max_suppression(magnitude: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Keep pixels that are >= both neighbors along the quantized direction.

    Suppressed pixels become 0. Border pixels only compete against their
    in-bounds neighbors.
    """
    mag = np.asarray(magnitude, dtype=np.float64)
    if mag.shape != np.shape(direction):
        raise DimensionMismatchError(f"magnitude {mag.shape} vs direction {np.shape(direction)}")
    h, w = mag.shape
    sector = quantize_direction(direction)
    padded = np.pad(mag, 1, mode="constant", constant_values=-np.inf)

    def shifted(dy, dx):
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    side_a = np.choose(sector, [shifted(*_SECTOR_NEIGHBORS[k][0]) for k in range(4)])
    side_b = np.choose(sector, [shifted(*_SECTOR_NEIGHBORS[k][1]) for k in range(4)])
    keep = (mag >= side_a) & (mag >= side_b)
    return np.where(keep, mag, 0.0)


def hysteresis(suppressed: np.ndarray, low: float, high: float) -> np.ndarray:
    """Seeds are pixels >= high; pixels >= low survive iff 8-connected
    (transitively) to a seed."""
    if not (0 <= low <= high):
        raise InvalidParameterError(f"need 0 <= low <= high, got {low}/{high}")
    arr = np.asarray(suppressed, dtype=np.float64)
    strong = arr >= high
    if not strong.any():
        return np.zeros(arr.shape, dtype=bool)
    weak = arr >= low
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    return np.isin(labels, np.unique(labels[strong]))


def canny(img: np.ndarray, params: CannyParams | None = None) -> np.ndarray:
    """Full detector: grayscale, blur, Sobel, suppression, hysteresis."""
    params = params or CannyParams()
    gray = to_grayscale(img)
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        raise InvalidParameterError(f"canny needs at least a 3x3 image, got {gray.shape}")
    if params.blur_sigma > 0 and params.blur_radius > 0:
        gray = gaussian_blur(gray, params.blur_sigma, params.blur_radius)
    magnitude, direction = sobel_gradients(gray)
    thinned = non_max_suppression(magnitude, direction)
    return hysteresis(thinned, params.low_threshold, params.high_threshold)


def edges_to_image(edges: np.ndarray) -> np.ndarray:
    """Render an edge map as 0/255 grayscale for the PNG galleries."""
    return np.where(np.asarray(edges, dtype=bool), 255, 0).astype(np.uint8)
