"""Low-level structural dissimilarity: Canny contours, plus-shaped
dilation and the normalized XOR score between dilated contour maps."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ArgumentError
from .validation import check_binary_map, check_gray_image, check_same_shape

# 3x3 plus-sign structuring element.
PLUS_SE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class CannyParams:
    gaussian_sigma: float = 1.4
    low_threshold: float = 0.08  # fraction of max gradient magnitude
    high_threshold: float = 0.2

    def validate(self):
        if not (0.0 < self.low_threshold < self.high_threshold < 1.0):
            raise ArgumentError(
                "thresholds must satisfy 0 < low < high < 1, got "
                f"low={self.low_threshold}, high={self.high_threshold}"
            )
        if self.gaussian_sigma <= 0:
            raise ArgumentError("gaussian_sigma must be positive")


def _nms(mag, gx, gy):
    """Suppress non-maxima along the quantized gradient direction.

    Keeps a pixel if it is strictly greater than the neighbor in the
    positive gradient direction and >= the neighbor in the negative one,
    so ridges that are two pixels wide thin to a single line.
    """
    h, w = mag.shape
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(mag, 1, mode="edge")

    def shifted(dy, dx):
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    # (positive-direction neighbor, negative-direction neighbor)
    sectors = [
        ((angle < 22.5) | (angle >= 157.5), (0, 1), (0, -1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1), (-1, -1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0), (-1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1), (-1, 1)),
    ]
    keep = np.zeros_like(mag, dtype=bool)
    for mask, pos, neg in sectors:
        keep |= mask & (mag > shifted(*pos)) & (mag >= shifted(*neg))
    return np.where(keep, mag, 0.0)


def canny(img, params=None):
    """Binary single-pixel-wide contour map of a luminance image."""
    if params is None:
        params = CannyParams()
    params.validate()
    arr = check_gray_image(img, "image")
    smoothed = ndimage.gaussian_filter(arr, params.gaussian_sigma, mode="nearest")
    gx = ndimage.sobel(smoothed, axis=1, mode="nearest")
    gy = ndimage.sobel(smoothed, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0.0:
        return np.zeros(arr.shape, dtype=bool)
    thinned = _nms(mag, gx, gy)
    strong = thinned > params.high_threshold * peak
    weak = thinned > params.low_threshold * peak
    return ndimage.binary_propagation(strong, structure=_EIGHT_CONNECTED, mask=weak)


def dilate_plus(mask):
    """Morphological dilation with the 3x3 plus-sign element."""
    arr = check_binary_map(mask)
    return ndimage.binary_dilation(arr, structure=PLUS_SE)


def d_low(ref_contours, deg_contours):
    """Normalized XOR of the two dilated contour maps.

    Dilation is applied here, on the raw contour maps. The XOR count is
    normalized by the number of set pixels in the union of the dilated
    maps, bounding the score to [0, 1]; two empty maps score 0.
    """
    ref = check_binary_map(ref_contours, "reference contour map")
    deg = check_binary_map(deg_contours, "degraded contour map")
    check_same_shape(ref, deg, "reference map", "degraded map")
    dref = dilate_plus(ref)
    ddeg = dilate_plus(deg)
    union = int(np.count_nonzero(dref | ddeg))
    if union == 0:
        return 0.0
    return float(np.count_nonzero(dref ^ ddeg)) / union
