"""Structure/texture separation with a fast grid-based bilateral filter.

The filter splats pixels into a downsampled space-range grid, blurs the
grid with a Gaussian, and slices the result back trilinearly. Boundary
handling is clamp-to-edge, consistent with the rest of the pipeline.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ArgumentError
from .validation import check_gray_image, check_positive


@dataclass(frozen=True)
class BilateralParams:
    sigma_spatial: float = 3.0
    sigma_range: float = 0.1
    grid_downsample: int = 0  # 0 -> ceil(sigma_spatial)

    def effective_downsample(self):
        if self.grid_downsample:
            return int(self.grid_downsample)
        return max(1, math.ceil(self.sigma_spatial))


def _corner_weights(coords, grid_shape):
    """Clamped trilinear corner indices and weights for a coordinate list.

    Bases are clamped to [0, n-2] per axis so every corner index is valid;
    a clamped base simply shifts all the weight onto the in-range corner.
    """
    dims = np.array(grid_shape, dtype=np.int64)
    base = np.minimum(np.floor(coords).astype(np.int64), dims[None, :] - 2)
    base = np.maximum(base, 0)
    frac = coords - base
    strides = np.array(
        [grid_shape[1] * grid_shape[2], grid_shape[2], 1], dtype=np.int64
    )
    for corner in range(8):
        offs = np.array([(corner >> 2) & 1, (corner >> 1) & 1, corner & 1])
        w = np.prod(np.where(offs[None, :] == 1, frac, 1.0 - frac), axis=1)
        idx = (base + offs[None, :]) @ strides
        yield idx, w


def _splat(coords, values, grid_shape):
    data = np.zeros(grid_shape)
    weight = np.zeros(grid_shape)
    flat_data = data.ravel()
    flat_weight = weight.ravel()
    for idx, w in _corner_weights(coords, grid_shape):
        np.add.at(flat_data, idx, w * values)
        np.add.at(flat_weight, idx, w)
    return data, weight


def _slice(grid, coords, grid_shape):
    out = np.zeros(coords.shape[0])
    flat = grid.ravel()
    for idx, w in _corner_weights(coords, grid_shape):
        out += w * flat[idx]
    return out


def bilateral_filter(img, params=None):
    """Edge-preserving smoothing of a [0, 1] luminance image.

    Output has the same dimensions and stays inside the input range
    (every pixel is a convex combination of input values).
    """
    if params is None:
        params = BilateralParams()
    arr = check_gray_image(img, "image")
    check_positive(params.sigma_spatial, "sigma_spatial")
    check_positive(params.sigma_range, "sigma_range")
    ds = params.effective_downsample()
    if ds < 1:
        raise ArgumentError(f"grid_downsample must be >= 1, got {ds}")
    if arr.max() == arr.min():
        # Constant image: every range weight is equal, the weighted mean
        # is the constant itself. Short-circuit keeps this bit-exact.
        return arr.copy()

    h, w = arr.shape
    r_step = params.sigma_range
    # Grid extents chosen so the last occupied cell is the last cell:
    # clamp-to-edge blurring in the grid then mirrors image-space clamping.
    ny = max(2, int(math.ceil((h - 1) / ds)) + 1)
    nx = max(2, int(math.ceil((w - 1) / ds)) + 1)
    nr = max(2, int(math.ceil(1.0 / r_step)) + 1)
    grid_shape = (ny, nx, nr)

    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    coords = np.stack(
        [yy.ravel() / ds, xx.ravel() / ds, arr.ravel() / r_step], axis=1
    )
    data, weight = _splat(coords, arr.ravel(), grid_shape)

    sigmas = (params.sigma_spatial / ds, params.sigma_spatial / ds, 1.0)
    modes = ("nearest", "nearest", "constant")
    data = ndimage.gaussian_filter(data, sigmas, mode=modes)
    weight = ndimage.gaussian_filter(weight, sigmas, mode=modes)

    num = _slice(data, coords, grid_shape)
    den = _slice(weight, coords, grid_shape)
    out = np.where(den > 1e-12, num / np.maximum(den, 1e-12), arr.ravel())
    return np.clip(out.reshape(h, w), 0.0, 1.0)


def gaussian_blur(img, sigma):
    """Plain spatial Gaussian blur with clamp-to-edge borders."""
    arr = check_gray_image(img, "image")
    check_positive(sigma, "sigma")
    return ndimage.gaussian_filter(arr, sigma, mode="nearest")
