"""Dense pixel correspondence by exhaustive block matching with
normalized cross-correlation, so global shifts are not over-penalized."""

import numpy as np
from scipy import ndimage

from .errors import ArgumentError
from .validation import check_gray_image, check_same_shape

_FLAT_VAR = 1e-8
# a candidate must beat the incumbent by this much; with candidates scanned
# nearest-first this resolves floating-point NCC ties (exact on periodic or
# ramp-like patterns) toward the smallest displacement
_TIE_EPS = 1e-9


def _shift_candidates(search_radius):
    """All (dy, dx) shifts ordered by the tie-break priority:
    smallest |dx|+|dy|, then smallest dy, then smallest dx."""
    r = search_radius
    shifts = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    shifts.sort(key=lambda s: (abs(s[0]) + abs(s[1]), s[0], s[1]))
    return shifts


def match_pixels(ref, deg, block=9, search_radius=4):
    """Per-pixel integer displacement maximizing block NCC.

    For each reference pixel the block centered there is compared against
    blocks of the degraded image displaced by up to `search_radius` pixels;
    blocks are clamped to the image bounds by edge replication. Flat
    reference blocks (variance below 1e-8) are assigned (0, 0).

    Returns (dy, dx) integer arrays of the image shape.
    """
    ref = check_gray_image(ref, "reference image")
    deg = check_gray_image(deg, "degraded image")
    check_same_shape(ref, deg, "reference image", "degraded image")
    block = int(block)
    search_radius = int(search_radius)
    if block < 3 or block % 2 == 0:
        raise ArgumentError(f"block must be odd and >= 3, got {block}")
    if search_radius < 0:
        raise ArgumentError("search_radius must be >= 0")

    h, w = ref.shape

    def local_mean(x):
        return ndimage.uniform_filter(x, size=block, mode="nearest")

    m_ref = local_mean(ref)
    var_ref = local_mean(ref * ref) - m_ref * m_ref
    flat = var_ref < _FLAT_VAR

    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    best_ncc = np.full((h, w), -np.inf)
    best_dy = np.zeros((h, w), dtype=np.int64)
    best_dx = np.zeros((h, w), dtype=np.int64)

    for dy, dx in _shift_candidates(search_radius):
        shifted = deg[
            np.clip(yy + dy, 0, h - 1), np.clip(xx + dx, 0, w - 1)
        ]
        m_sh = local_mean(shifted)
        cov = local_mean(ref * shifted) - m_ref * m_sh
        var_sh = local_mean(shifted * shifted) - m_sh * m_sh
        denom = np.sqrt(np.maximum(var_ref, 0.0) * np.maximum(var_sh, 0.0))
        ncc = np.where(denom > _FLAT_VAR, cov / np.maximum(denom, _FLAT_VAR), 0.0)
        better = ncc > best_ncc + _TIE_EPS  # near-ties keep the earlier shift
        best_ncc = np.where(better, ncc, best_ncc)
        best_dy = np.where(better, dy, best_dy)
        best_dx = np.where(better, dx, best_dx)

    best_dy[flat] = 0
    best_dx[flat] = 0
    return best_dy, best_dx
