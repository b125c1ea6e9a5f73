"""Synthetic corpus generation for the end-to-end tests.

The corpus mimics view-synthesis degradations: smooth local random warps
whose peak amplitude plays the role of a pseudo subjective score,
disocclusion-style hole filling (columns smeared across holes), and a small
global shift that is independent of the warp amplitude.  The global shift
models the perceptually acceptable object displacement this metric family is
designed to tolerate: it decorrelates plain pixel-wise contour comparison
from the pseudo score while leaving registration-compensated and
feature-based levels informative.

References share a common smoothed-noise background and a canonical
inventory of geometric shapes, jittered per content.  Homogeneous content
statistics let the regression stage generalize across held-out content
groups at this small corpus scale.
"""

import numpy as np
from scipy import ndimage

# (kind, size_a, size_b, gray value, center y/x as fractions of image side)
_SHAPES = [
    ("rect", 10, 8, 0.9, 0.125, 0.625),
    ("rect", 7, 12, 0.1, 0.47, 0.16),
    ("rect", 9, 9, 0.75, 0.69, 0.69),
    ("circ", 5, 0, 0.05, 0.25, 0.25),
    ("circ", 6, 0, 0.95, 0.72, 0.34),
    ("circ", 4, 0, 0.2, 0.41, 0.78),
]


def make_reference(seed, size=64):
    """Shared smooth background with per-content jittered shape layout."""
    rng = np.random.default_rng(seed)
    bg = ndimage.gaussian_filter(np.random.default_rng(999).random((size, size)), 3.0)
    bg = (bg - bg.min()) / (bg.max() - bg.min() + 1e-12)
    img = 0.3 + 0.4 * bg
    for kind, a, b, val, fy, fx in _SHAPES:
        y = int(round(fy * size)) + int(rng.integers(-4, 5))
        x = int(round(fx * size)) + int(rng.integers(-4, 5))
        y = int(np.clip(y, 0, size - a - 1))
        x = int(np.clip(x, 0, size - max(a, b) - 1))
        if kind == "rect":
            img[y : y + a, x : x + b] = val
        else:
            yy, xx = np.ogrid[:size, :size]
            img[(yy - y) ** 2 + (xx - x) ** 2 < a * a] = val
    return np.clip(img, 0.0, 1.0)


def warp(img, amplitude, rng):
    """Smooth random displacement field with the given peak amplitude."""
    h, w = img.shape
    fy = ndimage.gaussian_filter(rng.standard_normal((h, w)), 6.0)
    fx = ndimage.gaussian_filter(rng.standard_normal((h, w)), 6.0)
    for f in (fy, fx):
        peak = np.abs(f).max()
        f *= amplitude / max(peak, 1e-12)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    coords = [np.clip(yy + fy, 0, h - 1), np.clip(xx + fx, 0, w - 1)]
    return ndimage.map_coordinates(img, coords, order=1, mode="nearest")


def fill_holes(img, amplitude, rng):
    """Disocclusion-style filling: stretch the column left of each hole."""
    out = img.copy()
    h, w = img.shape
    n = 1 + int(amplitude) // 2
    for _ in range(n):
        hh = int(rng.integers(3, 4 + int(amplitude)))
        ww = int(rng.integers(3, 4 + int(amplitude)))
        y = int(rng.integers(0, h - hh))
        x = int(rng.integers(ww, w - ww))
        out[y : y + hh, x : x + ww] = out[y : y + hh, x - 1 : x]
    return out


def distort(img, amplitude, seed, max_shift=3):
    """Warp + hole filling + amplitude-independent global shift."""
    rng = np.random.default_rng(seed)
    out = np.clip(fill_holes(warp(img, amplitude, rng), amplitude, rng), 0, 1)
    dy, dx = (int(v) for v in rng.integers(-max_shift, max_shift + 1, 2))
    return np.clip(ndimage.shift(out, (dy, dx), order=1, mode="nearest"), 0, 1)


def corpus(n_refs=8, amplitudes=(1, 2, 4, 8), size=64, seed=100):
    """Pairs, pseudo-DMOS (= warp amplitude) and content groups."""
    pairs, dmos, groups = [], [], []
    for i in range(n_refs):
        ref = make_reference(seed + i, size)
        for a in amplitudes:
            pairs.append((ref, distort(ref, a, seed + 1000 + i * 10 + a)))
            dmos.append(float(a))
            groups.append(f"content{i}")
    return pairs, dmos, groups
