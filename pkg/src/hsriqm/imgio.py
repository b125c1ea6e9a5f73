"""Image loading, luminance conversion, patch extraction and PGM output.

All pixel math downstream is double precision in [0, 1]; 8-bit
quantization happens only here, at the I/O boundary.
"""

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ArgumentError, FormatError
from .validation import check_gray_image

# ITU-R BT.601 luma weights for R, G, B.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_SUPPORTED_EXT = {".png", ".pgm", ".ppm"}


@dataclass(frozen=True)
class Patch:
    """A square sub-image plus where it came from."""

    data: np.ndarray  # side x side, float64 in [0, 1]
    source: tuple  # (image id, (row, col) of top-left corner)

    @property
    def side(self):
        return self.data.shape[0]


def load_image(path):
    """Load a PNG/PGM/PPM file as a float64 luminance array in [0, 1].

    Color inputs are collapsed with fixed (0.299, 0.587, 0.114) weights.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext not in _SUPPORTED_EXT:
        raise FormatError(f"unsupported image format '{ext}' for {path}")
    if not os.path.exists(path):
        raise IOError(f"image file not found: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "I;16", "I", "F"):
                arr = np.asarray(im, dtype=np.float64)
                maxval = {"L": 255.0, "I;16": 65535.0}.get(im.mode)
                if maxval is None:
                    maxval = max(arr.max(), 1.0)
                gray = arr / maxval
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                gray = rgb @ LUMA_WEIGHTS
    except UnidentifiedImageError as exc:
        raise FormatError(f"cannot decode {path}: {exc}") from exc
    except OSError as exc:
        raise IOError(f"cannot read {path}: {exc}") from exc
    return np.clip(gray, 0.0, 1.0)


def save_pgm(path, img):
    """Write a luminance array as a binary PGM (P5, maxval 255)."""
    arr = check_gray_image(img, "image")
    q = np.rint(arr * 255.0).astype(np.uint8)
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(q.tobytes())


def extract_patches(img, side, stride, image_id=""):
    """All fully-inside `side` x `side` patches on the stride grid.

    Patches are returned in row-major scan order of their top-left corner.
    """
    arr = check_gray_image(img, "image")
    h, w = arr.shape
    side = int(side)
    stride = int(stride)
    if side < 3:
        raise ArgumentError(f"patch side must be >= 3, got {side}")
    if side > min(h, w):
        raise ArgumentError(
            f"patch side {side} exceeds image dimensions {h}x{w}"
        )
    if stride < 1:
        raise ArgumentError(f"stride must be >= 1, got {stride}")
    patches = []
    for top in range(0, h - side + 1, stride):
        for left in range(0, w - side + 1, stride):
            patches.append(
                Patch(
                    data=arr[top : top + side, left : left + side].copy(),
                    source=(image_id, (top, left)),
                )
            )
    return patches
