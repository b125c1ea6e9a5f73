"""Mid-level structural dissimilarity: contour-category codebook,
per-pixel category likelihood fields, Jensen-Shannon divergence and
Minkowski pooling over registered pixel pairs."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage
from sklearn.base import BaseEstimator
from sklearn.cluster import KMeans

from .errors import ArgumentError, TrainingError
from .validation import (
    check_binary_map,
    check_gray_image,
    check_prob_vector,
    check_same_shape,
)

_EPS_STD = 1e-8


def patch_descriptors(patches):
    """Descriptors for a stack of square patches, shape (n, side, side).

    A descriptor is the contrast-normalized patch flattened, concatenated
    with the per-orientation (4 bins over [0, 180)) gradient magnitude
    sums of the normalized patch.
    """
    stack = np.asarray(patches, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ArgumentError(f"expected (n, side, side) stack, got {stack.shape}")
    n, side, _ = stack.shape
    mean = stack.mean(axis=(1, 2), keepdims=True)
    std = stack.std(axis=(1, 2), keepdims=True)
    norm = (stack - mean) / (std + _EPS_STD)
    gy, gx = np.gradient(norm, axis=(1, 2))
    mag = np.hypot(gy, gx)
    orient = np.degrees(np.arctan2(gy, gx)) % 180.0
    bins = np.minimum((orient / 45.0).astype(np.int64), 3)
    grad = np.zeros((n, 4))
    for b in range(4):
        grad[:, b] = np.where(bins == b, mag, 0.0).sum(axis=(1, 2))
    return np.concatenate([norm.reshape(n, -1), grad], axis=1)


class ContourCodebook(BaseEstimator):
    """k-means codebook over contour-centered patch descriptors.

    After fit: `centroids_` (T x descriptor_dim), `temperature_` (softmax
    softness, the mean intra-cluster distance) and `labels_`.
    """

    def __init__(self, n_categories=32, patch_side=15, seed=0):
        self.n_categories = n_categories
        self.patch_side = patch_side
        self.seed = seed

    def fit(self, patches):
        data = [getattr(p, "data", p) for p in patches]
        if len(data) < 10 * self.n_categories:
            raise TrainingError(
                f"need at least {10 * self.n_categories} contour patches, "
                f"got {len(data)}"
            )
        stack = np.asarray(data, dtype=np.float64)
        if stack.shape[1] != self.patch_side:
            raise ArgumentError(
                f"patches must be {self.patch_side}x{self.patch_side}, "
                f"got {stack.shape[1:]}"
            )
        desc = patch_descriptors(stack)
        km = KMeans(
            n_clusters=self.n_categories,
            init="k-means++",
            n_init=1,
            max_iter=200,
            tol=1e-6,
            random_state=self.seed,
            algorithm="lloyd",
        ).fit(desc)
        self.centroids_ = km.cluster_centers_.astype(np.float64)
        self.labels_ = km.labels_
        self.inertia_ = float(km.inertia_)
        dists = np.linalg.norm(desc - self.centroids_[km.labels_], axis=1)
        self.temperature_ = max(float(dists.mean()), _EPS_STD)
        return self

    def category_probs(self, descriptors):
        """Softmax over negative centroid distances, shape (n, T)."""
        diff = descriptors[:, None, :] - self.centroids_[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        logits = -dist / self.temperature_
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)


def train_codebook(contour_patches, n_categories, seed):
    return ContourCodebook(
        n_categories=n_categories, seed=seed
    ).fit(contour_patches)


def token_field(img, contours, codebook):
    """Per-pixel probability field over T categories plus background.

    Pixels whose patch window contains a contour pixel get a soft category
    assignment (background 0); all other pixels are pure background.
    Returns an (h, w, T+1) array whose vectors sum to 1.
    """
    arr = check_gray_image(img, "image")
    mask = check_binary_map(contours)
    check_same_shape(arr, mask, "image", "contour map")
    side = codebook.patch_side
    half = side // 2
    t = codebook.centroids_.shape[0]
    h, w = arr.shape

    near = ndimage.maximum_filter(
        mask.astype(np.uint8), size=side, mode="constant", cval=0
    ).astype(bool)
    probs = np.zeros((h, w, t + 1))
    probs[:, :, t] = 1.0
    if near.any():
        padded = np.pad(arr, half, mode="edge")
        windows = sliding_window_view(padded, (side, side))
        active = windows[near]
        desc = patch_descriptors(active)
        soft = codebook.category_probs(desc)
        probs[near, :t] = soft
        probs[near, t] = 0.0
    return probs


def jsd(p, q):
    """Jensen-Shannon divergence with natural log, in [0, ln 2]."""
    p = check_prob_vector(p, "p")
    q = check_prob_vector(q, "q")
    if p.shape != q.shape:
        raise ArgumentError("p and q must have the same length")
    return float(_jsd_rows(p[None, :], q[None, :])[0])


def _jsd_rows(p, q):
    """Row-wise JSD for (n, C) stacks; 0*ln(0) is taken as 0."""
    m = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        kl_p = np.where(p > 0, p * (np.log(p) - np.log(m)), 0.0)
        kl_q = np.where(q > 0, q * (np.log(q) - np.log(m)), 0.0)
    out = 0.5 * kl_p.sum(axis=1) + 0.5 * kl_q.sum(axis=1)
    return np.maximum(out, 0.0)


def minkowski_pool(values, beta, n_pixels, mode="literal"):
    """L^beta pooling of per-pixel divergences.

    `literal` divides the beta-root of the summed powers by the pixel
    count; `mean_power` takes the beta-root of the mean power instead.
    """
    if beta < 1:
        raise ArgumentError(f"beta must be >= 1, got {beta}")
    v = np.asarray(values, dtype=np.float64)
    root = (v**beta).sum() ** (1.0 / beta)
    if mode == "literal":
        return float(root / n_pixels)
    if mode == "mean_power":
        return float(((v**beta).mean()) ** (1.0 / beta))
    raise ArgumentError(f"unknown pooling mode '{mode}'")


def d_mid(field_ref, field_deg, displacement, beta=4.0, mode="literal"):
    """Minkowski-pooled JSD between registered token fields.

    `displacement` is the (dy, dx) pair from register.match_pixels mapping
    each reference pixel to its match in the degraded image; displaced
    coordinates are clamped to the image border.
    """
    fr = np.asarray(field_ref, dtype=np.float64)
    fd = np.asarray(field_deg, dtype=np.float64)
    if fr.shape != fd.shape:
        raise ArgumentError(
            f"token fields must share dimensions: {fr.shape} vs {fd.shape}"
        )
    h, w, _ = fr.shape
    dy, dx = displacement
    if dy.shape != (h, w) or dx.shape != (h, w):
        raise ArgumentError("displacement field dimensions do not match")
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    ty = np.clip(yy + dy, 0, h - 1)
    tx = np.clip(xx + dx, 0, w - 1)
    p = fr.reshape(-1, fr.shape[2])
    q = fd[ty.ravel(), tx.ravel()]
    per_pixel = _jsd_rows(p, q)
    return minkowski_pool(per_pixel, beta, h * w, mode=mode)
