"""Convolutional sparse coding: dictionary learning by alternating
minimization, sparse inference with a monotone FISTA, and activation-count
feature vectors.

Convolutions are "same"-sized with clamp-to-edge padding of the feature
maps, matching the boundary convention used everywhere else in the
pipeline.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len
from scipy.signal import fftconvolve
from sklearn.base import BaseEstimator

from .errors import ArgumentError, SolverError, TrainingError
from .validation import check_gray_image

_MONOTONE_RTOL = 1e-6


def _pad_widths(s):
    before = (s - 1) // 2
    return before, s - 1 - before


def _edge_pad(z, s):
    """Clamp-to-edge pad of the last two axes by the kernel footprint."""
    pb, pa = _pad_widths(s)
    pad = [(0, 0)] * (z.ndim - 2) + [(pb, pa), (pb, pa)]
    return np.pad(z, pad, mode="edge")


def _edge_pad_adjoint(g, s, m, n):
    """Adjoint of _edge_pad: fold replicated borders back onto the edges."""
    pb, pa = _pad_widths(s)
    tmp = g[..., pb : pb + m, :].copy()
    if pb:
        tmp[..., 0, :] += g[..., :pb, :].sum(axis=-2)
    if pa:
        tmp[..., m - 1, :] += g[..., pb + m :, :].sum(axis=-2)
    out = tmp[..., :, pb : pb + n].copy()
    if pb:
        out[..., :, 0] += tmp[..., :, :pb].sum(axis=-1)
    if pa:
        out[..., :, n - 1] += tmp[..., :, pb + n :].sum(axis=-1)
    return out


class _ConvOp:
    """Cached-FFT implementation of the stacked convolution operator.

    Kernel transforms are computed once per (kernels, image size) pair;
    forward and adjoint then cost one FFT round-trip each. The FFT size
    (M+s-1, N+s-1) is large enough that the extracted regions are exact
    linear convolutions.
    """

    def __init__(self, kernels, m, n):
        self.kernels = kernels
        self.s = kernels.shape[-1]
        self.m, self.n = m, n
        self.mp, self.np_ = m + self.s - 1, n + self.s - 1
        # FFT at composite-friendly sizes >= the linear-convolution extent;
        # extra zero padding never aliases the extracted regions.
        self.mf, self.nf = next_fast_len(self.mp), next_fast_len(self.np_)
        self.k_hat = np.fft.rfft2(kernels, s=(self.mf, self.nf))
        self.k_flip_hat = np.fft.rfft2(
            kernels[:, ::-1, ::-1], s=(self.mf, self.nf)
        )

    def forward(self, z):
        """z (..., K, M, N) -> sum_k D_k (*) Z_k, shape (..., M, N)."""
        zp = _edge_pad(z, self.s)
        z_hat = np.fft.rfft2(zp, s=(self.mf, self.nf))
        shape = (1,) * (z.ndim - 3) + self.k_hat.shape
        tot = (z_hat * self.k_hat.reshape(shape)).sum(axis=-3)
        out = np.fft.irfft2(tot, s=(self.mf, self.nf))
        return out[..., self.s - 1 : self.mp, self.s - 1 : self.np_]

    def adjoint(self, r):
        """Transpose of forward: r (..., M, N) -> (..., K, M, N)."""
        r_hat = np.fft.rfft2(r, s=(self.mf, self.nf))
        shape = (1,) * (r.ndim - 2) + self.k_flip_hat.shape
        g = np.fft.irfft2(
            r_hat[..., None, :, :] * self.k_flip_hat.reshape(shape),
            s=(self.mf, self.nf),
        )[..., : self.mp, : self.np_]
        return _edge_pad_adjoint(g, self.s, self.m, self.n)

    def kernel_gradient(self, z, resid):
        """Gradient of the reconstruction error w.r.t. the kernels."""
        zp = _edge_pad(z, self.s)
        return fftconvolve(
            zp, resid[:, None, ::-1, ::-1], mode="valid", axes=(2, 3)
        ).sum(axis=0)


def reconstruct(z, kernels):
    """Sum of kernel convolutions: z (..., K, M, N) -> (..., M, N)."""
    return _ConvOp(kernels, z.shape[-2], z.shape[-1]).forward(z)


def _adjoint(r, kernels, m, n):
    """Transpose of `reconstruct` applied to r (..., M, N) -> (..., K, M, N)."""
    return _ConvOp(kernels, m, n).adjoint(r)


def operator_norm_bound(kernels, m, n, iters=30):
    """Upper bound on the spectral norm of A^T A via power iteration."""
    op = _ConvOp(kernels, m, n)
    k = kernels.shape[0]
    v = np.ones((k, m, n))
    lam = 1.0
    for _ in range(iters):
        w = op.adjoint(op.forward(v))
        lam = np.linalg.norm(w.ravel()) / max(np.linalg.norm(v.ravel()), 1e-30)
        nrm = np.linalg.norm(w.ravel())
        if nrm == 0.0:
            return 1.0
        v = w / nrm
    return lam * 1.05 + 1e-12


def _op_objective(z, op, b, alpha):
    r = op.forward(z) - b
    return float(0.5 * (r**2).sum() + alpha * np.abs(z).sum())


def _objective(z, kernels, b, alpha):
    return _op_objective(z, _ConvOp(kernels, b.shape[-2], b.shape[-1]), b, alpha)


def _soft(x, thresh):
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def _fista(b, kernels, alpha, step_l, max_iters, tol, z0=None, op=None):
    """Monotone FISTA with adaptive restart; returns (z, objective history).

    Accepted iterates never increase the objective: if the accelerated
    candidate overshoots, a plain proximal-gradient step from the current
    iterate (guaranteed non-increasing at step 1/L) is taken instead and
    the momentum is restarted.
    """
    m, n = b.shape[-2:]
    if op is None:
        op = _ConvOp(kernels, m, n)
    if z0 is None:
        z = np.zeros(b.shape[:-2] + (kernels.shape[0], m, n))
    else:
        z = z0.copy()
    y = z.copy()
    t = 1.0

    def objective(fwd, code):
        r = fwd - b
        return float(0.5 * (r**2).sum() + alpha * np.abs(code).sum())

    # forward() is linear, so the reconstruction of every iterate can be
    # tracked by combining cached forwards instead of re-applying the
    # operator: one adjoint and one forward per iteration.
    fwd_z = op.forward(z)
    fwd_y = fwd_z
    f_cur = objective(fwd_z, z)
    history = [f_cur]
    for _ in range(max_iters):
        grad = op.adjoint(fwd_y - b)
        cand = _soft(y - grad / step_l, alpha / step_l)
        fwd_cand = op.forward(cand)
        f_cand = objective(fwd_cand, cand)
        if f_cand <= f_cur:
            z_new, f_new, fwd_new = cand, f_cand, fwd_cand
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            theta = (t - 1.0) / t_new
            y = z_new + theta * (z_new - z)
            fwd_y = fwd_new + theta * (fwd_new - fwd_z)
            t = t_new
        else:
            grad = op.adjoint(fwd_z - b)
            z_new = _soft(z - grad / step_l, alpha / step_l)
            fwd_new = op.forward(z_new)
            f_new = objective(fwd_new, z_new)
            y = z_new.copy()
            fwd_y = fwd_new
            t = 1.0
        converged = abs(f_cur - f_new) <= tol * max(1.0, abs(f_cur))
        z, f_cur, fwd_z = z_new, f_new, fwd_new
        history.append(f_cur)
        if converged:
            break
    return z, history


@dataclass(frozen=True)
class ConvDictionary:
    """Learned convolution kernels, each with squared norm <= 1."""

    kernels: np.ndarray  # (K, s, s)
    lambda_train: float
    seed: int
    objective_history: tuple = field(default=(), compare=False)

    @property
    def n_kernels(self):
        return self.kernels.shape[0]

    @property
    def kernel_side(self):
        return self.kernels.shape[-1]


def _project_kernels(kernels):
    norms = np.sqrt((kernels**2).sum(axis=(1, 2), keepdims=True))
    return kernels / np.maximum(norms, 1.0)


def learn_dictionary(
    patches,
    n_kernels,
    kernel_side,
    lam,
    outer_iters=20,
    seed=0,
    inner_iters=50,
    dict_steps=5,
):
    """Alternating minimization of 0.5||y - sum_k D_k (*) Z_k||^2 + lam||Z||_1.

    The Z step is a warm-started monotone FISTA; the D step is projected
    gradient descent with backtracking onto {||D_k||^2 <= 1}. The recorded
    objective sequence is non-increasing (within floating-point noise).
    """
    data = [getattr(p, "data", p) for p in patches]
    if len(data) < n_kernels:
        raise TrainingError(
            f"need at least {n_kernels} patches, got {len(data)}"
        )
    if lam <= 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")
    b = np.asarray(data, dtype=np.float64)
    if b.ndim != 3 or b.shape[1] < kernel_side or b.shape[2] < kernel_side:
        raise ArgumentError(
            f"patches must be at least {kernel_side}x{kernel_side}"
        )
    b = b - b.mean(axis=(1, 2), keepdims=True)
    m, n = b.shape[1:]

    rng = np.random.default_rng(seed)
    kernels = rng.standard_normal((n_kernels, kernel_side, kernel_side))
    kernels /= np.sqrt((kernels**2).sum(axis=(1, 2), keepdims=True))

    z = np.zeros((b.shape[0], n_kernels, m, n))
    history = []
    step = 1.0
    for _ in range(outer_iters):
        op = _ConvOp(kernels, m, n)
        step_l = operator_norm_bound(kernels, m, n)
        z, _ = _fista(b, kernels, lam, step_l, inner_iters, 1e-10, z0=z, op=op)
        l1 = lam * np.abs(z).sum()

        def recon_err(k):
            r = _ConvOp(k, m, n).forward(z) - b
            return 0.5 * (r**2).sum()

        f_d = recon_err(kernels)
        for _ in range(dict_steps):
            op = _ConvOp(kernels, m, n)
            resid = op.forward(z) - b
            grad = op.kernel_gradient(z, resid)
            accepted = False
            trial = step
            for _ in range(30):
                cand = _project_kernels(kernels - trial * grad)
                f_cand = recon_err(cand)
                if f_cand <= f_d:
                    kernels, f_d = cand, f_cand
                    step = trial * 1.2
                    accepted = True
                    break
                trial *= 0.5
            if not accepted:
                break
        history.append(f_d + l1)

    hist = np.asarray(history)
    if len(hist) > 1:
        rises = np.diff(hist) / np.maximum(np.abs(hist[:-1]), 1.0)
        if (rises > _MONOTONE_RTOL).any():
            raise SolverError(
                "dictionary learning objective increased: "
                f"history={hist.tolist()}"
            )
    return ConvDictionary(
        kernels=kernels,
        lambda_train=float(lam),
        seed=int(seed),
        objective_history=tuple(hist.tolist()),
    )


def sparse_code(img, dictionary, alpha, max_iters=200, tol=1e-8, step_l=None):
    """Sparse feature maps (K, M, N) for an image under a fixed dictionary.

    Minimizes 0.5||I - sum_k D_k (*) Z_k||^2 + alpha||Z||_1 where I is the
    mean-subtracted image; accepted iterates are monotone in the objective.
    step_l may carry a precomputed operator-norm bound for this image size.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError(f"image must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("image contains non-finite values")
    if alpha < 0:
        raise ArgumentError(f"alpha must be >= 0, got {alpha}")
    kernels = dictionary.kernels
    b = arr - arr.mean()
    if step_l is None:
        step_l = operator_norm_bound(kernels, *b.shape)
    z, history = _fista(b, kernels, alpha, step_l, max_iters, tol)
    drops = np.diff(history)
    if (drops > 1e-9 * np.maximum(np.abs(np.asarray(history[:-1])), 1.0)).any():
        raise SolverError(f"sparse coding objective increased: {history}")
    return z


def code_objective(img, dictionary, z, alpha):
    """Objective value of a given code, for diagnostics and tests."""
    arr = np.asarray(img, dtype=np.float64)
    b = arr - arr.mean()
    return float(_objective(z, dictionary.kernels, b, alpha))


def activation_features(feature_maps, epsilon, use_abs=False):
    """Fraction of pixels per map whose response exceeds epsilon."""
    if epsilon < 0:
        raise ArgumentError(f"epsilon must be >= 0, got {epsilon}")
    z = np.asarray(feature_maps, dtype=np.float64)
    vals = np.abs(z) if use_abs else z
    k = z.shape[0]
    return (vals > epsilon).reshape(k, -1).mean(axis=1)


class ConvSparseCoder(BaseEstimator):
    """Estimator wrapper: fit learns the dictionary, transform maps an
    image to its activation-count feature vector."""

    def __init__(
        self,
        n_kernels=32,
        kernel_side=8,
        alpha=0.05,
        outer_iters=20,
        inner_iters=50,
        max_code_iters=200,
        epsilon=0.01,
        use_abs=False,
        seed=0,
    ):
        self.n_kernels = n_kernels
        self.kernel_side = kernel_side
        self.alpha = alpha
        self.outer_iters = outer_iters
        self.inner_iters = inner_iters
        self.max_code_iters = max_code_iters
        self.epsilon = epsilon
        self.use_abs = use_abs
        self.seed = seed

    def fit(self, patches):
        self.dictionary_ = learn_dictionary(
            patches,
            n_kernels=self.n_kernels,
            kernel_side=self.kernel_side,
            lam=self.alpha,
            outer_iters=self.outer_iters,
            seed=self.seed,
            inner_iters=self.inner_iters,
        )
        self._step_cache = {}
        return self

    def _step_bound(self, shape):
        cache = getattr(self, "_step_cache", None)
        if cache is None:
            cache = self._step_cache = {}
        if shape not in cache:
            cache[shape] = operator_norm_bound(self.dictionary_.kernels, *shape)
        return cache[shape]

    def sparse_code(self, img):
        arr = np.asarray(img, dtype=np.float64)
        step_l = self._step_bound(arr.shape) if arr.ndim == 2 else None
        return sparse_code(
            img,
            self.dictionary_,
            self.alpha,
            max_iters=self.max_code_iters,
            step_l=step_l,
        )

    def transform(self, img):
        check_gray_image(img, "image")
        return activation_features(
            self.sparse_code(img), self.epsilon, use_abs=self.use_abs
        )
