"""High-level dissimilarity regressor: epsilon-insensitive SVR solved by
sequential minimal optimization, plus repeated grouped cross-validation
with median-model selection."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .errors import ArgumentError, TrainingError

_TAU = 1e-12


def _smo(k2, c_lin, lower, upper, tol, max_iter):
    """Minimize 0.5 v'Kv + c'v subject to sum(v)=0, lower<=v<=upper.

    Maximal-violating-pair working set selection; returns (v, bias) where
    the bias is the constraint multiplier -(m+M)/2 at convergence.
    """
    n2 = len(c_lin)
    v = np.zeros(n2)
    g = c_lin.copy()
    for _ in range(max_iter):
        can_up = v < upper - _TAU
        can_down = v > lower + _TAU
        if not can_up.any() or not can_down.any():
            break
        i = np.where(can_up, g, np.inf).argmin()
        j = np.where(can_down, g, -np.inf).argmax()
        m_val, big_m = g[i], g[j]
        if big_m - m_val <= tol:
            break
        quad = k2[i, i] + k2[j, j] - 2.0 * k2[i, j]
        step = (big_m - m_val) / max(quad, _TAU)
        step = min(step, upper[i] - v[i], v[j] - lower[j])
        v[i] += step
        v[j] -= step
        g += step * (k2[:, i] - k2[:, j])
    can_up = v < upper - _TAU
    can_down = v > lower + _TAU
    lo = g[can_up].min() if can_up.any() else g.min()
    hi = g[can_down].max() if can_down.any() else g.max()
    bias = -0.5 * (lo + hi)
    gap = max(hi - lo, 0.0)
    return v, bias, gap


class SupportVectorRegressor(BaseEstimator, RegressorMixin):
    """Epsilon-insensitive SVR trained with an SMO solver.

    Features are standardized internally; constant feature dimensions get
    unit scale. After fit: `support_vectors_`, `dual_coef_`, `intercept_`.
    """

    def __init__(
        self,
        kernel="rbf",
        gamma=None,  # None -> 1 / n_features
        C=10.0,
        eps_tube=0.1,
        tol=1e-4,
        max_iter=200000,
    ):
        self.kernel = kernel
        self.gamma = gamma
        self.C = C
        self.eps_tube = eps_tube
        self.tol = tol
        self.max_iter = max_iter

    def _kernel_matrix(self, a, b):
        if self.kernel == "linear":
            return a @ b.T
        if self.kernel == "rbf":
            gamma = self.gamma_
            sq = (
                (a**2).sum(axis=1)[:, None]
                - 2.0 * (a @ b.T)
                + (b**2).sum(axis=1)[None, :]
            )
            return np.exp(-gamma * np.maximum(sq, 0.0))
        raise ArgumentError(f"unknown kernel '{self.kernel}'")

    def fit(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if x.ndim != 2:
            raise ArgumentError("features must be a 2-D array")
        if len(x) != len(y):
            raise ArgumentError("feature/target length mismatch")
        if len(x) < 1:
            raise ArgumentError("need at least one training sample")
        n, d = x.shape
        self.mean_ = x.mean(axis=0)
        std = x.std(axis=0)
        self.scale_ = np.where(std > 1e-12, std, 1.0)
        xs = (x - self.mean_) / self.scale_
        self.gamma_ = self.gamma if self.gamma is not None else 1.0 / d

        k = self._kernel_matrix(xs, xs)
        k2 = np.tile(k, (2, 2))
        c_lin = np.concatenate([self.eps_tube - y, -self.eps_tube - y])
        lower = np.concatenate([np.zeros(n), -np.full(n, self.C)])
        upper = np.concatenate([np.full(n, self.C), np.zeros(n)])
        v, bias, gap = _smo(k2, c_lin, lower, upper, self.tol, self.max_iter)

        coef = v[:n] + v[n:]
        self.intercept_ = float(bias)
        self.kkt_gap_ = float(gap)
        sv = np.abs(coef) > 1e-12
        self.support_vectors_ = xs[sv]
        self.dual_coef_ = coef[sv]
        self.n_features_in_ = d
        fit_residual = np.abs(self._decision(xs) - y)
        # a model whose residual RMS is close to the target spread explains
        # almost none of the variance; flag it so callers can warn
        rms = float(np.sqrt(np.mean(np.square(fit_residual))))
        self.poor_fit_ = bool(rms > max(self.eps_tube, 0.9 * np.std(y)))
        return self

    def _decision(self, xs):
        if len(self.dual_coef_) == 0:
            return np.full(len(xs), self.intercept_)
        k = self._kernel_matrix(xs, self.support_vectors_)
        return k @ self.dual_coef_ + self.intercept_

    def predict(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features_in_:
            raise ArgumentError(
                f"expected {self.n_features_in_} features, got {x.shape[1]}"
            )
        return self._decision((x - self.mean_) / self.scale_)


def pearson(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.std() == 0 or b.std() == 0:
        return np.nan
    return float(np.corrcoef(a, b)[0, 1])


def cross_validate_median(
    features,
    targets,
    groups,
    params=None,
    n_rounds=1000,
    train_frac=0.8,
    seed=0,
):
    """Repeated group-level 80/20 splits; returns the median-PCC model.

    Each round permutes the content groups, trains on the first 80% of
    groups and scores held-out PCC. The model refit on the round whose
    PCC is the sample median (lower median for even counts) is returned,
    along with the PCC distribution and the selected round index.
    """
    feats = np.asarray(features, dtype=np.float64)
    targs = np.asarray(targets, dtype=np.float64).ravel()
    groups = np.asarray(groups)
    if len(feats) != len(targs) or len(feats) != len(groups):
        raise ArgumentError("features, targets and groups must align")
    uniq = np.unique(groups)
    if len(uniq) < 5:
        raise ArgumentError(
            f"need at least 5 content groups for cross-validation, got {len(uniq)}"
        )
    n_train = max(1, int(round(train_frac * len(uniq))))
    if n_train >= len(uniq):
        n_train = len(uniq) - 1
    params = dict(params or {})

    def round_split(idx):
        rng = np.random.default_rng([int(seed), int(idx)])
        perm = rng.permutation(uniq)
        train_groups = set(perm[:n_train].tolist())
        train_mask = np.array([g in train_groups for g in groups])
        return train_mask

    scores = np.full(n_rounds, np.nan)
    for rnd in range(n_rounds):
        train_mask = round_split(rnd)
        model = SupportVectorRegressor(**params).fit(
            feats[train_mask], targs[train_mask]
        )
        pred = model.predict(feats[~train_mask])
        scores[rnd] = pearson(pred, targs[~train_mask])

    valid = np.where(np.isfinite(scores))[0]
    if len(valid) == 0:
        raise TrainingError("held-out PCC undefined in every round")
    order = valid[np.argsort(scores[valid], kind="stable")]
    median_round = int(order[(len(order) - 1) // 2])

    train_mask = round_split(median_round)
    model = SupportVectorRegressor(**params).fit(
        feats[train_mask], targs[train_mask]
    )
    return model, scores, median_round


def d_high(model, f_ref, f_deg):
    """Absolute difference of the predicted quality of the two features."""
    pred = model.predict(np.vstack([f_ref, f_deg]))
    return float(abs(pred[0] - pred[1]))
