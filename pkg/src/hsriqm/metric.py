"""End-to-end metric: trains the three estimators, normalizes their raw
dissimilarities to [0, 1] and pools them into the final score S."""

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import container, contour, csc, preproc, register, regress, token
from .config import Config, config_from_dict
from .errors import ArgumentError, ModelError, StageError, TrainingError
from .token import ContourCodebook
from .validation import check_gray_image


@dataclass(frozen=True)
class NormStats:
    """Per-estimator (min, max) over the training corpus."""

    low: tuple
    mid: tuple
    high: tuple

    def validate(self):
        for name, (lo, hi) in (("low", self.low), ("mid", self.mid), ("high", self.high)):
            if not hi > lo:
                raise ModelError(
                    f"degenerate normalization bounds for {name}: [{lo}, {hi}]"
                )


def normalize(raw, bounds):
    """Map a raw dissimilarity into [0, 1], clamping unseen extremes."""
    lo, hi = bounds
    if not hi > lo:
        raise ModelError(f"normalization bounds must satisfy max > min: [{lo}, {hi}]")
    return float(np.clip((raw - lo) / (hi - lo), 0.0, 1.0))


def pool(d_norm, weights):
    """Weighted sum of the three normalized dissimilarities.

    Weights are renormalized by their sum, so configurations whose raw
    weights do not add to one keep their ratios.
    """
    w = np.asarray(weights, dtype=np.float64)
    d = np.asarray(d_norm, dtype=np.float64)
    if w.min() < 0:
        raise ArgumentError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ArgumentError("weights must not all be zero")
    return float((w / total) @ d)


@dataclass(frozen=True)
class ScoreReport:
    d_low: float
    d_mid: float
    d_high: float
    d_low_n: float
    d_mid_n: float
    d_high_n: float
    s: float
    config_fingerprint: str

    def to_dict(self):
        return {
            "d_low": self.d_low,
            "d_mid": self.d_mid,
            "d_high": self.d_high,
            "d_low_n": self.d_low_n,
            "d_mid_n": self.d_mid_n,
            "d_high_n": self.d_high_n,
            "s": self.s,
            "config_fingerprint": self.config_fingerprint,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class HierarchicalStructuralMetric(BaseEstimator):
    """Full-reference quality model over (reference, degraded) image pairs.

    fit() trains the contour codebook, the convolutional dictionary, the
    SVR pooling regressor and the normalization bounds from a corpus of
    pairs with subjective scores; score_pair() then produces a ScoreReport
    for any new pair. Higher S means more structural distortion.
    """

    def __init__(self, config=None):
        self.config = config

    # -- shared per-image processing ------------------------------------

    def _cfg(self):
        return self.config if self.config is not None else Config()

    def _bilateral(self, img):
        cfg = self._cfg()
        return preproc.bilateral_filter(
            img,
            preproc.BilateralParams(
                sigma_spatial=cfg.sigma_spatial,
                sigma_range=cfg.sigma_range,
                grid_downsample=cfg.grid_downsample,
            ),
        )

    def _canny(self, img):
        cfg = self._cfg()
        return contour.canny(
            img,
            contour.CannyParams(
                gaussian_sigma=cfg.canny_sigma,
                low_threshold=cfg.canny_low,
                high_threshold=cfg.canny_high,
            ),
        )

    # -- training ---------------------------------------------------------

    def _collect_codebook_patches(self, filtered_refs, contour_maps, rng):
        cfg = self._cfg()
        side = cfg.codebook_patch_side
        half = side // 2
        per_image = max(1, cfg.max_codebook_patches // max(len(filtered_refs), 1))
        patches = []
        for img, cmap in zip(filtered_refs, contour_maps):
            h, w = img.shape
            ys, xs = np.nonzero(cmap)
            inside = (
                (ys >= half) & (ys < h - half) & (xs >= half) & (xs < w - half)
            )
            ys, xs = ys[inside], xs[inside]
            if len(ys) == 0:
                continue
            take = min(per_image, len(ys))
            pick = rng.choice(len(ys), size=take, replace=False)
            for idx in pick:
                y, x = ys[idx], xs[idx]
                patches.append(img[y - half : y + half + 1, x - half : x + half + 1])
        return patches

    def _collect_dict_patches(
        self, contour_refs, contour_degs, filtered_degs, displacements
    ):
        """Degraded-image patches ranked by their local low-level score.

        The degraded contour map is first re-aligned by the modal
        displacement of the pair, so acceptable global shifts do not drown
        out genuine structural artifacts in the ranking.
        """
        cfg = self._cfg()
        side, stride = cfg.train_patch_side, cfg.train_patch_stride
        scored = []
        for cref, cdeg, fdeg, disp in zip(
            contour_refs, contour_degs, filtered_degs, displacements
        ):
            h, w = fdeg.shape
            if side > min(h, w):
                continue
            dy, dx = disp
            shifts, counts = np.unique(
                np.stack([dy.ravel(), dx.ravel()], axis=1), axis=0,
                return_counts=True,
            )
            mode_dy, mode_dx = (int(v) for v in shifts[np.argmax(counts)])
            yy = np.clip(np.arange(h) + mode_dy, 0, h - 1)
            xx = np.clip(np.arange(w) + mode_dx, 0, w - 1)
            cdeg_aligned = cdeg[np.ix_(yy, xx)]
            for top in range(0, h - side + 1, stride):
                for left in range(0, w - side + 1, stride):
                    sl = (slice(top, top + side), slice(left, left + side))
                    score = contour.d_low(cref[sl], cdeg_aligned[sl])
                    scored.append((score, fdeg[sl]))
        if not scored:
            raise TrainingError("no training patches could be extracted")
        scored.sort(key=lambda t: -t[0])
        n_keep = max(
            cfg.n_kernels, int(np.ceil(cfg.dict_patch_fraction * len(scored)))
        )
        n_keep = min(n_keep, cfg.max_dict_patches, len(scored))
        return [p for _, p in scored[:n_keep]]

    def fit(self, image_pairs, dmos, groups):
        """Train all model components.

        image_pairs: list of (reference, degraded) luminance arrays;
        dmos: subjective distortion scores; groups: content labels used
        for leakage-free cross-validation splits.
        """
        cfg = self._cfg()
        dmos = np.asarray(dmos, dtype=np.float64)
        groups = np.asarray(groups)
        if not (len(image_pairs) == len(dmos) == len(groups)):
            raise ArgumentError("image_pairs, dmos and groups must align")
        rng = np.random.default_rng(cfg.seed)

        filtered = [
            (self._bilateral(check_gray_image(r)), self._bilateral(check_gray_image(d)))
            for r, d in image_pairs
        ]
        cmaps = [(self._canny(fr), self._canny(fd)) for fr, fd in filtered]

        # mid-level codebook from reference contours
        cb_patches = self._collect_codebook_patches(
            [fr for fr, _ in filtered], [cr for cr, _ in cmaps], rng
        )
        self.codebook_ = ContourCodebook(
            n_categories=cfg.n_categories,
            patch_side=cfg.codebook_patch_side,
            seed=cfg.seed,
        ).fit(cb_patches)

        # high-level dictionary from visibly distorted degraded patches
        displacements = [
            register.match_pixels(
                fr, fd, block=cfg.block, search_radius=cfg.search_radius
            )
            for fr, fd in filtered
        ]
        dict_patches = self._collect_dict_patches(
            [cr for cr, _ in cmaps],
            [cd for _, cd in cmaps],
            [fd for _, fd in filtered],
            displacements,
        )
        self.coder_ = csc.ConvSparseCoder(
            n_kernels=cfg.n_kernels,
            kernel_side=cfg.kernel_side,
            alpha=cfg.alpha,
            outer_iters=cfg.outer_iters,
            inner_iters=cfg.inner_iters,
            max_code_iters=cfg.max_code_iters,
            epsilon=cfg.epsilon,
            use_abs=cfg.abs_activation,
            seed=cfg.seed,
        ).fit(dict_patches)

        # per-pair features and SVR pooling model. References are undegraded
        # by definition, so each distinct reference enters the training set
        # once with a subjective score of zero: this anchors the regressor at
        # the distortion-free end of the scale so that the high-level
        # dissimilarity |SVR(f_ref) - SVR(f_deg)| grows with degradation
        # instead of measuring distance to an arbitrary extrapolation value.
        feats_ref = np.array([self.coder_.transform(fr) for fr, _ in filtered])
        feats_deg = np.array([self.coder_.transform(fd) for _, fd in filtered])
        train_feats = [row for row in feats_deg]
        train_targets = list(dmos)
        train_groups = list(groups)
        seen_refs = set()
        for i in range(len(filtered)):
            key = (groups[i], feats_ref[i].tobytes())
            if key in seen_refs:
                continue
            seen_refs.add(key)
            train_feats.append(feats_ref[i])
            train_targets.append(0.0)
            train_groups.append(groups[i])
        self.svr_, self.cv_scores_, self.cv_round_ = regress.cross_validate_median(
            np.array(train_feats),
            np.array(train_targets),
            np.array(train_groups),
            params=self._svr_params(),
            n_rounds=cfg.cv_rounds,
            seed=cfg.seed,
        )

        # raw dissimilarities over the training corpus -> normalization
        raw = np.array(
            [
                self._raw_dissimilarities(filtered[i], cmaps[i], feats=(feats_ref[i], feats_deg[i]))
                for i in range(len(filtered))
            ]
        )
        self.norm_stats_ = NormStats(
            low=(float(raw[:, 0].min()), float(raw[:, 0].max())),
            mid=(float(raw[:, 1].min()), float(raw[:, 1].max())),
            high=(float(raw[:, 2].min()), float(raw[:, 2].max())),
        )
        self.norm_stats_.validate()
        return self

    def _svr_params(self):
        cfg = self._cfg()
        return {
            "kernel": cfg.svr_kernel,
            "gamma": cfg.svr_gamma if cfg.svr_gamma > 0 else None,
            "C": cfg.svr_c,
            "eps_tube": cfg.svr_eps,
        }

    # -- scoring ----------------------------------------------------------

    def _raw_dissimilarities(self, filtered_pair, contour_pair, feats=None):
        cfg = self._cfg()
        fref, fdeg = filtered_pair
        cref, cdeg = contour_pair

        d_l = contour.d_low(cref, cdeg)

        disp = register.match_pixels(
            fref, fdeg, block=cfg.block, search_radius=cfg.search_radius
        )
        tf_ref = token.token_field(fref, cref, self.codebook_)
        tf_deg = token.token_field(fdeg, cdeg, self.codebook_)
        d_m = token.d_mid(tf_ref, tf_deg, disp, beta=cfg.beta, mode=cfg.mid_norm)

        if feats is None:
            feats = (self.coder_.transform(fref), self.coder_.transform(fdeg))
        d_h = regress.d_high(self.svr_, feats[0], feats[1])
        return d_l, d_m, d_h

    def score_pair(self, ref_img, deg_img):
        """ScoreReport for one (reference, degraded) pair of luminance arrays."""
        cfg = self._cfg()
        stage = "validate"
        try:
            ref = check_gray_image(ref_img, "reference image")
            deg = check_gray_image(deg_img, "degraded image")
            stage = "bilateral"
            filtered = (self._bilateral(ref), self._bilateral(deg))
            stage = "contours"
            cmaps = (self._canny(filtered[0]), self._canny(filtered[1]))
            stage = "dissimilarities"
            d_l, d_m, d_h = self._raw_dissimilarities(filtered, cmaps)
            stage = "pooling"
            d_ln = normalize(d_l, self.norm_stats_.low)
            d_mn = normalize(d_m, self.norm_stats_.mid)
            d_hn = normalize(d_h, self.norm_stats_.high)
            s = pool((d_ln, d_mn, d_hn), (cfg.w_low, cfg.w_mid, cfg.w_high))
        except Exception as exc:
            raise StageError(stage, exc) from exc
        return ScoreReport(
            d_low=float(d_l),
            d_mid=float(d_m),
            d_high=float(d_h),
            d_low_n=d_ln,
            d_mid_n=d_mn,
            d_high_n=d_hn,
            s=s,
            config_fingerprint=cfg.fingerprint(),
        )

    def predict(self, image_pairs):
        """Pooled scores S for a list of (reference, degraded) pairs."""
        return np.array([self.score_pair(r, d).s for r, d in image_pairs])

    # -- persistence --------------------------------------------------------

    def save(self, path):
        cfg = self._cfg()
        meta = {
            "config": cfg.to_dict(),
            "fingerprint": cfg.fingerprint(),
            "svr_kernel": self.svr_.kernel,
            "svr_gamma": self.svr_.gamma_,
            "svr_c": self.svr_.C,
            "svr_eps": self.svr_.eps_tube,
            "codebook_patch_side": self.codebook_.patch_side,
            "codebook_temperature": self.codebook_.temperature_,
            "cv_round": int(self.cv_round_),
        }
        arrays = {
            "codebook_centroids": self.codebook_.centroids_,
            "dict_kernels": self.coder_.dictionary_.kernels,
            "svr_support_vectors": self.svr_.support_vectors_,
            "svr_dual_coef": self.svr_.dual_coef_,
            "svr_intercept": np.array([self.svr_.intercept_]),
            "svr_feature_mean": self.svr_.mean_,
            "svr_feature_scale": self.svr_.scale_,
            "norm_stats": np.array(
                [self.norm_stats_.low, self.norm_stats_.mid, self.norm_stats_.high]
            ),
            "cv_scores": np.asarray(self.cv_scores_),
        }
        container.save_container(path, meta, arrays)

    @classmethod
    def load(cls, path):
        meta, arrays = container.load_container(path)
        cfg = config_from_dict(meta["config"])
        model = cls(config=cfg)

        cb = ContourCodebook(
            n_categories=arrays["codebook_centroids"].shape[0],
            patch_side=int(meta["codebook_patch_side"]),
            seed=cfg.seed,
        )
        cb.centroids_ = arrays["codebook_centroids"]
        cb.temperature_ = float(meta["codebook_temperature"])
        model.codebook_ = cb

        coder = csc.ConvSparseCoder(
            n_kernels=arrays["dict_kernels"].shape[0],
            kernel_side=arrays["dict_kernels"].shape[-1],
            alpha=cfg.alpha,
            max_code_iters=cfg.max_code_iters,
            epsilon=cfg.epsilon,
            use_abs=cfg.abs_activation,
            seed=cfg.seed,
        )
        coder.dictionary_ = csc.ConvDictionary(
            kernels=arrays["dict_kernels"], lambda_train=cfg.alpha, seed=cfg.seed
        )
        model.coder_ = coder

        svr = regress.SupportVectorRegressor(
            kernel=meta["svr_kernel"],
            gamma=meta["svr_gamma"],
            C=meta["svr_c"],
            eps_tube=meta["svr_eps"],
        )
        svr.gamma_ = float(meta["svr_gamma"])
        svr.support_vectors_ = arrays["svr_support_vectors"]
        svr.dual_coef_ = arrays["svr_dual_coef"]
        svr.intercept_ = float(arrays["svr_intercept"][0])
        svr.mean_ = arrays["svr_feature_mean"]
        svr.scale_ = arrays["svr_feature_scale"]
        svr.n_features_in_ = arrays["svr_support_vectors"].shape[-1]
        model.svr_ = svr

        ns = arrays["norm_stats"]
        model.norm_stats_ = NormStats(
            low=(float(ns[0, 0]), float(ns[0, 1])),
            mid=(float(ns[1, 0]), float(ns[1, 1])),
            high=(float(ns[2, 0]), float(ns[2, 1])),
        )
        model.norm_stats_.validate()
        model.cv_scores_ = arrays["cv_scores"]
        model.cv_round_ = int(meta["cv_round"])
        return model
