"""Hierarchical structural quality metric for synthesized views.

Three dissimilarity estimators over a (reference, degraded) image pair:
contour XOR (low level), contour-category divergence (mid level) and
sparse-activation regression differences (high level), linearly pooled
into a single score S in [0, 1].
"""

from .config import Config
from .contour import CannyParams, canny, d_low, dilate_plus
from .csc import (
    ConvDictionary,
    ConvSparseCoder,
    activation_features,
    learn_dictionary,
    sparse_code,
)
from .evaluation import evaluate, f_test, logistic_fit, pcc, rmse, scc, weight_sweep
from .imgio import extract_patches, load_image, save_pgm
from .metric import (
    HierarchicalStructuralMetric,
    NormStats,
    ScoreReport,
    normalize,
    pool,
)
from .preproc import BilateralParams, bilateral_filter, gaussian_blur
from .register import match_pixels
from .regress import SupportVectorRegressor, cross_validate_median, d_high
from .token import ContourCodebook, d_mid, jsd, token_field, train_codebook

__all__ = [
    "BilateralParams",
    "CannyParams",
    "Config",
    "ContourCodebook",
    "ConvDictionary",
    "ConvSparseCoder",
    "HierarchicalStructuralMetric",
    "NormStats",
    "ScoreReport",
    "SupportVectorRegressor",
    "activation_features",
    "bilateral_filter",
    "canny",
    "cross_validate_median",
    "d_high",
    "d_low",
    "d_mid",
    "dilate_plus",
    "evaluate",
    "extract_patches",
    "f_test",
    "gaussian_blur",
    "jsd",
    "learn_dictionary",
    "load_image",
    "logistic_fit",
    "match_pixels",
    "normalize",
    "pcc",
    "pool",
    "rmse",
    "save_pgm",
    "scc",
    "sparse_code",
    "token_field",
    "train_codebook",
    "weight_sweep",
]

__version__ = "0.1.0"
