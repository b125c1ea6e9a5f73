"""Runtime configuration: every tunable of the pipeline, JSON-loadable,
with a stable fingerprint recorded in all outputs."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .errors import ArgumentError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Config:
    # preprocessing (bilateral filter)
    sigma_spatial: float = 3.0
    sigma_range: float = 0.1
    grid_downsample: int = 0  # 0 -> ceil(sigma_spatial)
    # contour detection
    canny_sigma: float = 1.4
    canny_low: float = 0.08
    canny_high: float = 0.2
    # registration
    block: int = 9
    search_radius: int = 4
    # mid-level codebook and pooling
    n_categories: int = 32
    codebook_patch_side: int = 15
    max_codebook_patches: int = 2000
    beta: float = 4.0
    mid_norm: str = "literal"  # or "mean_power"
    # high-level sparse coding
    n_kernels: int = 32
    kernel_side: int = 8
    alpha: float = 0.05
    epsilon: float = 0.01
    abs_activation: bool = False
    outer_iters: int = 20
    inner_iters: int = 30
    max_code_iters: int = 120
    train_patch_side: int = 32
    train_patch_stride: int = 16
    dict_patch_fraction: float = 0.10  # top fraction by low-level score
    max_dict_patches: int = 64
    # regression
    svr_kernel: str = "rbf"
    svr_gamma: float = 0.0  # 0 -> 1 / feature dim
    svr_c: float = 10.0
    svr_eps: float = 0.1
    cv_rounds: int = 1000
    # pooling weights (renormalized to sum to 1 at use time)
    w_low: float = 0.05
    w_mid: float = 0.25
    w_high: float = 0.75
    # determinism
    seed: int = 0

    def __post_init__(self):
        if self.mid_norm not in ("literal", "mean_power"):
            raise ArgumentError(f"mid_norm must be literal|mean_power, got {self.mid_norm!r}")
        if self.svr_kernel not in ("rbf", "linear"):
            raise ArgumentError(f"svr_kernel must be rbf|linear, got {self.svr_kernel!r}")
        if min(self.w_low, self.w_mid, self.w_high) < 0:
            raise ArgumentError("pooling weights must be nonnegative")
        if self.w_low + self.w_mid + self.w_high <= 0:
            raise ArgumentError("pooling weights must not all be zero")
        if not 0 < self.dict_patch_fraction <= 1:
            raise ArgumentError("dict_patch_fraction must be in (0, 1]")

    def to_dict(self):
        return dataclasses.asdict(self)

    def fingerprint(self):
        payload = {"format": FORMAT_VERSION, "config": self.to_dict()}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)


def config_from_dict(data):
    known = {f.name for f in dataclasses.fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
    return Config(**data)


def load_config(path):
    with open(path) as fh:
        return config_from_dict(json.load(fh))
