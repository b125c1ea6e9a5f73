import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def textured_image(rng):
    """64x64 smooth random texture with enough local variance for NCC."""
    from scipy import ndimage

    img = ndimage.gaussian_filter(rng.random((64, 64)), 1.0)
    return (img - img.min()) / (img.max() - img.min())


@pytest.fixture(scope="session")
def tiny_config():
    """Small but fully functional configuration for fast pipeline tests."""
    from hsriqm import Config

    return Config(
        n_categories=4,
        max_codebook_patches=200,
        n_kernels=4,
        kernel_side=5,
        outer_iters=3,
        inner_iters=15,
        max_code_iters=60,
        cv_rounds=20,
        train_patch_side=24,
        train_patch_stride=12,
        max_dict_patches=16,
    )


@pytest.fixture(scope="session")
def tiny_corpus():
    from synth import corpus

    return corpus(n_refs=5, amplitudes=(1, 4), size=48, seed=7)


@pytest.fixture(scope="session")
def tiny_model(tiny_config, tiny_corpus):
    from hsriqm import HierarchicalStructuralMetric

    pairs, dmos, groups = tiny_corpus
    return HierarchicalStructuralMetric(config=tiny_config).fit(
        pairs, dmos, groups
    )
