import numpy as np
import pytest
from oracles import gaussian_blur_direct

from hsriqm import BilateralParams, bilateral_filter, gaussian_blur
from hsriqm.errors import ArgumentError


def _step16():
    img = np.zeros((16, 16))
    img[:, 8:] = 1.0
    return img


class TestBilateral:
    def test_constant_idempotent_exact(self):
        img = np.full((20, 20), 0.5)
        out = bilateral_filter(img, BilateralParams(3.0, 0.1))
        assert np.array_equal(out, img)

    def test_gaussian_limit(self, textured_image):
        # grid_downsample=1 so only the range dimension is approximated;
        # an infinite sigma_range must then reduce to plain Gaussian blur
        params = BilateralParams(
            sigma_spatial=3.0, sigma_range=1e6, grid_downsample=1
        )
        out = bilateral_filter(textured_image, params)
        ref = gaussian_blur(textured_image, 3.0)
        assert np.abs(out - ref).max() < 1e-3

    def test_gaussian_blur_matches_direct_oracle(self, textured_image):
        ours = gaussian_blur(textured_image, 2.0)
        direct = gaussian_blur_direct(textured_image, 2.0)
        assert np.abs(ours - direct).max() < 1e-12

    def test_step_preservation_vs_gaussian(self):
        img = _step16()
        bil = bilateral_filter(img, BilateralParams(2.0, 0.1))
        gau = gaussian_blur(img, 2.0)

        def contrast(x):
            # bands of 3 columns on each side of the boundary
            return abs(x[:, 8:11].mean() - x[:, 5:8].mean())

        assert contrast(bil) > 0.8
        assert contrast(gau) < 0.8

    def test_output_within_input_range(self, textured_image):
        out = bilateral_filter(textured_image, BilateralParams(3.0, 0.1))
        assert out.min() >= textured_image.min() - 1e-12
        assert out.max() <= textured_image.max() + 1e-12

    def test_monotone_toward_gaussian_limit(self, textured_image):
        ref = gaussian_blur(textured_image, 3.0)
        dists = []
        for sr in (0.05, 0.5, 5.0):
            params = BilateralParams(3.0, sr, grid_downsample=1)
            out = bilateral_filter(textured_image, params)
            dists.append(np.abs(out - ref).max())
        assert dists[0] >= dists[1] >= dists[2] - 1e-12

    def test_rejects_nonpositive_sigma(self, textured_image):
        with pytest.raises(ArgumentError):
            bilateral_filter(textured_image, BilateralParams(0.0, 0.1))
        with pytest.raises(ArgumentError):
            bilateral_filter(textured_image, BilateralParams(3.0, -1.0))

    def test_shape_preserved(self, rng):
        img = rng.random((17, 31))
        out = bilateral_filter(img, BilateralParams(3.0, 0.1))
        assert out.shape == img.shape
