import numpy as np
import pytest
from oracles import d_low_brute, dilate_plus_brute

from hsriqm import CannyParams, canny, d_low, dilate_plus
from hsriqm.errors import ArgumentError


def _step16():
    img = np.zeros((16, 16))
    img[:, 8:] = 1.0
    return img


class TestCanny:
    def test_constant_image_empty(self):
        out = canny(np.full((16, 16), 0.3), CannyParams())
        assert not out.any()

    def test_vertical_step_line(self):
        out = canny(_step16(), CannyParams())
        ys, xs = np.nonzero(out)
        assert len(ys) >= 14
        assert set(xs) <= {7, 8}
        # one contiguous near-vertical line: every row hit at most once
        assert len(set(ys)) == len(ys)

    def test_transpose_symmetry(self):
        img = _step16()
        out = canny(img, CannyParams())
        out_t = canny(img.T.copy(), CannyParams())
        assert np.array_equal(out_t, out.T)

    def test_threshold_order_validated(self):
        with pytest.raises(ArgumentError):
            canny(_step16(), CannyParams(low_threshold=0.3, high_threshold=0.2))


class TestDilatePlus:
    def test_empty(self):
        assert not dilate_plus(np.zeros((5, 5), dtype=bool)).any()

    def test_center_plus(self):
        m = np.zeros((5, 5), dtype=bool)
        m[2, 2] = True
        out = dilate_plus(m)
        expect = {(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)}
        assert set(zip(*np.nonzero(out))) == expect

    def test_corner_clip(self):
        m = np.zeros((5, 5), dtype=bool)
        m[0, 0] = True
        out = dilate_plus(m)
        assert set(zip(*np.nonzero(out))) == {(0, 0), (0, 1), (1, 0)}

    def test_matches_brute_oracle(self, rng):
        for _ in range(20):
            m = rng.random((9, 11)) < 0.2
            assert np.array_equal(dilate_plus(m), dilate_plus_brute(m))


class TestDLow:
    def test_identical_zero(self, rng):
        m = rng.random((8, 8)) < 0.3
        assert d_low(m, m) == 0.0

    def test_hand_example(self):
        ref = np.zeros((5, 5), dtype=bool)
        deg = np.zeros((5, 5), dtype=bool)
        ref[2, 2] = True
        deg[2, 4] = True
        assert d_low(ref, deg) == pytest.approx(0.875)

    def test_full_vs_empty(self):
        ref = np.ones((4, 4), dtype=bool)
        deg = np.zeros((4, 4), dtype=bool)
        assert d_low(ref, deg) == 1.0

    def test_both_empty(self):
        z = np.zeros((4, 4), dtype=bool)
        assert d_low(z, z) == 0.0

    def test_symmetry_and_bounds(self, rng):
        for _ in range(20):
            a = rng.random((12, 12)) < 0.2
            b = rng.random((12, 12)) < 0.2
            v = d_low(a, b)
            assert v == d_low(b, a)
            assert 0.0 <= v <= 1.0

    def test_matches_brute_oracle_sample(self, rng):
        for _ in range(10):
            a = rng.random((10, 10)) < 0.25
            b = rng.random((10, 10)) < 0.25
            assert d_low(a, b) == pytest.approx(d_low_brute(a, b), abs=0)

    def test_deletion_monotonicity(self, rng):
        base = rng.random((32, 32)) < 0.2
        ys, xs = np.nonzero(base)
        medians = []
        for p in np.arange(0.1, 0.91, 0.2):
            vals = []
            for _ in range(50):
                kill = rng.random(len(ys)) < p
                deg = base.copy()
                deg[ys[kill], xs[kill]] = False
                vals.append(d_low(base, deg))
            medians.append(np.median(vals))
        assert all(b >= a - 1e-12 for a, b in zip(medians, medians[1:]))

    def test_dimension_mismatch(self):
        with pytest.raises(ArgumentError):
            d_low(np.zeros((4, 4), dtype=bool), np.zeros((5, 4), dtype=bool))
