import numpy as np
import pytest
from PIL import Image

from hsriqm import extract_patches, load_image, save_pgm
from hsriqm.container import MAGIC, load_container, save_container
from hsriqm.errors import ArgumentError, FormatError
from hsriqm.validation import (
    check_binary_map,
    check_gray_image,
    check_prob_vector,
)


def _write_pgm(path, values, w, h):
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(bytes(values))


class TestLoadImage:
    def test_pgm_rescale(self, tmp_path):
        p = tmp_path / "a.pgm"
        _write_pgm(p, [0, 255, 128, 64], 2, 2)
        img = load_image(str(p))
        assert np.allclose(img, np.array([[0, 1], [128 / 255, 64 / 255]]))

    def test_white_ppm_pixel(self, tmp_path):
        p = tmp_path / "w.ppm"
        Image.new("RGB", (1, 1), (255, 255, 255)).save(p)
        assert load_image(str(p))[0, 0] == pytest.approx(1.0)

    def test_red_pixel_luma(self, tmp_path):
        p = tmp_path / "r.png"
        Image.new("RGB", (1, 1), (255, 0, 0)).save(p)
        assert load_image(str(p))[0, 0] == pytest.approx(0.299)

    def test_unsupported_extension(self, tmp_path):
        p = tmp_path / "a.bmp"
        p.write_bytes(b"x")
        with pytest.raises(FormatError):
            load_image(str(p))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IOError):
            load_image(str(tmp_path / "nope.png"))

    def test_pgm_roundtrip_within_quantization(self, tmp_path, rng):
        img = rng.random((7, 9))
        p = tmp_path / "rt.pgm"
        save_pgm(str(p), img)
        back = load_image(str(p))
        assert np.abs(back - img).max() <= 1.0 / 255.0 + 1e-12


class TestExtractPatches:
    def test_single_placement(self, rng):
        img = rng.random((8, 8))
        assert len(extract_patches(img, 8, 1)) == 1

    def test_tiling(self, rng):
        assert len(extract_patches(rng.random((8, 8)), 4, 4)) == 4

    def test_strided_count(self, rng):
        assert len(extract_patches(rng.random((10, 10)), 4, 3)) == 9

    def test_count_formula(self, rng):
        img = rng.random((23, 17))
        side, stride = 5, 3
        n = len(extract_patches(img, side, stride))
        per_h = (23 - side) // stride + 1
        per_w = (17 - side) // stride + 1
        assert n == per_h * per_w

    def test_row_major_order_and_content(self, rng):
        img = rng.random((6, 6))
        patches = extract_patches(img, 3, 3, image_id="im")
        assert [p.source[1] for p in patches] == [(0, 0), (0, 3), (3, 0), (3, 3)]
        assert np.array_equal(patches[1].data, img[0:3, 3:6])

    def test_side_too_large(self, rng):
        with pytest.raises(ArgumentError):
            extract_patches(rng.random((4, 4)), 5, 1)

    def test_side_too_small(self, rng):
        with pytest.raises(ArgumentError):
            extract_patches(rng.random((8, 8)), 2, 1)


class TestContainer:
    def test_roundtrip(self, tmp_path, rng):
        path = str(tmp_path / "m.bin")
        meta = {"a": 1, "b": [1.5, "x"]}
        arrays = {"k": rng.random((3, 4, 5)), "v": np.arange(7)}
        save_container(path, meta, arrays)
        meta2, arrays2 = load_container(path)
        assert meta2 == meta
        for name in arrays:
            assert np.array_equal(arrays2[name], arrays[name])
            assert arrays2[name].dtype == arrays[name].dtype

    def test_deterministic_bytes(self, tmp_path, rng):
        arr = rng.random((4, 4))
        p1, p2 = str(tmp_path / "1.bin"), str(tmp_path / "2.bin")
        save_container(p1, {"z": 1, "a": 2}, {"y": arr, "b": arr.T})
        save_container(p2, {"a": 2, "z": 1}, {"b": arr.T, "y": arr})
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_magic_check(self, tmp_path):
        p = tmp_path / "bad.bin"
        p.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
        with pytest.raises(FormatError):
            load_container(str(p))

    def test_magic_value(self):
        assert MAGIC == b"HSRIQM01"


class TestValidation:
    def test_rejects_out_of_range(self):
        with pytest.raises(ArgumentError):
            check_gray_image(np.array([[0.5, 1.5]]))

    def test_rejects_nan(self):
        with pytest.raises(ArgumentError):
            check_gray_image(np.array([[np.nan, 0.5]]))

    def test_rejects_3d(self):
        with pytest.raises(ArgumentError):
            check_gray_image(np.zeros((2, 2, 3)))

    def test_binary_map(self):
        out = check_binary_map(np.array([[0, 1], [1, 0]]))
        assert out.dtype == bool
        with pytest.raises(ArgumentError):
            check_binary_map(np.array([[0, 2]]))

    def test_prob_vector(self):
        check_prob_vector([0.5, 0.5])
        with pytest.raises(ArgumentError):
            check_prob_vector([0.6, 0.6])
        with pytest.raises(ArgumentError):
            check_prob_vector([-0.1, 1.1])
