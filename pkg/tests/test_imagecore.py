import numpy as np
import pytest
from PIL import Image

from edgebench.errors import (
    ChannelMismatchError,
    CorruptDataError,
    DimensionMismatchError,
    InvalidParameterError,
    OutOfBoundsError,
    UnsupportedFormatError,
)
from edgebench.imagecore import (
    Rect,
    apply_mask,
    crop,
    hsv_to_rgb,
    load_image,
    load_mask,
    mask_from_image,
    mask_to_image,
    rgb_to_hsv,
    save_image,
)


class TestPnm:
    def test_p6_all_zero(self, tmp_path):
        path = tmp_path / "z.ppm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
        img = load_image(path)
        assert img.shape == (2, 2, 3)
        assert img.dtype == np.uint8
        assert not img.any()

    def test_p5_header_and_payload(self, tmp_path):
        path = tmp_path / "g.pgm"
        path.write_bytes(b"P5 3 1 255 " + bytes([0, 128, 255]))
        img = load_image(path)
        assert img.shape == (1, 3)
        assert img.tolist() == [[0, 128, 255]]

    def test_header_comments(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 # inline\n1\n255\n" + bytes([7, 9]))
        assert load_image(path).tolist() == [[7, 9]]

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.ppm"
        path.write_bytes(b"P6\n4 4\n255\n" + bytes(10))
        with pytest.raises(CorruptDataError):
            load_image(path)

    def test_sixteen_bit_rejected(self, tmp_path):
        path = tmp_path / "deep.pgm"
        path.write_bytes(b"P5\n1 1\n65535\n\x01\x00")
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_garbage_header(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\nnope\n")
        with pytest.raises(CorruptDataError):
            load_image(path)


class TestRoundTrips:
    @pytest.mark.parametrize("suffix", [".png", ".ppm"])
    def test_color_round_trip(self, tmp_path, suffix):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        path = tmp_path / f"rt{suffix}"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)

    @pytest.mark.parametrize("suffix", [".png", ".pgm"])
    def test_gray_round_trip(self, tmp_path, suffix):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, (11, 7), dtype=np.uint8)
        path = tmp_path / f"rt{suffix}"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)

    def test_single_white_pixel_pgm(self, tmp_path):
        img = np.array([[255]], dtype=np.uint8)
        path = tmp_path / "w.pgm"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)

    def test_ramp_ppm(self, tmp_path):
        img = np.arange(18, dtype=np.uint8).reshape(3, 2, 3)
        path = tmp_path / "ramp.ppm"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)

    def test_missing_parent_dir_is_io_error(self, tmp_path):
        img = np.zeros((2, 2), dtype=np.uint8)
        with pytest.raises(OSError):
            save_image(img, tmp_path / "nope" / "x.png")

    def test_wrong_extension(self, tmp_path):
        with pytest.raises(UnsupportedFormatError):
            save_image(np.zeros((2, 2), dtype=np.uint8), tmp_path / "x.bmp")

    def test_gray_to_ppm_rejected(self, tmp_path):
        with pytest.raises(UnsupportedFormatError):
            save_image(np.zeros((2, 2), dtype=np.uint8), tmp_path / "x.ppm")


class TestPng:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "absent.png")

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "not.png"
        path.write_bytes(b"hello world, definitely not a raster")
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_truncated_png(self, tmp_path):
        good = tmp_path / "good.png"
        save_image(np.zeros((8, 8, 3), dtype=np.uint8), good)
        bad = tmp_path / "bad.png"
        bad.write_bytes(good.read_bytes()[:40])
        with pytest.raises(CorruptDataError):
            load_image(bad)

    def test_sixteen_bit_png_rejected(self, tmp_path):
        path = tmp_path / "deep.png"
        Image.fromarray(np.full((2, 2), 300, dtype=np.uint16)).save(path)
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_alpha_rejected(self, tmp_path):
        path = tmp_path / "rgba.png"
        Image.new("RGBA", (2, 2), (1, 2, 3, 4)).save(path)
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_palette_converted_to_rgb(self, tmp_path):
        path = tmp_path / "pal.png"
        Image.new("RGB", (2, 2), (10, 20, 30)).convert("P", palette=Image.Palette.ADAPTIVE).save(path)
        img = load_image(path)
        assert img.shape == (2, 2, 3)
        assert img[0, 0].tolist() == [10, 20, 30]


class TestHsv:
    def test_pure_red(self):
        hsv = rgb_to_hsv(np.array([[[255, 0, 0]]], dtype=np.uint8))
        assert hsv[0, 0].tolist() == [0.0, 1.0, 1.0]

    def test_gray_has_zero_saturation(self):
        hsv = rgb_to_hsv(np.array([[[128, 128, 128]]], dtype=np.uint8))
        h, s, v = hsv[0, 0]
        assert h == 0.0
        assert s == 0.0
        assert v == pytest.approx(128 / 255)

    def test_back_to_red(self):
        rgb = hsv_to_rgb(np.array([[[0.0, 1.0, 1.0]]]))
        assert rgb[0, 0].tolist() == [255, 0, 0]

    def test_achromatic(self):
        rgb = hsv_to_rgb(np.array([[[0.0, 0.0, 0.5]]]))
        assert rgb[0, 0].tolist() == [128, 128, 128]

    def test_round_trip_within_one(self):
        rng = np.random.default_rng(5)
        rgb = rng.integers(0, 256, (320, 320, 3), dtype=np.uint8)  # >= 1e5 samples
        back = hsv_to_rgb(rgb_to_hsv(rgb))
        assert np.abs(back.astype(int) - rgb.astype(int)).max() <= 1

    def test_range_validation(self):
        with pytest.raises(InvalidParameterError):
            hsv_to_rgb(np.array([[[360.0, 0.5, 0.5]]]))
        with pytest.raises(InvalidParameterError):
            hsv_to_rgb(np.array([[[10.0, 1.5, 0.5]]]))

    def test_needs_three_channels(self):
        with pytest.raises(ChannelMismatchError):
            rgb_to_hsv(np.zeros((4, 4), dtype=np.uint8))


class TestCropAndMask:
    def test_identity_crop(self):
        img = np.arange(27, dtype=np.uint8).reshape(3, 3, 3)
        assert np.array_equal(crop(img, Rect(0, 0, 3, 3)), img)

    def test_center_pixel(self):
        img = np.arange(9, dtype=np.uint8).reshape(3, 3)
        assert crop(img, Rect(1, 1, 1, 1)).tolist() == [[4]]

    def test_crop_composition(self):
        rng = np.random.default_rng(6)
        img = rng.integers(0, 256, (12, 10, 3), dtype=np.uint8)
        once = crop(crop(img, Rect(2, 3, 6, 7)), Rect(1, 2, 4, 3))
        composed = crop(img, Rect(3, 5, 4, 3))
        assert np.array_equal(once, composed)

    def test_out_of_bounds(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(OutOfBoundsError):
            crop(img, Rect(2, 2, 3, 3))
        with pytest.raises(OutOfBoundsError):
            crop(img, Rect(-1, 0, 2, 2))

    def test_crop_sentinel_isolation(self):
        # Sentinel border must never leak into the window, and the source
        # must stay untouched.
        img = np.full((6, 6), 77, dtype=np.uint8)
        img[0, :] = img[-1, :] = img[:, 0] = img[:, -1] = 255
        before = img.copy()
        window = crop(img, Rect(1, 1, 4, 4))
        assert (window == 77).all()
        window[:] = 0
        assert np.array_equal(img, before)

    def test_mask_identity(self):
        rng = np.random.default_rng(7)
        img = rng.integers(0, 256, (5, 5, 3), dtype=np.uint8)
        assert np.array_equal(apply_mask(img, np.ones((5, 5), dtype=bool)), img)

    def test_mask_single_pixel(self):
        img = np.full((4, 4), 255, dtype=np.uint8)
        mask = np.zeros((4, 4), dtype=bool)
        mask[2, 1] = True
        out = apply_mask(img, mask)
        assert out.sum() == 255
        assert out[2, 1] == 255

    def test_mask_idempotent_and_pure(self):
        rng = np.random.default_rng(8)
        img = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
        mask = rng.random((6, 6)) > 0.5
        before = img.copy()
        once = apply_mask(img, mask)
        twice = apply_mask(once, mask)
        assert np.array_equal(once, twice)
        assert np.array_equal(img, before)

    def test_mask_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            apply_mask(np.zeros((4, 4), dtype=np.uint8), np.ones((3, 4), dtype=bool))

    def test_mask_threshold_semantics(self):
        raster = np.array([[0, 127, 128, 255]], dtype=np.uint8)
        assert mask_from_image(raster).tolist() == [[False, False, True, True]]

    def test_mask_round_trip(self):
        mask = np.array([[True, False], [False, True]])
        assert np.array_equal(mask_from_image(mask_to_image(mask)), mask)

    def test_empty_mask_file_rejected(self, tmp_path):
        path = tmp_path / "empty.png"
        save_image(np.zeros((4, 4), dtype=np.uint8), path)
        with pytest.raises(InvalidParameterError):
            load_mask(path)
