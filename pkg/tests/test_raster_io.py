import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from stereoproxy import (
    Calibration,
    DisparityMap,
    FormatError,
    colorize,
    load_disparity_png,
    load_image,
    load_pfm,
    save_disparity_png,
    save_image,
    save_pfm,
    to_grayscale,
)


def test_load_image_all_black(tmp_path):
    path = tmp_path / "black.png"
    save_image(np.zeros((2, 4), dtype=np.uint8), path)
    img = load_image(path)
    assert img.shape == (2, 4)
    assert img.dtype == np.uint8
    assert not img.any()


def test_load_image_rgb_channel_order(tmp_path):
    rgb = np.zeros((1, 3, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[0, 1] = (0, 255, 0)
    rgb[0, 2] = (0, 0, 255)
    path = tmp_path / "rgb.png"
    save_image(rgb, path)
    loaded = load_image(path)
    assert loaded.shape == (1, 3, 3)
    np.testing.assert_array_equal(loaded, rgb)


def test_load_image_truncated_file(tmp_path):
    path = tmp_path / "broken.png"
    save_image(np.zeros((8, 8), dtype=np.uint8), path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(FormatError):
        load_image(path)


def test_load_image_rejects_16bit(tmp_path):
    path = tmp_path / "disp.png"
    Image.fromarray(np.full((2, 2), 300, dtype=np.uint16)).save(path)
    with pytest.raises(FormatError, match="16-bit"):
        load_image(path)


def test_load_image_round_trip_identity(tmp_path, rng):
    img = rng.integers(0, 256, (7, 9, 3)).astype(np.uint8)
    path = tmp_path / "rt.png"
    save_image(img, path)
    np.testing.assert_array_equal(load_image(path), img)


def test_to_grayscale_weights():
    rgb = np.array([[[100, 50, 200]]], dtype=np.uint8)
    expected = round(0.299 * 100 + 0.587 * 50 + 0.114 * 200)
    assert to_grayscale(rgb)[0, 0] == expected


def _write_stored(stored, path):
    Image.fromarray(np.asarray(stored, dtype=np.uint16)).save(path)


def test_disparity_png_fixed_point_scale(tmp_path):
    path = tmp_path / "d.png"
    _write_stored([[256, 0, 25600]], path)
    d = load_disparity_png(path)
    assert d.values[0, 0] == 1.0 and d.valid[0, 0]
    assert not d.valid[0, 1]
    assert d.values[0, 2] == 100.0   # 25600 / 256


def test_disparity_png_rejects_8bit(tmp_path):
    path = tmp_path / "img.png"
    save_image(np.zeros((2, 2), dtype=np.uint8), path)
    with pytest.raises(FormatError, match="8-bit"):
        load_disparity_png(path)


def test_disparity_png_exact_at_scale_multiples(tmp_path):
    d = DisparityMap.full(np.full((3, 3), 37.25, dtype=np.float32))
    path = tmp_path / "d.png"
    save_disparity_png(d, path)
    back = load_disparity_png(path)
    np.testing.assert_array_equal(back.values, d.values)   # multiple of 1/256
    assert back.valid.all()


def test_disparity_png_tiny_value_becomes_invalid(tmp_path):
    d = DisparityMap.full(np.full((1, 2), 0.001, dtype=np.float32))
    path = tmp_path / "d.png"
    save_disparity_png(d, path)   # round(0.256) = 0 collides with the sentinel
    assert not load_disparity_png(path).valid.any()


def test_disparity_png_round_trip_half_quantum(tmp_path, rng):
    for _ in range(20):
        values = rng.uniform(0, 192, (9, 13)).astype(np.float32)
        valid = rng.random((9, 13)) < 0.8
        d = DisparityMap(np.where(valid, values, 0), valid)
        path = tmp_path / "d.png"
        save_disparity_png(d, path)
        back = load_disparity_png(path)
        rounds_to_zero = np.rint(d.values * 256) < 1
        np.testing.assert_array_equal(back.valid, d.valid & ~rounds_to_zero)
        check = back.valid
        assert np.all(np.abs(back.values[check] - d.values[check]) <= 1 / 512 + 1e-7)


def test_pfm_round_trip_bit_exact(tmp_path, rng):
    values = rng.uniform(0, 192, (6, 7)).astype(np.float32)
    valid = rng.random((6, 7)) < 0.7
    d = DisparityMap(np.where(valid, values, 0), valid)
    path = tmp_path / "d.pfm"
    save_pfm(d, path)
    back = load_pfm(path)
    np.testing.assert_array_equal(back.valid, d.valid)
    np.testing.assert_array_equal(back.values[back.valid], d.values[d.valid])


def test_pfm_infinity_is_invalid(tmp_path):
    d = DisparityMap(np.array([[1.0, 2.0]], dtype=np.float32), np.array([[True, False]]))
    path = tmp_path / "d.pfm"
    save_pfm(d, path)
    back = load_pfm(path)
    assert back.valid[0, 0] and not back.valid[0, 1]


def test_pfm_known_bytes_little_endian(tmp_path):
    # 2x2, negative scale = little-endian, bottom row stored first
    payload = np.array([3.0, 4.0, 1.0, 2.0], dtype="<f4").tobytes()
    path = tmp_path / "fixture.pfm"
    path.write_bytes(b"Pf\n2 2\n-1.0\n" + payload)
    d = load_pfm(path)
    np.testing.assert_array_equal(d.values, [[1.0, 2.0], [3.0, 4.0]])


def test_pfm_known_bytes_big_endian(tmp_path):
    payload = np.array([3.0, 4.0, 1.0, 2.0], dtype=">f4").tobytes()
    path = tmp_path / "fixture.pfm"
    path.write_bytes(b"Pf\n2 2\n1.0\n" + payload)
    d = load_pfm(path)
    np.testing.assert_array_equal(d.values, [[1.0, 2.0], [3.0, 4.0]])


def test_pfm_rejects_color_and_garbage(tmp_path):
    color = tmp_path / "c.pfm"
    color.write_bytes(b"PF\n1 1\n-1.0\n" + b"\0" * 12)
    with pytest.raises(FormatError, match="color"):
        load_pfm(color)
    bad = tmp_path / "b.pfm"
    bad.write_bytes(b"P5\n1 1\n-1.0\n" + b"\0" * 4)
    with pytest.raises(FormatError, match="header"):
        load_pfm(bad)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pfm_round_trip_property(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    h, w = int(rng.integers(1, 8)), int(rng.integers(1, 8))
    values = (rng.standard_normal((h, w)) * 50).astype(np.float32)
    d = DisparityMap.full(values)
    path = tmp_path_factory.mktemp("pfm") / "r.pfm"
    save_pfm(d, path)
    back = load_pfm(path)
    np.testing.assert_array_equal(back.values, values)


def test_colorize_invalid_black_and_clamp():
    none_valid = DisparityMap(np.zeros((3, 3), np.float32), np.zeros((3, 3), bool))
    assert not colorize(none_valid, 64.0).any()

    d = DisparityMap.full(np.array([[64.0, 128.0]], dtype=np.float32))
    out = colorize(d, 64.0)
    np.testing.assert_array_equal(out[0, 0], out[0, 1])   # both clamp to 1.0
    assert out.shape == (1, 2, 3)


def test_colorize_deterministic():
    d = DisparityMap.full(np.linspace(0, 192, 64, dtype=np.float32).reshape(8, 8))
    np.testing.assert_array_equal(colorize(d, 192.0), colorize(d, 192.0))


def test_calibration_validation():
    Calibration(721.0, 0.54)
    with pytest.raises(ValueError):
        Calibration(0.0, 0.54)
    with pytest.raises(ValueError):
        Calibration(721.0, -1.0)
