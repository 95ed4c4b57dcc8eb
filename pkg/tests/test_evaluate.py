"""Metrics: PSNR and BT.709 fixed points, BD-rate vs a fine-grid oracle."""

import csv
import math

import numpy as np
import pytest

from stereocodec.evaluate import (
    DATASET_PRESETS,
    bd_rate,
    bits_per_pixel,
    crop_dataset,
    emit_report,
    psnr_from_mse,
    psnr_rgb,
    read_yuv420,
    yuv420_to_rgb_bt709,
    _upsample_chroma,
)


# -- PSNR ----------------------------------------------------------------------

def test_psnr_floor_at_full_scale_error():
    ref = np.zeros((4, 4, 3))
    tst = np.full((4, 4, 3), 255.0)
    assert psnr_rgb(ref, tst) == 0.0


def test_psnr_30db_fixed_point():
    # One squared error of 51^2 over 40 samples: MSE exactly 65.025,
    # 255^2 / 65.025 = 1000, so exactly 30 dB.
    ref = np.zeros(40)
    tst = np.zeros(40)
    tst[0] = 51.0
    assert abs(psnr_rgb(ref, tst) - 30.0) < 1e-12
    assert abs(psnr_from_mse(65.025) - 30.0) < 1e-12


def test_psnr_identical_is_infinite():
    x = np.random.default_rng(0).uniform(0, 255, (8, 8, 3))
    assert psnr_rgb(x, x) == math.inf
    assert psnr_from_mse(0.0) == math.inf


def test_psnr_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        psnr_rgb(np.zeros((4, 4)), np.zeros((4, 5)))


def test_bits_per_pixel():
    # 1000 bits over 2 views x 10x5 x 2 frame pairs.
    assert bits_per_pixel(1000.0, 10, 5, 2) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        bits_per_pixel(1.0, 0, 5, 2)


# -- BD-rate --------------------------------------------------------------------

def analytic_pair():
    """Two smooth synthetic rate-quality curves with known log rates.

    Cubic log10(rate) in quality, so the poly mode is exact and pchip is
    close; the oracle integrates the true functions on a fine grid.
    """
    def log_rate_anchor(q):
        return -2.0 + 0.09 * q - 1.2e-4 * q ** 2 + 2.0e-6 * q ** 3

    def log_rate_test(q):
        return -2.12 + 0.091 * q - 1.0e-4 * q ** 2 + 1.5e-6 * q ** 3

    q = np.linspace(30.0, 42.0, 8)
    anchor = [(10.0 ** log_rate_anchor(qi), qi) for qi in q]
    test = [(10.0 ** log_rate_test(qi), qi) for qi in q]
    return anchor, test, log_rate_anchor, log_rate_test


def oracle_bd_rate(f_anchor, f_test, lo, hi, n=200001):
    """Fine-grid trapezoid over the true log-rate difference."""
    q = np.linspace(lo, hi, n)
    avg = np.trapezoid(f_test(q) - f_anchor(q), q) / (hi - lo)
    return (10.0 ** avg - 1.0) * 100.0


@pytest.mark.parametrize("mode", ["pchip", "poly"])
def test_bd_rate_matches_fine_grid_oracle(mode):
    anchor, test, f_a, f_t = analytic_pair()
    expected = oracle_bd_rate(f_a, f_t, 30.0, 42.0)
    got = bd_rate(anchor, test, mode=mode)
    assert abs(got - expected) < 0.1


def test_bd_rate_identical_curves_is_exactly_zero():
    anchor, _, _, _ = analytic_pair()
    assert bd_rate(anchor, list(anchor)) == 0.0
    assert bd_rate(anchor, list(anchor), mode="poly") == 0.0


def test_bd_rate_constant_ratio_is_exact():
    # Scaling every test rate by 0.9 shifts log rate by a constant, which
    # pchip reproduces exactly: BD-rate is -10% to float precision.
    anchor, _, _, _ = analytic_pair()
    test = [(0.9 * r, q) for r, q in anchor]
    assert bd_rate(anchor, test) == pytest.approx(-10.0, abs=1e-9)
    assert bd_rate(anchor, test, mode="poly") == pytest.approx(-10.0, abs=1e-9)


def test_bd_rate_antisymmetry():
    anchor, test, _, _ = analytic_pair()
    fwd = bd_rate(anchor, test, mode="poly")
    rev = bd_rate(test, anchor, mode="poly")
    assert abs((1.0 + fwd / 100.0) * (1.0 + rev / 100.0) - 1.0) < 1e-9


def test_bd_rate_input_validation():
    anchor, test, _, _ = analytic_pair()
    with pytest.raises(ValueError, match="at least two"):
        bd_rate(anchor[:1], test)
    with pytest.raises(ValueError, match="strictly increasing"):
        bd_rate([(1.0, 30.0), (2.0, 30.0)], test)
    with pytest.raises(ValueError, match="positive"):
        bd_rate([(0.0, 30.0), (2.0, 35.0)], test)
    with pytest.raises(ValueError, match="interval"):
        low = [(r, q - 100.0) for r, q in anchor]
        bd_rate(low, test)
    with pytest.raises(ValueError, match="mode"):
        bd_rate(anchor, test, mode="spline")


# -- BT.709 --------------------------------------------------------------------

def test_bt709_white_and_black_fixed_points():
    white = yuv420_to_rgb_bt709(np.full((2, 2), 235, np.uint8),
                                np.full((1, 1), 128, np.uint8),
                                np.full((1, 1), 128, np.uint8))
    black = yuv420_to_rgb_bt709(np.full((2, 2), 16, np.uint8),
                                np.full((1, 1), 128, np.uint8),
                                np.full((1, 1), 128, np.uint8))
    assert white.dtype == np.uint8 and white.shape == (2, 2, 3)
    assert np.all(white == 255)
    assert np.all(black == 0)


def test_bt709_neutral_gray_stays_neutral():
    gray = yuv420_to_rgb_bt709(np.full((4, 4), 126, np.uint8),
                               np.full((2, 2), 128, np.uint8),
                               np.full((2, 2), 128, np.uint8))
    # (126 - 16) / 219 * 255 = 128.08 -> 128 on all three channels.
    assert np.all(gray == 128)


def test_bt709_rejects_bad_chroma_shapes():
    y = np.zeros((4, 4), np.uint8)
    with pytest.raises(ValueError):
        yuv420_to_rgb_bt709(y, np.zeros((1, 1), np.uint8), np.zeros((1, 1), np.uint8))
    with pytest.raises(ValueError):
        yuv420_to_rgb_bt709(y, np.zeros((2, 2), np.uint8), np.zeros((2, 1), np.uint8))


def test_chroma_upsampling_is_cosited_bilinear():
    plane = np.array([[0.0, 2.0]])
    up = _upsample_chroma(plane)
    # Samples sit on even output columns; odd columns interpolate, the last
    # column replicates.
    assert np.allclose(up, [[0.0, 1.0, 2.0, 2.0], [0.0, 1.0, 2.0, 2.0]])
    const = _upsample_chroma(np.full((3, 5), 7.0))
    assert np.allclose(const, 7.0)


def test_read_yuv420_iterates_frames(tmp_path):
    rng = np.random.default_rng(1)
    frames = []
    blob = b""
    for _ in range(2):
        y = rng.integers(16, 236, (4, 4), dtype=np.uint8)
        u = rng.integers(16, 241, (2, 2), dtype=np.uint8)
        v = rng.integers(16, 241, (2, 2), dtype=np.uint8)
        frames.append(yuv420_to_rgb_bt709(y, u, v))
        blob += y.tobytes() + u.tobytes() + v.tobytes()
    path = tmp_path / "clip.yuv"
    path.write_bytes(blob + b"\x00" * 5)  # trailing partial frame is ignored
    got = list(read_yuv420(path, 4, 4))
    assert len(got) == 2
    for a, b in zip(got, frames):
        assert np.array_equal(a, b)
    assert len(list(read_yuv420(path, 4, 4, count=1))) == 1


# -- dataset presets --------------------------------------------------------------

def test_preset_crops():
    img = np.zeros((1024, 2048, 3), np.uint8)
    out = DATASET_PRESETS["cityscapes"].crop(img)
    assert out.shape == (1024 - 64 - 256, 2048 - 128, 3)
    kitti = DATASET_PRESETS["kitti"].crop(np.zeros((375, 1242, 3), np.uint8))
    assert kitti.shape == (320, 1216, 3)


def test_preset_crop_rejects_small_images():
    with pytest.raises(ValueError):
        DATASET_PRESETS["kitti"].crop(np.zeros((100, 100, 3), np.uint8))


def test_crop_dataset_stacks_and_validates():
    clip = np.zeros((2, 400, 1300, 3), np.uint8)
    out = crop_dataset(clip, "kitti")
    assert out.shape == (2, 320, 1216, 3)
    with pytest.raises(ValueError, match="unknown dataset"):
        crop_dataset(clip, "middlebury")


# -- reporting ---------------------------------------------------------------------

def test_emit_report_rejects_missing_anchor(tmp_path):
    rows = [{"label": "ablated", "sequence": "synthetic",
             "lambda": 256, "bpp": 0.1, "psnr": 34.0}]
    with pytest.raises(ValueError, match="anchor label"):
        emit_report(tmp_path, rows, anchor_label="full")


def test_emit_report_writes_tables_and_plot(tmp_path):
    rows = []
    for label, scale in (("full", 1.0), ("ablated", 1.25)):
        for lam, bpp, q in ((64, 0.05, 32.0), (256, 0.12, 35.0), (1024, 0.3, 38.0)):
            rows.append({"label": label, "sequence": "synthetic",
                         "lambda": lam, "bpp": bpp * scale, "psnr": q})
    table = emit_report(tmp_path, rows)
    assert set(table) == {"ablated"}
    assert table["ablated"]["synthetic"] == pytest.approx(25.0, abs=1e-6)
    assert (tmp_path / "rd_full.csv").exists()
    assert (tmp_path / "rd_ablated.csv").exists()
    assert (tmp_path / "rd_curves.png").stat().st_size > 0
    with open(tmp_path / "bd_rate.csv", newline="", encoding="utf-8") as fh:
        rows_read = list(csv.reader(fh))
    assert rows_read[0] == ["label", "sequence", "bd_rate_vs_full_percent"]
    assert rows_read[1][0] == "ablated"
