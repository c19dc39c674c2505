import time

import numpy as np
import pytest

from aerostereo.image import INVALID_DISPARITY
from aerostereo.metrics import (
    MetricReport,
    SsimParams,
    bmp,
    bmp_curve,
    compute_report,
    mse,
    ssim,
    time_method,
)
from oracles import bmp_reference, mse_reference, ssim_reference

INV = INVALID_DISPARITY


def random_map_pair(rng, shape=(16, 16), invalid_frac=0.0):
    a = (rng.random(shape) * 70.0 + 1.0).astype(np.float32)
    b = (rng.random(shape) * 70.0 + 1.0).astype(np.float32)
    if invalid_frac:
        a[rng.random(shape) < invalid_frac] = INV
        b[rng.random(shape) < invalid_frac] = INV
    return a, b


class TestMse:
    def test_identical_maps(self):
        m = np.arange(9, dtype=np.float32).reshape(3, 3)
        assert mse(m, m) == 0.0

    def test_unit_offset(self):
        m = np.arange(9, dtype=np.float32).reshape(3, 3)
        assert mse(m + 1.0, m) == 1.0

    def test_direct_arithmetic_example(self):
        est = np.array([[0.0, 1.0], [2.0, 3.0]], dtype=np.float32)
        gt = np.ones((2, 2), dtype=np.float32)
        assert mse(est, gt) == pytest.approx(1.5)

    def test_matches_reference_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            a, b = random_map_pair(rng, invalid_frac=0.2)
            assert mse(a, b) == pytest.approx(mse_reference(a, b), rel=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            mse(np.zeros((2, 2)), np.zeros((2, 3)))
        all_invalid = np.full((2, 2), INV, dtype=np.float32)
        with pytest.raises(ValueError):
            mse(all_invalid, all_invalid)


class TestBmp:
    def test_strict_inequality_at_threshold(self):
        gt = np.full((5, 5), 10.0, dtype=np.float32)
        est = gt + 2.0
        assert bmp(est, gt, 2.0) == 0.0

    def test_single_bad_pixel_of_hundred(self):
        gt = np.full((10, 10), 10.0, dtype=np.float32)
        est = gt.copy()
        est[0, 0] = 10.0 + 3.0 + 1.0
        assert bmp(est, gt, 3.0) == pytest.approx(1.0)

    def test_curve_monotone_non_increasing(self):
        rng = np.random.default_rng(1)
        a, b = random_map_pair(rng, invalid_frac=0.1)
        curve = bmp_curve(a, b, (4.0, 6.0, 8.0, 10.0, 12.0))
        percentages = [p for _, p in curve]
        assert all(p1 >= p2 for p1, p2 in zip(percentages, percentages[1:]))
        assert all(0.0 <= p <= 100.0 for p in percentages)

    def test_matches_reference(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            a, b = random_map_pair(rng, invalid_frac=0.2)
            assert bmp(a, b, 6.0) == pytest.approx(bmp_reference(a, b, 6.0), rel=1e-12)

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            bmp(np.ones((2, 2)), np.ones((2, 2)), 0.0)


class TestSsim:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(3)
        m = (rng.random((16, 16)) * 70).astype(np.float32)
        assert ssim(m, m) == pytest.approx(1.0, abs=1e-9)

    def test_symmetric(self):
        rng = np.random.default_rng(4)
        a, b = random_map_pair(rng)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            a, b = random_map_pair(rng)
            got = ssim(a, b, SsimParams(window=8, dynamic_range=75.0))
            want = ssim_reference(a, b, window=8, dynamic_range=75.0)
            assert got == pytest.approx(want, rel=1e-6)

    def test_skips_sentinel_windows(self):
        rng = np.random.default_rng(6)
        a, b = random_map_pair(rng)
        a2 = a.copy()
        a2[3, 3] = INV  # drops every window containing (3, 3)
        got = ssim(a2, b)
        want = ssim_reference(a2, b, window=8, dynamic_range=75.0)
        assert got == pytest.approx(want, rel=1e-6)
        # invalidating everything leaves no complete window
        a3 = np.full_like(a, INV)
        a3[0, 0] = 1.0
        with pytest.raises(ValueError):
            ssim(a3, b)

    def test_bounded_magnitude(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a, b = random_map_pair(rng)
            assert abs(ssim(a, b)) <= 1.0 + 1e-12

    def test_window_validation(self):
        with pytest.raises(ValueError):
            SsimParams(window=1)
        with pytest.raises(ValueError):
            ssim(np.ones((4, 4)), np.ones((4, 4)), SsimParams(window=8))


class TestRoundTripMetrics:
    def test_mse_zero_after_pfm_round_trip(self, tmp_path):
        from aerostereo.image import load_disparity, write_disparity

        rng = np.random.default_rng(10)
        disp = (rng.random((12, 12)) * 40).astype(np.float32)
        disp[rng.random((12, 12)) < 0.15] = INV
        p = tmp_path / "m.pfm"
        write_disparity(disp, p)
        assert mse(load_disparity(p), disp) == 0.0


class TestMaskingInvariance:
    def test_padding_with_mutually_invalid_pixels_changes_nothing(self):
        rng = np.random.default_rng(8)
        a, b = random_map_pair(rng)
        pad_a = np.pad(a, 3, constant_values=INV)
        pad_b = np.pad(b, 3, constant_values=INV)
        assert mse(pad_a, pad_b) == mse(a, b)
        assert bmp(pad_a, pad_b, 6.0) == bmp(a, b, 6.0)
        assert ssim(pad_a, pad_b) == pytest.approx(ssim(a, b), abs=1e-12)


class TestTimeMethod:
    def test_nonnegative(self):
        _, ms = time_method(lambda: None)
        assert ms >= 0.0

    def test_sleep_duration(self):
        _, ms = time_method(lambda: time.sleep(0.05))
        assert ms == pytest.approx(50.0, abs=20.0)

    def test_returns_runner_result(self):
        value, _ = time_method(lambda: 42)
        assert value == 42


class TestComputeReport:
    def test_bundles_everything(self):
        rng = np.random.default_rng(9)
        a, _ = random_map_pair(rng)
        report = compute_report(a, a, runtime_ms=12.5)
        assert isinstance(report, MetricReport)
        assert report.mse == 0.0
        assert report.ssim == pytest.approx(1.0, abs=1e-9)
        assert all(p == 0.0 for _, p in report.bmp_curve)
        assert report.runtime_ms == 12.5
        assert report.valid_pixel_count == a.size
        d = report.to_dict()
        assert set(d) == {"mse", "bmp_curve", "ssim", "runtime_ms", "valid_pixel_count", "normalized"}
