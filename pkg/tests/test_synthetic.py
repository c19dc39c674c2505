import numpy as np
import pytest

from aerostereo.synthetic import generate_synthetic


class TestGroundTruthConstruction:
    def test_random_dot_uniform_disparity(self):
        _, _, gt = generate_synthetic("random-dot", 20, 10, {"disparity": 7}, seed=0)
        assert np.all(gt == 7.0)

    def test_two_level_halves(self):
        _, _, gt = generate_synthetic("two-level", 20, 10, {"d_left": 5, "d_right": 12}, seed=0)
        assert np.all(gt[:, :10] == 5.0)
        assert np.all(gt[:, 10:] == 12.0)

    def test_slanted_ramp_plane_equation(self):
        _, _, gt = generate_synthetic("slanted-ramp", 30, 6, {"offset": 2.0, "slope": 0.1}, seed=0)
        xs = np.arange(30, dtype=np.float64)
        expected = (2.0 + 0.1 * xs).astype(np.float32)
        assert np.array_equal(gt[3], expected)


class TestRightImageConstruction:
    def test_right_is_shifted_left(self):
        shift = 6
        left, right, _ = generate_synthetic("random-dot", 32, 8, {"disparity": shift}, seed=1)
        assert np.array_equal(right[:, : 32 - shift], left[:, shift:])

    def test_intensities_in_range(self):
        left, right, _ = generate_synthetic("two-level", 24, 24, None, seed=2)
        for img in (left, right):
            assert img.min() >= 0 and img.max() <= 255


class TestDeterminism:
    def test_same_seed_identical(self):
        a = generate_synthetic("two-level", 16, 16, None, seed=9)
        b = generate_synthetic("two-level", 16, 16, None, seed=9)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_different_seed_differs(self):
        a, _, _ = generate_synthetic("random-dot", 16, 16, None, seed=1)
        b, _, _ = generate_synthetic("random-dot", 16, 16, None, seed=2)
        assert not np.array_equal(a, b)


class TestValidation:
    def test_disparity_must_fit_in_width(self):
        with pytest.raises(ValueError):
            generate_synthetic("random-dot", 8, 8, {"disparity": 8}, seed=0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            generate_synthetic("checkerboard", 8, 8, None, seed=0)

    def test_negative_disparity_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic("slanted-ramp", 8, 8, {"offset": -3.0, "slope": 0.0}, seed=0)
