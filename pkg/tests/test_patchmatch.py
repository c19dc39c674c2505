import numpy as np
import pytest

from aerostereo.image import valid_mask
from aerostereo.patchmatch import (
    PatchMatchConfig,
    Plane,
    evaluate_costs,
    patchmatch_match,
    plane_cost,
    plane_disparity,
    plane_from_point_normal,
    plane_refinement,
    random_init,
    spatial_propagation,
)
from aerostereo.synthetic import generate_synthetic


def small_config(**kw):
    defaults = dict(d_max=8.0, window_radius=2, iterations=1, seed=3, census_radius=1)
    defaults.update(kw)
    return PatchMatchConfig(**defaults)


class TestPlane:
    def test_fronto_parallel(self):
        plane = Plane(0.0, 0.0, 12.0)
        assert plane_disparity(plane, 100, 7) == 12.0

    def test_slanted(self):
        assert plane_disparity(Plane(0.5, 0.0, 3.0), 4, 7) == 5.0

    def test_point_normal_round_trip(self):
        plane = plane_from_point_normal(9.0, 4.0, 6.5, (0.0, 0.0, 1.0))
        assert plane == Plane(0.0, 0.0, 6.5)
        assert plane_disparity(plane, 9, 4) == 6.5

    def test_point_normal_general(self):
        plane = plane_from_point_normal(3.0, 2.0, 5.0, (0.1, -0.2, 0.97))
        assert plane_disparity(plane, 3, 2) == pytest.approx(5.0, abs=1e-12)

    def test_rejects_nonpositive_z(self):
        with pytest.raises(ValueError):
            plane_from_point_normal(0, 0, 1.0, (0.0, 1.0, 0.0))


class TestRandomInit:
    def test_deterministic(self):
        cfg = small_config()
        a = random_init(12, 10, cfg)
        b = random_init(12, 10, cfg)
        assert np.array_equal(a.a, b.a)
        assert np.array_equal(a.b, b.b)
        assert np.array_equal(a.c, b.c)

    def test_different_seed_differs(self):
        a = random_init(12, 10, small_config(seed=1))
        b = random_init(12, 10, small_config(seed=2))
        assert not np.array_equal(a.c, b.c)

    def test_own_pixel_disparity_in_range(self):
        cfg = small_config(d_max=16.0)
        state = random_init(20, 15, cfg)
        disp = state.disparity()
        assert disp.min() >= 0.0
        assert disp.max() <= cfg.d_max

    def test_fronto_parallel_mode(self):
        state = random_init(8, 8, small_config(), fronto_parallel=True)
        assert np.all(state.a == 0.0)
        assert np.all(state.b == 0.0)

    def test_normal_slopes_bounded(self):
        state = random_init(30, 30, small_config())
        # z >= 0.2 caps |a|, |b| at sqrt(1 - z^2)/z <= sqrt(24)
        assert np.abs(state.a).max() <= np.sqrt(24.0) + 1e-9
        assert np.abs(state.b).max() <= np.sqrt(24.0) + 1e-9


class TestPlaneCost:
    def test_identical_images_zero_plane(self):
        img = np.random.default_rng(0).integers(0, 256, (16, 16)).astype(np.float32)
        cfg = small_config()
        assert plane_cost(img, img, (8, 8), Plane(0.0, 0.0, 0.0), cfg) == 0.0

    def test_single_pixel_window_collapses_to_hamming(self):
        from aerostereo.costs import census_transform, hamming

        rng = np.random.default_rng(1)
        left = rng.integers(0, 256, (9, 9)).astype(np.float32)
        right = rng.integers(0, 256, (9, 9)).astype(np.float32)
        cfg = small_config(window_radius=0, census_radius=2)
        got = plane_cost(left, right, (4, 4), Plane(0.0, 0.0, 0.0), cfg)
        cl = census_transform(left, 2)
        cr = census_transform(right, 2)
        assert got == float(hamming(int(cl.data[4, 4]), int(cr.data[4, 4])))

    def test_true_shift_beats_wrong_shift(self):
        left, right, _ = generate_synthetic("random-dot", 48, 48, {"disparity": 5}, seed=4)
        cfg = small_config(d_max=10.0, window_radius=3, census_radius=2)
        good = plane_cost(left, right, (24, 24), Plane(0.0, 0.0, 5.0), cfg)
        bad = plane_cost(left, right, (24, 24), Plane(0.0, 0.0, 8.0), cfg)
        assert good < bad


class TestSpatialPropagation:
    def test_fixed_point_when_all_planes_optimal(self):
        left, right, _ = generate_synthetic("random-dot", 24, 24, {"disparity": 3}, seed=5)
        cfg = small_config(d_max=6.0)
        state = random_init(24, 24, cfg, fronto_parallel=True)
        state.a[:] = 0.0
        state.b[:] = 0.0
        state.c[:] = 3.0
        state = evaluate_costs(state, left, right, cfg)
        after = spatial_propagation(state, left, right, cfg)
        assert np.array_equal(after.c, state.c)
        assert np.array_equal(after.costs, state.costs)

    def test_bad_pixel_adopts_neighbor_plane(self):
        left, right, _ = generate_synthetic("random-dot", 24, 24, {"disparity": 3}, seed=6)
        cfg = small_config(d_max=6.0)
        state = random_init(24, 24, cfg, fronto_parallel=True)
        state.a[:] = 0.0
        state.b[:] = 0.0
        state.c[:] = 3.0
        state.c[10, 10] = 0.0  # wrong plane at one pixel
        state = evaluate_costs(state, left, right, cfg)
        after = spatial_propagation(state, left, right, cfg)  # even pass
        assert after.c[10, 10] == 3.0
        assert after.costs[10, 10] < state.costs[10, 10]

    def test_costs_never_increase(self):
        left, right, _ = generate_synthetic("two-level", 24, 24, None, seed=7)
        cfg = small_config(d_max=16.0)
        state = evaluate_costs(random_init(24, 24, cfg), left, right, cfg)
        for odd in (False, True):
            after = spatial_propagation(state, left, right, cfg, odd_pass=odd)
            assert np.all(after.costs <= state.costs)
            state = after

    def test_cache_stays_consistent(self):
        left, right, _ = generate_synthetic("random-dot", 16, 16, {"disparity": 2}, seed=8)
        cfg = small_config(d_max=4.0)
        state = evaluate_costs(random_init(16, 16, cfg), left, right, cfg)
        state = spatial_propagation(state, left, right, cfg)
        recomputed = evaluate_costs(state, left, right, cfg)
        assert np.array_equal(state.costs, recomputed.costs)


class TestPlaneRefinement:
    def test_zero_radius_is_identity(self):
        left, right, _ = generate_synthetic("random-dot", 12, 12, {"disparity": 2}, seed=9)
        cfg = small_config(d_max=4.0)
        state = evaluate_costs(random_init(12, 12, cfg), left, right, cfg)
        after = plane_refinement(state, left, right, cfg, max_delta_d=0.0)
        assert np.array_equal(after.a, state.a)
        assert np.array_equal(after.c, state.c)
        assert np.array_equal(after.costs, state.costs)

    def test_costs_never_increase(self):
        left, right, _ = generate_synthetic("two-level", 20, 20, None, seed=10)
        cfg = small_config(d_max=16.0)
        state = evaluate_costs(random_init(20, 20, cfg), left, right, cfg)
        after = plane_refinement(state, left, right, cfg)
        assert np.all(after.costs <= state.costs)

    def test_refined_planes_stay_in_range(self):
        left, right, _ = generate_synthetic("random-dot", 16, 16, {"disparity": 3}, seed=11)
        cfg = small_config(d_max=6.0)
        state = evaluate_costs(random_init(16, 16, cfg), left, right, cfg)
        state = plane_refinement(state, left, right, cfg)
        disp = state.disparity()
        assert disp.min() >= 0.0
        assert disp.max() <= cfg.d_max

    def test_cache_stays_consistent(self):
        left, right, _ = generate_synthetic("random-dot", 14, 14, {"disparity": 2}, seed=12)
        cfg = small_config(d_max=4.0)
        state = evaluate_costs(random_init(14, 14, cfg), left, right, cfg)
        state = plane_refinement(state, left, right, cfg)
        recomputed = evaluate_costs(state, left, right, cfg)
        assert np.array_equal(state.costs, recomputed.costs)

    def test_one_round_improves_fronto_scene(self):
        left, right, gt = generate_synthetic("random-dot", 32, 32, {"disparity": 4}, seed=13)
        cfg = small_config(d_max=8.0, window_radius=3, census_radius=2)
        init = evaluate_costs(random_init(32, 32, cfg), left, right, cfg)
        err_init = np.median(np.abs(init.disparity() - gt))
        state = spatial_propagation(init, left, right, cfg)
        state = plane_refinement(state, left, right, cfg)
        err_after = np.median(np.abs(state.disparity() - gt))
        assert err_after < err_init


class TestPatchMatchMatch:
    def test_identical_images(self):
        # two iterations: the separated propagation/refinement passes leave a
        # few percent of pixels unconverged after a single sweep
        img = np.random.default_rng(14).integers(0, 256, (32, 32)).astype(np.float32)
        cfg = PatchMatchConfig(d_max=8.0, window_radius=5, seed=1, iterations=2)
        disp = patchmatch_match(img, img, cfg)
        mask = valid_mask(disp)
        assert mask.mean() > 0.9
        assert (np.abs(disp[mask]) <= 0.5).mean() >= 0.99

    def test_two_level_recovery(self):
        left, right, gt = generate_synthetic("two-level", 64, 64, None, seed=15)
        cfg = PatchMatchConfig(d_max=16.0, seed=2)
        disp = patchmatch_match(left, right, cfg)
        mask = valid_mask(disp)
        assert mask.any()
        assert (np.abs(disp[mask] - gt[mask]) <= 1.0).mean() >= 0.90

    def test_deterministic(self):
        left, right, _ = generate_synthetic("two-level", 32, 32, None, seed=16)
        cfg = PatchMatchConfig(d_max=16.0, window_radius=4, seed=5)
        a = patchmatch_match(left, right, cfg)
        b = patchmatch_match(left, right, cfg)
        assert np.array_equal(a, b)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            patchmatch_match(np.zeros((4, 4)), np.zeros((5, 4)), PatchMatchConfig(d_max=2.0))


class TestPatchMatchConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            PatchMatchConfig(d_max=0.0)
        with pytest.raises(ValueError):
            PatchMatchConfig(d_max=4.0, iterations=0)
