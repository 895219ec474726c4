import numpy as np
import pytest

from videostory import clip_motion_feature, dynamics_score, hoof, spp_hoof_frame
from videostory.features import ClipFeatures

from helpers import uniform_flow


class TestHoof:
    def test_single_direction_single_bin(self):
        h = hoof(uniform_flow(2, 2, 1.0, 0.0), bins=4)
        np.testing.assert_array_equal(h, [1.0, 0.0, 0.0, 0.0])

    def test_zero_flow_stays_zero(self):
        h = hoof(np.zeros((2, 2, 2)), bins=4)
        np.testing.assert_array_equal(h, [0.0, 0.0, 0.0, 0.0])

    def test_magnitude_weighted_mixture(self):
        # two pixels (0,2): weight 2 each at angle pi/2; two pixels (1,0): weight 1 at angle 0
        flow = np.zeros((2, 2, 2))
        flow[0, :, 1] = 2.0
        flow[1, :, 0] = 1.0
        h = hoof(flow, bins=4)
        np.testing.assert_allclose(h, [1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0], atol=1e-12)

    def test_boundary_angle_goes_to_higher_bin(self):
        for u, v, expected in [(0.0, 1.0, 1), (-1.0, 0.0, 2), (0.0, -1.0, 3)]:
            h = hoof(uniform_flow(1, 1, u, v), bins=4)
            assert h[expected] == 1.0

    def test_angle_just_below_two_pi_stays_in_last_bin(self):
        h = hoof(uniform_flow(1, 1, 1.0, -1e-9), bins=4)
        assert h[3] == 1.0

    def test_tiny_negative_angle_wraps_to_bin_zero(self):
        h = hoof(uniform_flow(1, 1, 1.0, -1e-20), bins=4)
        assert h[0] == 1.0

    def test_normalized(self):
        rng = np.random.default_rng(1)
        h = hoof(rng.normal(size=(7, 5, 2)), bins=10)
        assert h.min() >= 0.0
        assert abs(h.sum() - 1.0) < 1e-12

    def test_pixel_permutation_invariance(self):
        rng = np.random.default_rng(2)
        flow = rng.normal(size=(6, 4, 2))
        flat = flow.reshape(-1, 2)
        shuffled = flat[rng.permutation(len(flat))].reshape(6, 4, 2)
        np.testing.assert_allclose(hoof(flow, 8), hoof(shuffled, 8), atol=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        flow = rng.normal(size=(5, 5, 2))
        base = hoof(flow, 10)
        for alpha in (0.5, 2.0, 10.0):
            np.testing.assert_allclose(hoof(alpha * flow, 10), base, atol=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            hoof(np.zeros((0, 3, 2)), 4)
        with pytest.raises(ValueError):
            hoof(np.zeros((2, 2, 2)), 0)
        with pytest.raises(ValueError):
            hoof(np.zeros((2, 2, 3)), 4)


class TestSppHoof:
    def test_single_cell_equals_global(self):
        v = spp_hoof_frame(uniform_flow(3, 3, 1.0, 0.0), bins=4, pyramid_m=1)
        np.testing.assert_array_equal(v, [1, 0, 0, 0, 1, 0, 0, 0])

    def test_default_dimension_is_100(self):
        rng = np.random.default_rng(4)
        v = spp_hoof_frame(rng.normal(size=(12, 20, 2)), bins=10, pyramid_m=3)
        assert v.shape == (100,)

    def test_center_pixel_localized(self):
        flow = np.zeros((3, 3, 2))
        flow[1, 1, 0] = 1.0
        v = spp_hoof_frame(flow, bins=4, pyramid_m=3).reshape(10, 4)
        np.testing.assert_array_equal(v[4], [1, 0, 0, 0])    # center cell, row-major index 4
        np.testing.assert_array_equal(v[9], [1, 0, 0, 0])    # global histogram
        for cell in (0, 1, 2, 3, 5, 6, 7, 8):
            np.testing.assert_array_equal(v[cell], [0, 0, 0, 0])

    def test_cells_partition_every_pixel(self):
        # uneven 5x7 field: cell HOOF totals must reassemble the global HOOF
        rng = np.random.default_rng(5)
        flow = np.abs(rng.normal(size=(5, 7, 2))) + 0.1
        bins, m = 6, 3
        v = spp_hoof_frame(flow, bins, m).reshape(m * m + 1, bins)
        # weight-reconstruct: each cell histogram sums to 1 over its own mass
        total_pixels = 0
        for j in range(m):
            rows = slice((j * 5) // m, ((j + 1) * 5) // m)
            for i in range(m):
                cols = slice((i * 7) // m, ((i + 1) * 7) // m)
                total_pixels += flow[rows, cols].shape[0] * flow[rows, cols].shape[1]
        assert total_pixels == 35

    def test_too_small_field_rejected(self):
        with pytest.raises(ValueError):
            spp_hoof_frame(np.zeros((2, 5, 2)), bins=4, pyramid_m=3)


class TestClipMotionFeature:
    def test_single_frame_identity(self):
        rng = np.random.default_rng(6)
        frame = rng.normal(size=(4, 4, 2))
        np.testing.assert_array_equal(
            clip_motion_feature([frame], 5, 2), spp_hoof_frame(frame, 5, 2))

    def test_identical_frames_average_to_same(self):
        rng = np.random.default_rng(7)
        frame = rng.normal(size=(4, 4, 2))
        np.testing.assert_allclose(
            clip_motion_feature([frame, frame], 5, 2), spp_hoof_frame(frame, 5, 2), atol=1e-12)

    def test_elementwise_mean(self):
        f1 = uniform_flow(2, 2, 1.0, 0.0)      # all mass in bin 0
        f2 = uniform_flow(2, 2, 0.0, 1.0)      # all mass in bin 1
        v = clip_motion_feature([f1, f2], bins=4, pyramid_m=1)
        np.testing.assert_allclose(v, [0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0], atol=1e-12)

    def test_frame_permutation_invariance(self):
        rng = np.random.default_rng(8)
        frames = [rng.normal(size=(4, 6, 2)) for _ in range(5)]
        a = clip_motion_feature(frames, 4, 2)
        b = clip_motion_feature(frames[::-1], 4, 2)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            clip_motion_feature([], 4, 1)
        with pytest.raises(ValueError):
            clip_motion_feature([np.zeros((2, 2, 2)), np.zeros((3, 2, 2))], 4, 1)


class TestDynamicsScore:
    def test_zero_flow(self):
        assert dynamics_score([np.zeros((3, 3, 2))]) == 0.0

    def test_constant_magnitude(self):
        frames = [uniform_flow(4, 5, 2.0, 0.0) for _ in range(3)]
        assert dynamics_score(frames) == pytest.approx(2.0, abs=1e-12)

    def test_hand_computed_mean(self):
        frame = np.array([[[3.0, 4.0], [0.0, 0.0]]])
        assert dynamics_score([frame]) == pytest.approx(2.5, abs=1e-12)

    def test_linear_scaling(self):
        rng = np.random.default_rng(9)
        frames = [rng.normal(size=(5, 5, 2)) for _ in range(3)]
        base = dynamics_score(frames)
        for alpha in (0.5, 2.0, 10.0):
            scaled = dynamics_score([alpha * f for f in frames])
            assert scaled == pytest.approx(alpha * base, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dynamics_score([])


class TestClipFeatures:
    def test_negative_dynamics_rejected(self):
        with pytest.raises(ValueError):
            ClipFeatures("c", np.ones(3), np.ones(4), -0.1)

    def test_non_vector_rejected(self):
        with pytest.raises(ValueError):
            ClipFeatures("c", np.ones((2, 2)), np.ones(4), 0.0)
