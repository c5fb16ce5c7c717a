import warnings

import numpy as np
import pytest
from scipy.stats import qmc

from mmppi.params import ConfigurationError, PerturbationScale
from mmppi.sampling import SobolStream, gaussian_perturbations, sobol_points


def scipy_sobol(dim, n, skip=0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gen = qmc.Sobol(dim, scramble=False, bits=32)
        pts = gen.random(n + skip)
    return pts[skip:]


def box_count_discrepancy(points, grid=16):
    """Max deviation of anchored-box counts from their expected measure."""
    n = points.shape[0]
    worst = 0.0
    for i in range(1, grid + 1):
        for j in range(1, grid + 1):
            a, b = i / grid, j / grid
            count = np.sum((points[:, 0] < a) & (points[:, 1] < b))
            worst = max(worst, abs(count / n - a * b))
    return worst


class TestSobolStream:
    def test_first_two_points(self):
        pts = SobolStream(8).next_points(2)
        np.testing.assert_array_equal(pts[0], np.zeros(8))
        np.testing.assert_array_equal(pts[1], np.full(8, 0.5))

    def test_matches_scipy_reference(self):
        for dim in (1, 2, 5, 21, 100, 160):
            mine = SobolStream(dim).next_points(512)
            ref = scipy_sobol(dim, 512)
            np.testing.assert_array_equal(mine, ref)

    def test_batch_split_consistency(self):
        a = SobolStream(6)
        whole = a.next_points(100)
        b = SobolStream(6)
        parts = np.concatenate([b.next_points(30), b.next_points(70)])
        np.testing.assert_array_equal(whole, parts)

    def test_start_index(self):
        shifted = SobolStream(4, start_index=17).next_points(10)
        ref = SobolStream(4)
        ref.next_points(17)
        np.testing.assert_array_equal(shifted, ref.next_points(10))

    def test_determinism(self):
        a = SobolStream(12, shift_seed=5).next_points(64)
        b = SobolStream(12, shift_seed=5).next_points(64)
        np.testing.assert_array_equal(a, b)
        c = SobolStream(12, shift_seed=6).next_points(64)
        assert not np.array_equal(a, c)

    def test_dimension_limit(self):
        with pytest.raises(ConfigurationError):
            SobolStream(161)
        with pytest.raises(ConfigurationError):
            SobolStream(0)

    def test_values_in_unit_interval(self):
        pts = SobolStream(16, shift_seed=1).next_points(1000)
        assert np.all(pts >= 0.0) and np.all(pts < 1.0)

    def test_discrepancy_beats_pseudorandom(self):
        sobol = SobolStream(2).next_points(256)
        d_sobol = box_count_discrepancy(sobol)
        rng = np.random.default_rng(123)
        d_uniform = [box_count_discrepancy(rng.random((256, 2)))
                     for _ in range(100)]
        assert d_sobol < np.mean(d_uniform)

    def test_sobol_points_function(self):
        stream = SobolStream(4)
        np.testing.assert_array_equal(sobol_points(stream, 8),
                                      scipy_sobol(4, 8))


class TestGaussianPerturbations:
    SCALE = PerturbationScale(sigma_ddelta=0.25, sigma_jx=4.0)

    def test_median_maps_to_zero(self):
        pts = np.full((1, 4), 0.5)
        z = gaussian_perturbations(pts, self.SCALE)
        np.testing.assert_array_equal(z, np.zeros((1, 2, 2)))

    def test_symmetry(self):
        pts = np.array([[0.3, 0.3, 0.3, 0.3]])
        mirrored = gaussian_perturbations(1.0 - pts, self.SCALE)
        z = gaussian_perturbations(pts, self.SCALE)
        np.testing.assert_allclose(mirrored, -z, atol=1e-14)

    def test_symmetry_property_many(self):
        rng = np.random.default_rng(0)
        u = rng.uniform(0.001, 0.999, size=(200, 10))
        a = gaussian_perturbations(u, self.SCALE)
        b = gaussian_perturbations(1.0 - u, self.SCALE)
        np.testing.assert_allclose(b, -a, atol=1e-10)

    def test_moments(self):
        n, horizon = 2000, 25  # 10^5 coordinates
        pts = SobolStream(2 * horizon, start_index=1).next_points(n)
        z = gaussian_perturbations(pts, self.SCALE)
        steer = z[:, :, 0].ravel()
        jerk = z[:, :, 1].ravel()
        assert abs(np.mean(steer)) < 0.02 * self.SCALE.sigma_ddelta
        assert abs(np.std(steer) / self.SCALE.sigma_ddelta - 1.0) < 0.02
        assert abs(np.mean(jerk)) < 0.02 * self.SCALE.sigma_jx
        assert abs(np.std(jerk) / self.SCALE.sigma_jx - 1.0) < 0.02

    def test_channel_layout(self):
        """Column t drives the steering channel at step t; column T+t the jerk
        channel. A layout change must break this test."""
        horizon = 5
        for col in range(2 * horizon):
            pts = np.full((1, 2 * horizon), 0.5)
            pts[0, col] = 0.9
            z = gaussian_perturbations(pts, self.SCALE)
            nonzero = np.argwhere(z[0] != 0.0)
            assert nonzero.shape[0] == 1
            t, channel = nonzero[0]
            assert channel == (0 if col < horizon else 1)
            assert t == (col if col < horizon else col - horizon)

    def test_odd_column_count_rejected(self):
        with pytest.raises(ConfigurationError):
            gaussian_perturbations(np.zeros((2, 5)), self.SCALE)

    def test_extreme_u_is_finite(self):
        z = gaussian_perturbations(np.array([[0.0, 1.0]]), self.SCALE)
        assert np.all(np.isfinite(z))
