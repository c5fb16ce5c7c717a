import math

import numpy as np
import pytest

from mmppi.dynamics import VehicleState, propagate
from mmppi.geometry import EgoFootprint, Obstacle, RoadEdge, WorldSnapshot
from mmppi.modes import (
    EVASIVE,
    MAX_ACCEL,
    MAX_BRAKE,
    PRIOR,
    Mode,
    ModeConfig,
    allocate_samples,
    build_mode_means,
    shift_prior,
    tcpa,
    tcpa_report,
)
from mmppi.params import ConfigurationError, CostWeights, Limits
from mmppi.path import straight_path


def make_world(obstacles=()):
    path = straight_path((0.0, -1.75), (400.0, -1.75), 20.0)
    edges = [RoadEdge(np.array([[-20.0, 3.5], [400.0, 3.5]]), side=-1.0),
             RoadEdge(np.array([[-20.0, -3.5], [400.0, -3.5]]), side=1.0)]
    return WorldSnapshot(path=path, obstacles=list(obstacles), edges=edges,
                         footprint=EgoFootprint())


class TestTcpa:
    def test_head_on(self):
        ego = VehicleState(vx=10.0)
        t, d = tcpa(ego, Obstacle((20.0, 0.0), 1.0))
        assert t == pytest.approx(2.0, rel=1e-12)
        assert d == pytest.approx(0.0, abs=1e-9)

    def test_receding(self):
        ego = VehicleState(vx=10.0)
        t, d = tcpa(ego, Obstacle((-5.0, 0.0), 1.0))
        assert t == 0.0
        assert d == pytest.approx(5.0)

    def test_crossing_matches_dense_sweep(self):
        ego = VehicleState(vx=10.0)
        obs = Obstacle((30.0, -15.0), 1.0, velocity=(0.0, 5.0))
        t, d = tcpa(ego, obs)
        # brute-force time sweep at 1 ms over [0, 10] s
        ts = np.arange(0.0, 10.0, 0.001)
        px = 30.0 - 10.0 * ts
        py = -15.0 + 5.0 * ts
        dist = np.hypot(px, py)
        i = int(np.argmin(dist))
        assert abs(t - ts[i]) < 2e-3
        assert d == pytest.approx(dist[i], abs=1e-3)

    def test_static_relative_motion(self):
        # same velocities: |v_rel| ~ 0 -> tcpa = 0, distance now
        ego = VehicleState(vx=5.0)
        obs = Obstacle((12.0, 0.0), 1.0, velocity=(5.0, 0.0))
        t, d = tcpa(ego, obs)
        assert t == 0.0
        assert d == pytest.approx(12.0)

    def test_report_min_and_visibility(self):
        ego = VehicleState(vx=10.0)
        report = tcpa_report(ego, [
            Obstacle((50.0, 0.0), 1.0),
            Obstacle((20.0, 0.0), 1.0),
            Obstacle((5.0, 0.0), 1.0, visible=False),
        ])
        assert report.min_tcpa == pytest.approx(2.0)
        assert report.imminent_index == 1
        empty = tcpa_report(ego, [])
        assert math.isinf(empty.min_tcpa)


class TestShiftPrior:
    def test_definition(self):
        prev = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]])
        out = shift_prior(prev)
        np.testing.assert_array_equal(out, [[2, 20], [3, 30], [3, 30]])

    def test_constant_fixed_point(self):
        prev = np.tile([0.5, -1.0], (8, 1))
        np.testing.assert_array_equal(shift_prior(prev), prev)

    def test_length_preserved(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = rng.integers(1, 80)
            prev = rng.normal(size=(n, 2))
            assert shift_prior(prev).shape == prev.shape


class TestAllocation:
    def _modes(self, n):
        kinds = [PRIOR, MAX_BRAKE, MAX_ACCEL, EVASIVE]
        return [Mode(kinds[i], np.zeros((5, 2))) for i in range(n)]

    def test_single_mode_takes_all(self):
        modes = allocate_samples(2600, self._modes(1))
        assert modes[0].sample_count == 2600

    def test_four_mode_split(self):
        modes = allocate_samples(2600, self._modes(4))
        assert [m.sample_count for m in modes] == [1040, 520, 520, 520]

    def test_sum_conserved(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            k = int(rng.integers(4, 5000))
            modes = allocate_samples(k, self._modes(4))
            assert sum(m.sample_count for m in modes) == k
            assert all(m.sample_count >= 1 for m in modes)

    def test_too_few_rollouts(self):
        with pytest.raises(ConfigurationError):
            allocate_samples(3, self._modes(4))


class TestGate:
    WEIGHTS = CostWeights()
    LIMITS = Limits()

    def test_gate_closed(self, params):
        world = make_world([Obstacle((100.0, -1.75), 1.0)])
        state = VehicleState(x=50.0, y=-1.75, vx=20.0, theta=50.0)
        report = tcpa_report(state, world.obstacles)
        assert report.min_tcpa >= 2.0
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report)
        assert [m.kind for m in modes] == [PRIOR]

    def test_gate_open(self, params):
        world = make_world([Obstacle((80.0, -1.75), 1.0)])
        state = VehicleState(x=50.0, y=-1.75, vx=20.0, theta=50.0)
        report = tcpa_report(state, world.obstacles)
        assert report.min_tcpa == pytest.approx(1.5)
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report)
        assert [m.kind for m in modes] == [PRIOR, MAX_BRAKE, MAX_ACCEL, EVASIVE]

    def test_baseline_never_opens(self, params):
        world = make_world([Obstacle((80.0, -1.75), 1.0)])
        state = VehicleState(x=50.0, y=-1.75, vx=20.0, theta=50.0)
        report = tcpa_report(state, world.obstacles)
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report,
                                 multimodal=False)
        assert [m.kind for m in modes] == [PRIOR]

    def test_no_obstacles_prior_only(self, params):
        world = make_world([])
        state = VehicleState(x=50.0, y=-1.75, vx=20.0, theta=50.0)
        report = tcpa_report(state, world.obstacles)
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report)
        assert len(modes) == 1


class TestModeMeans:
    WEIGHTS = CostWeights()
    LIMITS = Limits()

    def _modes(self, params, v0=15.0, obstacle_x=None):
        if obstacle_x is None:
            obstacle_x = 50.0 + v0 * 1.5
        world = make_world([Obstacle((obstacle_x, -1.75), 1.0)])
        state = VehicleState(x=50.0, y=-1.75, vx=v0, theta=50.0)
        report = tcpa_report(state, world.obstacles)
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report)
        return state, modes, world

    def test_brake_mean_stops_in_time(self, params):
        v0 = 15.0
        state, modes, _ = self._modes(params, v0=v0)
        brake = next(m for m in modes if m.kind == MAX_BRAKE)
        traj = propagate(state, brake.mean, 0.05, params)
        a_lim = 0.95 * params.mu * params.g
        # jerk-limited ramp must reach the deceleration target promptly
        ramp_steps = math.ceil(a_lim / self.LIMITS.jx_max / 0.05)
        ax = traj[:, 8]
        assert ax[ramp_steps + 1] == pytest.approx(-a_lim, rel=1e-6)
        # stopping time bounded by v0 / (0.95 mu g) + 0.3 s
        t_stop_bound = v0 / a_lim + 0.3
        stopped = np.argwhere(traj[:, 3] < 0.1)
        assert stopped.size > 0
        assert stopped[0, 0] * 0.05 <= t_stop_bound

    def test_accel_mean_hits_engine_cap(self, params):
        state, modes, _ = self._modes(params, v0=15.0)
        accel = next(m for m in modes if m.kind == MAX_ACCEL)
        traj = propagate(state, accel.mean, 0.05, params)
        target = min(0.95 * params.mu * params.g, self.LIMITS.engine_accel_max)
        assert np.max(traj[:, 8]) == pytest.approx(target, rel=1e-6)

    def test_means_dynamically_admissible(self, params):
        for v0 in (8.0, 15.0, 25.0):
            state, modes, _ = self._modes(params, v0=v0)
            for mode in modes:
                assert np.all(np.abs(mode.mean[:, 0]) <= self.LIMITS.ddelta_max + 1e-12)
                assert np.all(np.abs(mode.mean[:, 1]) <= self.LIMITS.jx_max + 1e-12)
                traj = propagate(state, mode.mean, 0.05, params)
                assert np.all(np.abs(traj[:, 7]) <= self.LIMITS.delta_max + 1e-9)
                assert np.all(np.abs(traj[:, 8]) <= self.LIMITS.ax_max + 1e-9)

    def test_cost_profiles(self, params):
        state, modes, _ = self._modes(params)
        profiles = {m.kind: m.cost_profile for m in modes}
        assert profiles[MAX_BRAKE] == {"q_evel": 0.0, "q_st": 0.0}
        assert profiles[MAX_ACCEL] == {"q_evel": 0.0}
        assert profiles[PRIOR] == {}
        assert profiles[EVASIVE] == {}

    def test_evasive_side_larger_clearance(self, params):
        # obstacle below the path centre: more room on the left
        world = make_world([Obstacle((80.0, -2.5), 1.0)])
        state = VehicleState(x=50.0, y=-1.75, vx=20.0, theta=50.0)
        report = tcpa_report(state, world.obstacles)
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report)
        evasive = next(m for m in modes if m.kind == EVASIVE)
        assert evasive.mean[0, 0] > 0.0  # steer left first

        # obstacle above the road centre: more room on the right
        world = make_world([Obstacle((80.0, 1.0), 1.0)])
        report = tcpa_report(state, world.obstacles)
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report)
        evasive = next(m for m in modes if m.kind == EVASIVE)
        assert evasive.mean[0, 0] < 0.0

    def test_evasive_tie_breaks_left(self, params):
        world = make_world([Obstacle((80.0, 0.0), 1.0)])
        state = VehicleState(x=50.0, y=0.0, vx=20.0, theta=50.0)
        report = tcpa_report(state, world.obstacles)
        modes = build_mode_means(np.zeros((50, 2)), state, world, params,
                                 self.LIMITS, self.WEIGHTS, 0.05, report)
        evasive = next(m for m in modes if m.kind == EVASIVE)
        assert evasive.mean[0, 0] > 0.0

    def test_evasive_zero_jerk(self, params):
        state, modes, _ = self._modes(params, v0=20.0)
        evasive = next(m for m in modes if m.kind == EVASIVE)
        np.testing.assert_array_equal(evasive.mean[:, 1], 0.0)
