import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmppi.costs import (
    collision_check,
    contouring_lag_errors,
    logcosh_vel_error,
    sideslip,
    stage_cost,
    v2e_error,
    v2o_error,
)
from mmppi.dynamics import ControlRates, VehicleState
from mmppi.geometry import EgoFootprint, Obstacle, RoadEdge, WorldSnapshot
from mmppi.params import CostWeights, VehicleParams
from mmppi.path import arc_path, straight_path

from conftest import random_states
from oracles import ref_logcosh, ref_stage_cost

PATH_Y = -1.75
V_DES = 20.0


def make_world(obstacles=(), edges="default", path_y=PATH_Y, v_des=V_DES):
    path = straight_path((0.0, path_y), (400.0, path_y), v_des)
    if edges == "default":
        edges = [
            RoadEdge(np.array([[-20.0, 3.5], [400.0, 3.5]]), side=-1.0),
            RoadEdge(np.array([[-20.0, -3.5], [400.0, -3.5]]), side=1.0),
        ]
    return WorldSnapshot(path=path, obstacles=list(obstacles), edges=list(edges),
                         footprint=EgoFootprint())


class TestContouringLag:
    def test_on_path(self):
        world = make_world()
        state = VehicleState(x=50.0, y=PATH_Y, theta=50.0, vx=V_DES)
        e_con, e_lag = contouring_lag_errors(state, world.path)
        assert e_con == pytest.approx(0.0, abs=1e-12)
        assert e_lag == pytest.approx(0.0, abs=1e-12)

    def test_pure_lateral_offset(self):
        world = make_world()
        state = VehicleState(x=80.0, y=PATH_Y + 1.0, theta=80.0)
        e_con, e_lag = contouring_lag_errors(state, world.path)
        assert e_con == pytest.approx(1.0, rel=1e-12)
        assert e_lag == pytest.approx(0.0, abs=1e-9)

    def test_lag_offset(self):
        world = make_world()
        state = VehicleState(x=82.5, y=PATH_Y, theta=80.0)
        e_con, e_lag = contouring_lag_errors(state, world.path)
        assert e_lag == pytest.approx(2.5, rel=1e-9)
        assert e_con == pytest.approx(0.0, abs=1e-9)

    def test_arc_path_vs_dense_projection_oracle(self):
        """Radial 0.5 m displacement on a 50 m arc, matched arc length."""
        path = arc_path(radius=50.0, angle=1.2, v_des=15.0, spacing=0.05)
        theta = 30.0
        pos, tan, _ = path.sample(theta)
        normal = np.array([-tan[1], tan[0]])
        probe = pos + 0.5 * normal
        state = VehicleState(x=probe[0], y=probe[1], theta=theta)
        e_con, e_lag = contouring_lag_errors(state, path)

        # dense-sampling oracle at 1 mm resolution around the match point
        s_grid = np.arange(theta - 2.0, theta + 2.0, 0.001)
        samples = np.array([path.sample(s)[0] for s in s_grid])
        d = np.hypot(samples[:, 0] - probe[0], samples[:, 1] - probe[1])
        i = int(np.argmin(d))
        assert abs(abs(e_con) - d[i]) < 5e-3
        assert e_con == pytest.approx(0.5, abs=5e-3)
        assert abs(e_lag) < 5e-3 + abs(s_grid[i] - theta)


class TestLogCosh:
    def test_zero(self):
        assert logcosh_vel_error(20.0, 20.0) == 0.0

    def test_small_error(self):
        assert logcosh_vel_error(20.1, 20.0) == pytest.approx(
            math.log(math.cosh(0.1)), rel=1e-12)

    def test_large_error_no_overflow(self):
        got = logcosh_vel_error(60.0, 20.0)
        assert math.isfinite(got)
        assert got == pytest.approx(40.0 - math.log(2.0), abs=1e-12)

    @settings(max_examples=300, deadline=None)
    @given(e=st.floats(-700, 700, allow_nan=False))
    def test_bounds_property(self, e):
        v = logcosh_vel_error(e, 0.0)
        assert 0.0 <= v <= abs(e)
        assert math.isfinite(v)

    def test_quadratic_regime(self):
        for e in (1e-4, 1e-3, 1e-2):
            assert logcosh_vel_error(e, 0.0) / e ** 2 == pytest.approx(0.5,
                                                                       rel=1e-3)

    def test_linear_asymptote(self):
        for e in (30.0, 100.0, 500.0):
            assert logcosh_vel_error(e, 0.0) - (e - math.log(2.0)) == \
                pytest.approx(0.0, abs=1e-12)


class TestMarginErrors:
    FP = EgoFootprint(offsets=(0.0,), radius=1.0)

    def test_v2o_zero_above_margin(self):
        obs = Obstacle((10.0, 0.0), 1.0)
        state = VehicleState(x=10.0 - (2.0 + 4.0 + 1.0), y=0.0)
        assert v2o_error(state, self.FP, obs, 4.0) == 0.0

    def test_v2o_boundary(self):
        obs = Obstacle((10.0, 0.0), 1.0)
        state = VehicleState(x=10.0 - (2.0 + 4.0), y=0.0)
        assert v2o_error(state, self.FP, obs, 4.0) == pytest.approx(0.0, abs=1e-12)

    def test_v2o_violated(self):
        obs = Obstacle((5.0, 0.0), 1.0)
        state = VehicleState(x=0.0, y=0.0)
        # concentric-circles example: centre distance 5, radii 1+1, margin 4
        assert v2o_error(state, self.FP, obs, 4.0) == pytest.approx(-1.0, rel=1e-12)

    def test_v2e_centred_in_corridor(self):
        edge = RoadEdge(np.array([[-10.0, 3.5], [10.0, 3.5]]), side=-1.0)
        state = VehicleState(x=0.0, y=0.0)
        assert v2e_error(state, self.FP, edge, 1.0) == 0.0

    def test_v2e_touching(self):
        edge = RoadEdge(np.array([[-10.0, 3.5], [10.0, 3.5]]), side=-1.0)
        state = VehicleState(x=0.0, y=2.5)
        assert v2e_error(state, self.FP, edge, 1.0) == pytest.approx(-1.0,
                                                                     rel=1e-12)

    def test_v2e_partial(self):
        edge = RoadEdge(np.array([[-10.0, 3.5], [10.0, 3.5]]), side=-1.0)
        state = VehicleState(x=0.0, y=2.0)
        assert v2e_error(state, self.FP, edge, 1.0) == pytest.approx(-0.5,
                                                                     rel=1e-12)


class TestSideslip:
    def test_straight(self):
        assert sideslip(VehicleState(vx=20.0)) == 0.0

    def test_diagonal(self):
        assert sideslip(VehicleState(vx=5.0, vy=5.0)) == pytest.approx(math.pi / 4)

    def test_generic(self):
        assert sideslip(VehicleState(vx=20.0, vy=1.0)) == pytest.approx(
            math.atan(0.05), rel=1e-12)


class TestCollisionCheck:
    FP = EgoFootprint(offsets=(-1.0, 1.0), radius=1.0)

    def test_far_apart(self):
        assert not collision_check(VehicleState(), self.FP,
                                   [Obstacle((50.0, 0.0), 1.0)])

    def test_concentric(self):
        assert collision_check(VehicleState(), self.FP,
                               [Obstacle((1.0, 0.0), 1.0)])

    def test_tangent_is_safe(self):
        # strict inequality: distance exactly r1+r2 does not collide
        assert not collision_check(VehicleState(), self.FP,
                                   [Obstacle((3.0, 0.0), 1.0)])

    def test_moving_obstacle_time_shift(self):
        obs = Obstacle((10.0, 0.0), 1.0, velocity=(-2.0, 0.0))
        assert not collision_check(VehicleState(), self.FP, [obs], t=0.0)
        assert collision_check(VehicleState(), self.FP, [obs], t=4.0)


class TestStageCost:
    def test_zero_at_ideal_point(self, params, weights):
        world = make_world()
        state = VehicleState(x=100.0, y=PATH_Y, theta=100.0, vx=V_DES)
        c = stage_cost(state, ControlRates(), world, weights, params)
        assert c == 0.0

    def test_friction_budget_penalty_activates(self, params, weights):
        world = make_world()
        # per-axle Fx/(mu*Fz) equals ax/(mu*g): 0.96*mu*g exceeds the budget
        state = VehicleState(x=100.0, y=PATH_Y, theta=100.0, vx=V_DES,
                             ax=0.96 * params.mu * params.g)
        c_over = stage_cost(state, ControlRates(), world, weights, params)
        state2 = VehicleState(x=100.0, y=PATH_Y, theta=100.0, vx=V_DES,
                              ax=0.94 * params.mu * params.g)
        c_under = stage_cost(state2, ControlRates(), world, weights, params)
        assert c_over - c_under >= 0.9 * weights.q_tf

    def test_indicators_all_or_nothing(self, params, weights):
        world = make_world()
        base = VehicleState(x=100.0, y=PATH_Y, theta=100.0, vx=V_DES)
        over = VehicleState(x=100.0, y=PATH_Y, theta=100.0, vx=V_DES,
                            delta=weights.delta_max + 1e-6)
        c0 = stage_cost(base, ControlRates(), world, weights, params)
        c1 = stage_cost(over, ControlRates(), world, weights, params)
        assert c1 - c0 == pytest.approx(weights.q_delta, rel=1e-6)

    def test_mode_profile_override(self, params, weights):
        world = make_world()
        state = VehicleState(x=100.0, y=PATH_Y, theta=100.0, vx=V_DES - 5.0)
        full = stage_cost(state, ControlRates(), world, weights, params)
        custom = stage_cost(state, ControlRates(), world, weights, params,
                            mode_profile={"q_evel": 0.0})
        assert full - custom == pytest.approx(
            weights.q_evel * ref_logcosh(-5.0), rel=1e-9)

    def test_non_negative(self, params, weights):
        world = make_world(obstacles=[Obstacle((60.0, PATH_Y), 1.0)])
        rng = np.random.default_rng(11)
        for s in random_states(200, rng):
            c = stage_cost(VehicleState.from_array(s),
                           ControlRates(0.3, -5.0), world, weights, params)
            assert c >= 0.0

    def test_monotone_in_obstacle_distance(self, params, weights):
        obs = Obstacle((100.0, PATH_Y), 1.0)
        world = make_world(obstacles=[obs])
        costs = []
        for x in np.linspace(80.0, 97.0, 40):
            state = VehicleState(x=x, y=PATH_Y, theta=x, vx=V_DES)
            costs.append(stage_cost(state, ControlRates(), world, weights,
                                    params))
        assert np.all(np.diff(costs) >= -1e-9)

    def test_matches_independent_transcription(self, params, weights):
        obstacles = [Obstacle((60.0, -1.0), 1.2, velocity=(1.0, 0.5)),
                     Obstacle((90.0, 1.5), 0.8)]
        world = make_world(obstacles=obstacles)
        w = {f: getattr(weights, f) for f in (
            "q_econ", "q_elag", "q_evel", "q_ddelta", "q_jx", "q_delta",
            "q_ax", "q_beta", "q_r", "q_tf", "q_st", "q_v2o", "q_v2e",
            "delta_max", "ax_max", "beta_max", "r_max", "r_max_coeff", "s_c",
            "vx_min", "d_sft_o", "d_sft_e")}
        obs_rows = [(o.center[0], o.center[1], o.velocity[0], o.velocity[1],
                     o.radius) for o in obstacles]
        edge_rows = [(3.5, -1.0), (-3.5, 1.0)]
        rng = np.random.default_rng(99)
        p = params.as_array()
        for s in random_states(400, rng, vx_range=(0.2, 40.0)):
            s[0] = rng.uniform(0, 120)   # X near the action
            s[6] = s[0] + rng.uniform(-2, 2)
            u = ControlRates(rng.uniform(-0.8, 0.8), rng.uniform(-20, 20))
            t_abs = rng.uniform(0.0, 2.5)
            got = stage_cost(VehicleState.from_array(s), u, world, weights,
                             params, t_abs=t_abs)
            want = ref_stage_cost(s, u.ddelta, u.jx, w, p, PATH_Y, V_DES,
                                  obs_rows, edge_rows, (-1.0, 1.0), 1.0, t_abs)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-9)
