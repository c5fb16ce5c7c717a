"""Stage cost: tracking, velocity, input, stability and margin penalties.

The running cost combines quadratic contouring/lag tracking errors, a Log-Cosh
velocity error, quadratic input-rate penalties, step penalties on actuator,
sideslip, yaw-rate, tyre-force and minimum-speed violations, and quadratic
penalties on violated obstacle / road-edge safety margins.
"""

from __future__ import annotations

import math

import numpy as np
from ._jit import fastjit

from .dynamics import (
    SAX,
    SDELTA,
    SPSI,
    SR,
    STHETA,
    SVX,
    SVY,
    SX,
    SY,
    VX_EPS,
    VehicleState,
    ControlRates,
    _axle_forces,
)
from .geometry import (
    EgoFootprint,
    Obstacle,
    RoadEdge,
    WorldSnapshot,
    _signed_edge_distance,
    pack_edges,
    pack_obstacles,
)
from .params import (
    ConfigurationError,
    CostWeights,
    VehicleParams,
    W_AX,
    W_AX_MAX,
    W_BETA,
    W_BETA_MAX,
    W_DDELTA,
    W_DELTA,
    W_DELTA_MAX,
    W_DSFT_E,
    W_DSFT_O,
    W_ECON,
    W_ELAG,
    W_EVEL,
    W_JX,
    W_R,
    W_R_MAX,
    W_R_MAX_COEFF,
    W_SC,
    W_ST,
    W_TF,
    W_V2E,
    W_V2O,
    W_VX_MIN,
)
from .path import PathReference, _path_sample


@fastjit()
def _logcosh(e: float) -> float:
    a = abs(e)
    return a + math.log1p(math.exp(-2.0 * a)) - 0.6931471805599453


@fastjit()
def _stage_cost(s, ddelta, jx, fxf, fyf, fxr, fyr, fzf, fzr, cpsi, spsi, w,
                tan_beta_max, mu, g, ps, px, py, ptx, pty, pv, obs, t_abs,
                edge_pts, edge_off, edge_sides, ego_off, ego_r, scratch):
    """Nominal stage cost at one propagated state, given the tyre forces and
    heading trig already evaluated there.

    Returns (cost, e_vel, st_ind, tf_ind, circle_util); the velocity and stop
    terms are reported separately so per-mode customised costs can be
    reconstructed without a second pass.
    """
    _path_sample(ps, px, py, ptx, pty, pv, s[STHETA], scratch)
    rx = s[SX] - scratch[0]
    ry = s[SY] - scratch[1]
    tx = scratch[2]
    ty = scratch[3]
    e_lag = tx * rx + ty * ry
    e_con = -ty * rx + tx * ry
    e_vel = _logcosh(s[SVX] - scratch[4])

    cost = (w[W_ECON] * e_con * e_con + w[W_ELAG] * e_lag * e_lag
            + w[W_EVEL] * e_vel + w[W_DDELTA] * ddelta * ddelta
            + w[W_JX] * jx * jx)

    if abs(s[SDELTA]) > w[W_DELTA_MAX]:
        cost += w[W_DELTA]
    if abs(s[SAX]) > w[W_AX_MAX]:
        cost += w[W_AX]

    vx_c = max(s[SVX], VX_EPS)
    if abs(s[SVY] / vx_c) > tan_beta_max:
        cost += w[W_BETA]
    r_max = w[W_R_MAX]
    if r_max <= 0.0:
        r_max = w[W_R_MAX_COEFF] * mu * g / vx_c
    if abs(s[SR]) > r_max:
        cost += w[W_R]

    tf_ind = 0.0
    if fxf > w[W_SC] * mu * fzf or fxr > w[W_SC] * mu * fzr:
        tf_ind = 1.0
        cost += w[W_TF]

    st_ind = 0.0
    if s[SVX] < w[W_VX_MIN]:
        st_ind = 1.0
        cost += w[W_ST]

    # footprint circle centres use the caller-supplied heading trig
    n_circ = ego_off.shape[0]

    for j in range(obs.shape[0]):
        ox = obs[j, 0] + obs[j, 2] * t_abs
        oy = obs[j, 1] + obs[j, 3] * t_abs
        d_min = np.inf
        for c in range(n_circ):
            cx = s[SX] + ego_off[c] * cpsi
            cy = s[SY] + ego_off[c] * spsi
            d = math.sqrt((cx - ox) ** 2 + (cy - oy) ** 2) - ego_r - obs[j, 4]
            if d < d_min:
                d_min = d
        e = min(0.0, d_min - w[W_DSFT_O])
        cost += w[W_V2O] * e * e

    n_edges = edge_sides.shape[0]
    for j in range(n_edges):
        d_min = np.inf
        for c in range(n_circ):
            cx = s[SX] + ego_off[c] * cpsi
            cy = s[SY] + ego_off[c] * spsi
            d = _signed_edge_distance(cx, cy, edge_pts, edge_off[j],
                                      edge_off[j + 1], edge_sides[j]) - ego_r
            if d < d_min:
                d_min = d
        e = min(0.0, d_min - w[W_DSFT_E])
        cost += w[W_V2E] * e * e

    util_f = math.sqrt(fxf * fxf + fyf * fyf) / (mu * fzf)
    util_r = math.sqrt(fxr * fxr + fyr * fyr) / (mu * fzr)
    circle_util = max(util_f, util_r)

    return cost, e_vel, st_ind, tf_ind, circle_util


def contouring_lag_errors(state: VehicleState, path: PathReference) -> tuple[float, float]:
    """Lateral (contouring) and along-track (lag) errors at arc length theta."""
    out = np.empty(5)
    _path_sample(path.s, path.points[:, 0], path.points[:, 1],
                 path.tangents[:, 0], path.tangents[:, 1], path.v_des,
                 state.theta, out)
    rx = state.x - out[0]
    ry = state.y - out[1]
    e_lag = out[2] * rx + out[3] * ry
    e_con = -out[3] * rx + out[2] * ry
    return float(e_con), float(e_lag)


def logcosh_vel_error(vx: float, v_des: float) -> float:
    """log(cosh(vx - v_des)), evaluated overflow-safe."""
    return float(_logcosh(vx - v_des))


def sideslip(state: VehicleState) -> float:
    """Vehicle sideslip angle beta = atan(vy / vx), vx clamped at VX_EPS."""
    return math.atan(state.vy / max(state.vx, VX_EPS))


def v2o_error(state: VehicleState, footprint: EgoFootprint, obs: Obstacle,
              d_sft_o: float) -> float:
    """Violated obstacle margin: min(0, D_V2O - d_sft_o), D_V2O over ego circles."""
    centers = footprint.centers(state.x, state.y, state.psi)
    d = np.hypot(centers[:, 0] - obs.center[0], centers[:, 1] - obs.center[1])
    d_v2o = float(np.min(d)) - footprint.radius - obs.radius
    return min(0.0, d_v2o - d_sft_o)


def v2e_error(state: VehicleState, footprint: EgoFootprint, edge: RoadEdge,
              d_sft_e: float) -> float:
    """Violated edge margin: min(0, D_V2E - d_sft_e), D_V2E over ego circles."""
    centers = footprint.centers(state.x, state.y, state.psi)
    d_v2e = min(
        _signed_edge_distance(cx, cy, edge.points, 0, edge.points.shape[0],
                              edge.side) - footprint.radius
        for cx, cy in centers)
    return min(0.0, float(d_v2e) - d_sft_e)


def collision_check(state: VehicleState, footprint: EgoFootprint,
                    obstacles: list[Obstacle], t: float = 0.0) -> bool:
    """True iff any ego circle strictly overlaps any obstacle circle."""
    centers = footprint.centers(state.x, state.y, state.psi)
    for obs in obstacles:
        ox, oy = obs.position_at(t)
        d = np.hypot(centers[:, 0] - ox, centers[:, 1] - oy)
        if np.min(d) < footprint.radius + obs.radius:
            return True
    return False


def stage_cost(state: VehicleState, u: ControlRates, world: WorldSnapshot,
               weights: CostWeights, params: VehicleParams,
               mode_profile: dict | None = None, t_abs: float = 0.0) -> float:
    """Stage cost at one state; ``mode_profile`` overrides weight fields first."""
    if world.path is None:
        raise ConfigurationError("stage cost requires a reference path")
    if mode_profile:
        weights = weights.replace(**mode_profile)
    s = state.as_array()
    p = params.as_array()
    fxf, fyf, fxr, fyr, fzf, fzr = _axle_forces(s, p)
    obs = pack_obstacles(world.obstacles)
    edge_pts, edge_off, edge_sides = pack_edges(world.edges)
    path = world.path
    cost, _, _, _, _ = _stage_cost(
        s, u.ddelta, u.jx, fxf, fyf, fxr, fyr, fzf, fzr,
        math.cos(state.psi), math.sin(state.psi), weights.as_array(),
        math.tan(weights.beta_max), params.mu, params.g, path.s,
        path.points[:, 0], path.points[:, 1], path.tangents[:, 0],
        path.tangents[:, 1], path.v_des, obs, t_abs, edge_pts, edge_off,
        edge_sides, np.asarray(world.footprint.offsets, dtype=np.float64),
        world.footprint.radius, np.empty(5))
    return float(cost)
