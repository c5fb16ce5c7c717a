"""Mode mean-control sequences: prior, maximum braking, maximum acceleration
and a friction-limited evasive manoeuvre, gated on time to closest approach.

Besides the always-active prior (the shifted previous solution), three
analytical candidate manoeuvres are constructed whenever any visible obstacle
comes closer than the TCPA gate. Each mean is built by propagating the
prediction model under a deterministic feedback law, so every mean is
dynamically admissible by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    N_STATES,
    SAX,
    SDELTA,
    SPSI,
    STHETA,
    SVX,
    SVY,
    SX,
    SY,
    VX_EPS,
    VehicleState,
    _step_rk2,
)
from .geometry import Obstacle, WorldSnapshot, signed_edge_distance
from .params import ConfigurationError, CostWeights, Limits, VehicleParams
from .path import PathReference, _path_sample

PRIOR = "prior"
MAX_BRAKE = "max_brake"
MAX_ACCEL = "max_accel"
EVASIVE = "evasive"

# q_* overrides aligning each analytical mode with its manoeuvre
MODE_COST_PROFILES = {
    PRIOR: {},
    MAX_BRAKE: {"q_evel": 0.0, "q_st": 0.0},
    MAX_ACCEL: {"q_evel": 0.0},
    EVASIVE: {},
}


@dataclass
class Mode:
    """A sampling mode: mean control sequence plus its share of the rollouts."""

    kind: str
    mean: np.ndarray
    sample_count: int = 0
    cost_profile: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TcpaReport:
    """Per-obstacle time to closest point of approach and distance at CPA."""

    tcpa: np.ndarray
    d_cpa: np.ndarray
    min_tcpa: float
    imminent_index: int = -1


@dataclass(frozen=True)
class ModeConfig:
    """Gate threshold and the feedback-law constants used to build the means."""

    gate_tcpa: float = 2.0
    lookahead_gain: float = 0.5
    lookahead_min: float = 5.0
    steer_gain: float = 5.0
    evasive_heading_min: float = 0.15
    evasive_heading_max: float = 0.6
    evasive_margin: float = 0.3


def tcpa(ego: VehicleState, obstacle: Obstacle) -> tuple[float, float]:
    """Time to closest point of approach and the separation at that time.

    Constant-velocity extrapolation of both bodies; a receding obstacle
    reports tcpa = 0 with the current distance.
    """
    c, s = math.cos(ego.psi), math.sin(ego.psi)
    ego_v = (ego.vx * c - ego.vy * s, ego.vx * s + ego.vy * c)
    px = obstacle.center[0] - ego.x
    py = obstacle.center[1] - ego.y
    vx = obstacle.velocity[0] - ego_v[0]
    vy = obstacle.velocity[1] - ego_v[1]
    vv = vx * vx + vy * vy
    if vv < 1e-12:
        t = 0.0
    else:
        t = max(0.0, -(px * vx + py * vy) / vv)
    d = math.hypot(px + t * vx, py + t * vy)
    return t, d


def tcpa_report(ego: VehicleState, obstacles: list[Obstacle]) -> TcpaReport:
    """TCPA over the currently visible obstacles; min_tcpa = inf when empty."""
    visible = [o for o in obstacles if o.visible]
    if not visible:
        return TcpaReport(np.empty(0), np.empty(0), math.inf, -1)
    ts = np.empty(len(visible))
    ds = np.empty(len(visible))
    for i, o in enumerate(visible):
        ts[i], ds[i] = tcpa(ego, o)
    imin = int(np.argmin(ts))
    return TcpaReport(ts, ds, float(ts[imin]), imin)


def shift_prior(prev: np.ndarray) -> np.ndarray:
    """Advance the previous solution one step; the last entry is duplicated."""
    prev = np.asarray(prev, dtype=np.float64)
    out = np.empty_like(prev)
    out[:-1] = prev[1:]
    out[-1] = prev[-1]
    return out


def allocate_samples(n_rollouts: int, modes: list[Mode]) -> list[Mode]:
    """Split the rollout budget: 40% prior / 20% per analytical mode (single
    mode takes everything); rounding remainders go to the prior."""
    if n_rollouts < len(modes):
        raise ConfigurationError("need at least one rollout per active mode")
    if len(modes) == 1:
        modes[0].sample_count = n_rollouts
        return modes
    n_each = int(round(0.2 * n_rollouts))
    n_each = max(1, min(n_each, (n_rollouts - 1) // (len(modes) - 1)))
    for m in modes:
        m.sample_count = n_each
    modes[0].sample_count = n_rollouts - n_each * (len(modes) - 1)
    return modes


def _pure_pursuit_rate(s: np.ndarray, path: PathReference, params: VehicleParams,
                       limits: Limits, cfg: ModeConfig, scratch: np.ndarray) -> float:
    lookahead = max(cfg.lookahead_min, cfg.lookahead_gain * s[SVX])
    _path_sample(path.s, path.points[:, 0], path.points[:, 1],
                 path.tangents[:, 0], path.tangents[:, 1], path.v_des,
                 s[STHETA] + lookahead, scratch)
    dx = scratch[0] - s[SX]
    dy = scratch[1] - s[SY]
    c, sn = math.cos(s[SPSI]), math.sin(s[SPSI])
    local_x = c * dx + sn * dy
    local_y = -sn * dx + c * dy
    alpha = math.atan2(local_y, max(local_x, 1e-3))
    wheelbase = params.lf + params.lr
    delta_des = math.atan(2.0 * wheelbase * math.sin(alpha) / lookahead)
    delta_des = min(max(delta_des, -limits.delta_max), limits.delta_max)
    rate = cfg.steer_gain * (delta_des - s[SDELTA])
    return min(max(rate, -limits.ddelta_max), limits.ddelta_max)


def _longitudinal_mean(prior_like: np.ndarray, state: VehicleState,
                       path: PathReference, params: VehicleParams,
                       limits: Limits, cfg: ModeConfig, dt: float,
                       a_target: float) -> np.ndarray:
    """Mean that drives ax to ``a_target`` at full jerk while tracking the path."""
    T = prior_like.shape[0]
    mean = np.empty((T, 2))
    s = state.as_array()
    nxt = np.empty(N_STATES)
    scratch = np.empty(5)
    p = params.as_array()
    for t in range(T):
        err = a_target - s[SAX]
        jx = min(max(err / dt, -limits.jx_max), limits.jx_max)
        ddelta = _pure_pursuit_rate(s, path, params, limits, cfg, scratch)
        mean[t, 0] = ddelta
        mean[t, 1] = jx
        _step_rk2(s, ddelta, jx, dt, p, nxt)
        s, nxt = nxt, s
    return mean


def _evasive_side(state: VehicleState, world: WorldSnapshot,
                  report: TcpaReport) -> float:
    """+1 to steer left, -1 right: the side with more lateral clearance around
    the most imminent obstacle; ties break left."""
    visible = [o for o in world.obstacles if o.visible]
    if not visible or report.imminent_index < 0:
        return 1.0
    obs = visible[report.imminent_index]
    if len(world.edges) >= 2:
        margins = []
        for edge in world.edges:
            margins.append(signed_edge_distance(obs.center, edge) - obs.radius)
        # edge order: first edge is the left one by scenario convention; fall
        # back to the path normal when the convention cannot hold
        left, right = margins[0], margins[1]
    else:
        path = world.path
        s_obs = path.project(obs.center[0], obs.center[1])
        pos, tan, _ = path.sample(s_obs)
        e_obs = -tan[1] * (obs.center[0] - pos[0]) + tan[0] * (obs.center[1] - pos[1])
        left, right = -e_obs, e_obs
    if left >= right - 1e-9:
        return 1.0
    return -1.0


def _evasive_mean(prior_like: np.ndarray, state: VehicleState,
                  world: WorldSnapshot, params: VehicleParams, limits: Limits,
                  weights: CostWeights, cfg: ModeConfig, dt: float,
                  report: TcpaReport) -> np.ndarray:
    """Friction-limited steering ramp toward the clearer side, hold, then
    counter-steer until the heading re-aligns with the path; zero jerk."""
    T = prior_like.shape[0]
    side = _evasive_side(state, world, report)
    mean = np.zeros((T, 2))
    path = world.path
    s = state.as_array()
    nxt = np.empty(N_STATES)
    scratch = np.empty(5)
    p = params.as_array()
    ay_lim = weights.s_c * params.mu * params.g
    wheelbase = params.lf + params.lr

    tcpa_min = min(report.min_tcpa, 4.0)
    visible = [o for o in world.obstacles if o.visible]
    needed_lat = 3.0
    if visible and report.imminent_index >= 0:
        obs = visible[report.imminent_index]
        needed_lat = (obs.radius + world.footprint.radius + weights.d_sft_o
                      + cfg.evasive_margin)
    # about a third of the closing distance is budgeted for the heading build-up
    reach = 0.35 * max(state.vx, 5.0) * max(tcpa_min, 1.0)
    psi_target = math.atan2(needed_lat, reach)
    psi_target = min(max(psi_target, cfg.evasive_heading_min), cfg.evasive_heading_max)

    phase = 1
    for t in range(T):
        _path_sample(path.s, path.points[:, 0], path.points[:, 1],
                     path.tangents[:, 0], path.tangents[:, 1], path.v_des,
                     s[STHETA], scratch)
        psi_path = math.atan2(scratch[3], scratch[2])
        dpsi = math.atan2(math.sin(s[SPSI] - psi_path), math.cos(s[SPSI] - psi_path))
        vx_c = max(s[SVX], VX_EPS)
        delta_cap = min(limits.delta_max, math.atan(ay_lim * wheelbase / (vx_c * vx_c)))

        if phase in (1, 2) and dpsi * side >= psi_target:
            phase = 3
        if phase == 1:
            ddelta = side * limits.ddelta_max
            if abs(s[SDELTA]) >= delta_cap:
                ddelta = 0.0
                phase = 2
        elif phase == 2:
            ddelta = 0.0
        elif phase == 3:
            ddelta = -side * limits.ddelta_max
            if s[SDELTA] * side <= -delta_cap or dpsi * side <= 0.02:
                phase = 4
        else:
            # hold the achieved offset: regulate heading onto the path tangent
            delta_des = min(max(-1.2 * dpsi, -delta_cap), delta_cap)
            ddelta = cfg.steer_gain * (delta_des - s[SDELTA])
            ddelta = min(max(ddelta, -limits.ddelta_max), limits.ddelta_max)
        mean[t, 0] = ddelta
        mean[t, 1] = 0.0
        _step_rk2(s, ddelta, 0.0, dt, p, nxt)
        s, nxt = nxt, s
    return mean


def build_mode_means(prior: np.ndarray, state: VehicleState,
                     world: WorldSnapshot, params: VehicleParams,
                     limits: Limits, weights: CostWeights, dt: float,
                     report: TcpaReport,
                     cfg: ModeConfig | None = None,
                     multimodal: bool = True) -> list[Mode]:
    """Active modes for this plan step: [prior] when every visible obstacle is
    beyond the TCPA gate (or in baseline operation), all four otherwise."""
    cfg = cfg or ModeConfig()
    prior = np.asarray(prior, dtype=np.float64)
    modes = [Mode(PRIOR, prior, cost_profile=dict(MODE_COST_PROFILES[PRIOR]))]
    if not multimodal or report.min_tcpa >= cfg.gate_tcpa:
        return modes

    a_brake = -weights.s_c * params.mu * params.g
    a_accel = min(weights.s_c * params.mu * params.g, limits.engine_accel_max)
    path = world.path
    modes.append(Mode(
        MAX_BRAKE,
        _longitudinal_mean(prior, state, path, params, limits, cfg, dt, a_brake),
        cost_profile=dict(MODE_COST_PROFILES[MAX_BRAKE])))
    modes.append(Mode(
        MAX_ACCEL,
        _longitudinal_mean(prior, state, path, params, limits, cfg, dt, a_accel),
        cost_profile=dict(MODE_COST_PROFILES[MAX_ACCEL])))
    modes.append(Mode(
        EVASIVE,
        _evasive_mean(prior, state, world, params, limits, weights, cfg, dt,
                      report),
        cost_profile=dict(MODE_COST_PROFILES[EVASIVE])))
    return modes
