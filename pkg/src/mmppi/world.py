"""Closed-loop simulator: 1 kHz plant with perturbed parameters and
second-order actuator dynamics, scripted obstacle reveal, and the scenario
loop that replans every 0.05 s.

The plant shares the single-track structure of the prediction model; the
planner/plant mismatch is exactly the configured parameter perturbations plus
the actuator filters.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from ._jit import fastjit

from .costs import collision_check
from .dynamics import (
    N_STATES,
    SAX,
    SDELTA,
    SPSI,
    SR,
    SVX,
    SVY,
    SX,
    SY,
    STHETA,
    VX_STOP,
    VehicleState,
    _derivatives,
    _axle_forces,
)
from .geometry import (
    EgoFootprint,
    Obstacle,
    RoadEdge,
    WorldSnapshot,
    segment_blocked_by_polygon,
    _signed_edge_distance,
)
from .params import ConfigurationError, Limits, VehicleParams
from .solver import Planner, SolverDiagnostics

# plant state layout: vehicle block plus actuator internals
PS_DELTA_CMD, PS_DDELTA_F, PS_AX_CMD, PS_DAX_F = 9, 10, 11, 12
N_PLANT_STATES = 13


@dataclass(frozen=True)
class ActuatorConfig:
    """Second-order actuator filters (natural frequency rad/s, damping)."""

    steer_wn: float = 25.0
    steer_zeta: float = 0.7
    accel_wn: float = 8.0
    accel_zeta: float = 0.7
    bypass: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.steer_wn, self.steer_zeta, self.accel_wn,
                         self.accel_zeta], dtype=np.float64)


@dataclass(frozen=True)
class PlantState:
    """Vehicle state plus the actuator filter internals."""

    vehicle: VehicleState
    delta_cmd: float = 0.0
    ddelta_f: float = 0.0
    ax_cmd: float = 0.0
    dax_f: float = 0.0

    def as_array(self) -> np.ndarray:
        out = np.empty(N_PLANT_STATES)
        out[:N_STATES] = self.vehicle.as_array()
        out[PS_DELTA_CMD] = self.delta_cmd
        out[PS_DDELTA_F] = self.ddelta_f
        out[PS_AX_CMD] = self.ax_cmd
        out[PS_DAX_F] = self.dax_f
        return out

    @classmethod
    def from_array(cls, s: np.ndarray) -> "PlantState":
        return cls(VehicleState.from_array(s[:N_STATES]), float(s[PS_DELTA_CMD]),
                   float(s[PS_DDELTA_F]), float(s[PS_AX_CMD]), float(s[PS_DAX_F]))


@fastjit()
def _plant_derivatives(s, cmd_ddelta, cmd_jx, p, act, bypass, out):
    if bypass:
        dd_eff = cmd_ddelta
        jx_eff = cmd_jx
    else:
        dd_eff = s[PS_DDELTA_F]
        jx_eff = s[PS_DAX_F]
    fxf, fyf, fxr, fyr, _, _ = _axle_forces(s[:N_STATES], p)
    _derivatives(s[:N_STATES], dd_eff, jx_eff, p, fxf, fyf, fxr, fyr,
                 out[:N_STATES])
    if bypass:
        out[PS_DELTA_CMD] = cmd_ddelta
        out[PS_DDELTA_F] = 0.0
        out[PS_AX_CMD] = cmd_jx
        out[PS_DAX_F] = 0.0
    else:
        wn_s = act[0]
        z_s = act[1]
        wn_a = act[2]
        z_a = act[3]
        out[PS_DELTA_CMD] = cmd_ddelta
        out[PS_DDELTA_F] = wn_s * wn_s * (s[PS_DELTA_CMD] - s[SDELTA]) \
            - 2.0 * z_s * wn_s * s[PS_DDELTA_F]
        out[PS_AX_CMD] = cmd_jx
        out[PS_DAX_F] = wn_a * wn_a * (s[PS_AX_CMD] - s[SAX]) \
            - 2.0 * z_a * wn_a * s[PS_DAX_F]


@fastjit()
def _plant_tick(s, cmd_ddelta, cmd_jx, dt, p, act, bypass, delta_max, ax_max, out):
    k = np.empty(N_PLANT_STATES)
    _plant_derivatives(s, cmd_ddelta, cmd_jx, p, act, bypass, k)
    mid = np.empty(N_PLANT_STATES)
    for i in range(N_PLANT_STATES):
        mid[i] = s[i] + 0.5 * dt * k[i]
    _plant_derivatives(mid, cmd_ddelta, cmd_jx, p, act, bypass, k)
    for i in range(N_PLANT_STATES):
        out[i] = s[i] + dt * k[i]
    if out[SVX] < 0.0:
        out[SVX] = 0.0
    # hardware range clamps
    if out[SDELTA] > delta_max:
        out[SDELTA] = delta_max
    elif out[SDELTA] < -delta_max:
        out[SDELTA] = -delta_max
    if out[SAX] > ax_max:
        out[SAX] = ax_max
    elif out[SAX] < -ax_max:
        out[SAX] = -ax_max
    if out[PS_DELTA_CMD] > delta_max:
        out[PS_DELTA_CMD] = delta_max
    elif out[PS_DELTA_CMD] < -delta_max:
        out[PS_DELTA_CMD] = -delta_max
    if out[PS_AX_CMD] > ax_max:
        out[PS_AX_CMD] = ax_max
    elif out[PS_AX_CMD] < -ax_max:
        out[PS_AX_CMD] = -ax_max


@fastjit()
def _plant_advance(s0, cmd_ddelta, cmd_jx, n_ticks, dt, p, act, bypass,
                   delta_max, ax_max, trace):
    s = s0.copy()
    nxt = np.empty(N_PLANT_STATES)
    for t in range(n_ticks):
        _plant_tick(s, cmd_ddelta, cmd_jx, dt, p, act, bypass, delta_max,
                    ax_max, nxt)
        for i in range(N_PLANT_STATES):
            trace[t, i] = nxt[i]
            s[i] = nxt[i]
    return s


def plant_step(plant: PlantState, command, params: VehicleParams,
               actuators: ActuatorConfig | None = None,
               limits: Limits | None = None, dt_plant: float = 0.001,
               n_ticks: int = 1) -> PlantState:
    """Advance the plant ``n_ticks`` steps of ``dt_plant`` under one held command."""
    if dt_plant <= 0.0:
        raise ConfigurationError("dt_plant must be positive")
    actuators = actuators or ActuatorConfig()
    limits = limits or Limits()
    trace = np.empty((n_ticks, N_PLANT_STATES))
    ddelta, jx = (command.ddelta, command.jx) if hasattr(command, "ddelta") \
        else (float(command[0]), float(command[1]))
    final = _plant_advance(plant.as_array(), ddelta, jx, n_ticks, dt_plant,
                           params.as_array(), actuators.as_array(),
                           actuators.bypass, limits.delta_max, limits.ax_max,
                           trace)
    return PlantState.from_array(final)


@dataclass
class ObstacleScript:
    """Scenario obstacle: initial circle, motion schedule and reveal rule.

    ``schedule`` is a piecewise-constant velocity script: rows (t_from, vx, vy)
    sorted by time. ``reveal`` is one of 'always', 'ttc', 'occlusion'.
    """

    center: tuple[float, float]
    radius: float
    schedule: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))
    reveal: str = "ttc"
    ttc_trigger: float | None = None

    def __post_init__(self):
        sched = np.asarray(self.schedule, dtype=np.float64)
        if sched.ndim != 2 or sched.shape[1] != 3:
            raise ConfigurationError("obstacle schedule rows must be (t, vx, vy)")
        if sched.shape[0] == 0 or sched[0, 0] > 0.0:
            sched = np.concatenate([np.zeros((1, 3)), sched], axis=0)
        if np.any(np.diff(sched[:, 0]) < 0.0):
            raise ConfigurationError("obstacle schedule times must be sorted")
        self.schedule = sched
        if self.reveal not in ("always", "ttc", "occlusion"):
            raise ConfigurationError(f"unknown reveal rule {self.reveal!r}")

    def position_at(self, t: float) -> tuple[float, float]:
        x, y = self.center
        rows = self.schedule
        for i in range(rows.shape[0]):
            t0 = rows[i, 0]
            t1 = rows[i + 1, 0] if i + 1 < rows.shape[0] else math.inf
            if t <= t0:
                break
            span = min(t, t1) - t0
            x += rows[i, 1] * span
            y += rows[i, 2] * span
        return x, y

    def velocity_at(self, t: float) -> tuple[float, float]:
        rows = self.schedule
        vx, vy = 0.0, 0.0
        for i in range(rows.shape[0]):
            if t >= rows[i, 0]:
                vx, vy = rows[i, 1], rows[i, 2]
        return vx, vy


def straight_line_ttc(ego_pos, ego_vel, obs_pos, obs_vel) -> float:
    """Centre distance divided by the closing speed; inf when not closing."""
    px = obs_pos[0] - ego_pos[0]
    py = obs_pos[1] - ego_pos[1]
    d = math.hypot(px, py)
    if d < 1e-9:
        return 0.0
    vx = obs_vel[0] - ego_vel[0]
    vy = obs_vel[1] - ego_vel[1]
    closing = -(px * vx + py * vy) / d
    if closing < 1e-6:
        return math.inf
    return d / closing


def reveal_obstacles(t: float, plant: VehicleState, scripts: list[ObstacleScript],
                     revealed: list[bool], trigger_ttc: float,
                     barrier: np.ndarray | None) -> list[Obstacle]:
    """Visible obstacle set at time ``t``; updates ``revealed`` in place.

    TTC-triggered obstacles appear when the straight-line TTC at the current
    speed first drops below the trigger; occluded ones when the sightline to
    the barrier polygon clears. Revealed obstacles stay revealed.
    """
    c, s = math.cos(plant.psi), math.sin(plant.psi)
    ego_vel = (plant.vx * c - plant.vy * s, plant.vx * s + plant.vy * c)
    ego_pos = (plant.x, plant.y)
    out = []
    for i, script in enumerate(scripts):
        pos = script.position_at(t)
        vel = script.velocity_at(t)
        if not revealed[i]:
            if script.reveal == "always":
                revealed[i] = True
            elif script.reveal == "ttc":
                trig = script.ttc_trigger if script.ttc_trigger is not None \
                    else trigger_ttc
                if straight_line_ttc(ego_pos, ego_vel, pos, vel) <= trig:
                    revealed[i] = True
            else:
                if barrier is None or not segment_blocked_by_polygon(
                        ego_pos, pos, barrier):
                    revealed[i] = True
        if revealed[i]:
            out.append(Obstacle(pos, script.radius, vel, visible=True))
    return out


TERMINAL_STATUSES = ("completed", "collided", "departed_road", "stopped_safe",
                     "timeout")


@dataclass
class SimLog:
    """Full closed-loop record: plant trace, planner diagnostics and events."""

    times: np.ndarray
    states: np.ndarray            # (n, 13) plant trace
    min_obstacle_distance: np.ndarray
    plan_times: list[float]
    diagnostics: list[SolverDiagnostics]
    events: list[dict]
    status: str
    seed: int | None
    scenario_name: str
    mode_label: str

    def trace_csv_header(self) -> str:
        return "t,X,Y,psi,vx,vy,r,delta,ax,min_obstacle_distance"

    def write_csv(self, path) -> None:
        # fixed column order: t, X, Y, psi, vx, vy, r, delta, ax, min dist
        cols = np.column_stack([
            self.times, self.states[:, SX], self.states[:, SY],
            self.states[:, SPSI], self.states[:, SVX], self.states[:, SVY],
            self.states[:, SR], self.states[:, SDELTA], self.states[:, SAX],
            self.min_obstacle_distance])
        with open(path, "w") as f:
            f.write(self.trace_csv_header() + "\n")
            np.savetxt(f, cols, delimiter=",", fmt="%.9g")

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            header = {"scenario": self.scenario_name, "mode": self.mode_label,
                      "seed": self.seed, "status": self.status,
                      "events": self.events}
            f.write(json.dumps(header) + "\n")
            for t, diag in zip(self.plan_times, self.diagnostics):
                row = {"t": t}
                row.update(diag.to_dict())
                f.write(json.dumps(row) + "\n")

    def canonical_digest(self) -> str:
        """Hash of the physical record, excluding wall-clock timing fields."""
        import hashlib
        h = hashlib.sha256()
        h.update(self.times.tobytes())
        h.update(self.states.tobytes())
        h.update(self.min_obstacle_distance.tobytes())
        h.update(self.status.encode())
        h.update(json.dumps(self.events, sort_keys=True).encode())
        for diag in self.diagnostics:
            d = diag.to_dict()
            d.pop("rollout_ms", None)
            d.pop("total_ms", None)
            h.update(json.dumps(d, sort_keys=True).encode())
        return h.hexdigest()

    @property
    def max_sideslip(self) -> float:
        vx = np.maximum(self.states[:, SVX], 0.5)
        return float(np.max(np.abs(np.arctan(self.states[:, SVY] / vx))))

    @property
    def max_yaw_rate(self) -> float:
        return float(np.max(np.abs(self.states[:, SR])))


def _footprint_centers(x, y, psi, offsets):
    c, s = math.cos(psi), math.sin(psi)
    return [(x + o * c, y + o * s) for o in offsets]


def baseline_mode(cfg, weights, params, **kwargs) -> Planner:
    """Planner variant with the mode gate forced shut: prior-only sampling."""
    return Planner(cfg, weights, params, multimodal=False, **kwargs)


def run_scenario(scenario, solver_cfg=None, weights=None, multimodal: bool = True,
                 record_mean_xy: bool = True, dt_plant: float = 0.001) -> SimLog:
    """Closed-loop run: replan every solver step, integrate the plant at 1 kHz,
    terminate on collision, road departure, completion, safe stop or timeout."""
    solver_cfg = solver_cfg or scenario.solver
    weights = weights or scenario.weights
    params = scenario.vehicle
    plant_params = scenario.plant_params()
    limits = scenario.limits
    mode_label = "multimodal" if multimodal else "baseline"

    planner = Planner(solver_cfg, weights, params, limits=limits,
                      multimodal=multimodal, seed=scenario.seed,
                      record_mean_xy=record_mean_xy)

    path = scenario.path
    pos, tan, _ = path.sample(scenario.start_offset)
    psi0 = math.atan2(tan[1], tan[0])
    veh0 = VehicleState(float(pos[0]), float(pos[1]), psi0, scenario.v0,
                        0.0, 0.0, scenario.start_offset, 0.0, 0.0)
    plant = PlantState(veh0).as_array()

    n_ticks = max(1, int(round(solver_cfg.dt / dt_plant)))
    n_cycles = int(math.ceil(scenario.t_max / solver_cfg.dt))
    max_rows = n_cycles * n_ticks + 1
    times = np.empty(max_rows)
    states = np.empty((max_rows, N_PLANT_STATES))
    min_dist = np.empty(max_rows)
    times[0] = 0.0
    states[0] = plant
    scripts = scenario.obstacles
    revealed = [s.reveal == "always" for s in scripts]
    min_dist[0] = _min_obstacle_distance(plant, 0.0, scripts,
                                         scenario.footprint)
    n_rows = 1

    p_plant = plant_params.as_array()
    act = scenario.actuators.as_array()
    bypass = scenario.actuators.bypass
    s_complete = scenario.s_complete if scenario.s_complete is not None \
        else path.length - 2.0

    diagnostics: list[SolverDiagnostics] = []
    plan_times: list[float] = []
    events: list[dict] = []
    status = "timeout"
    t = 0.0
    trace_block = np.empty((n_ticks, N_PLANT_STATES))

    def _reveal_and_log(t_now: float, ego_now: VehicleState):
        before = list(revealed)
        visible_now = reveal_obstacles(t_now, ego_now, scripts, revealed,
                                       scenario.trigger_ttc, scenario.barrier)
        for i, (was, is_now) in enumerate(zip(before, revealed)):
            if is_now and not was:
                events.append({"type": "reveal", "t": t_now, "obstacle": i})
        return visible_now

    for i, flag in enumerate(revealed):
        if flag:
            events.append({"type": "reveal", "t": 0.0, "obstacle": i})

    for _ in range(n_cycles):
        ego = VehicleState.from_array(plant[:N_STATES])
        visible = _reveal_and_log(t, ego)
        snapshot = WorldSnapshot(path=path, obstacles=visible,
                                 edges=scenario.edges,
                                 footprint=scenario.footprint)
        command, diag = planner.plan_step(ego, snapshot)
        plan_times.append(t)
        diagnostics.append(diag)
        if diag.degraded:
            events.append({"type": "degraded", "t": t})

        plant = _plant_advance(plant, command.ddelta, command.jx, n_ticks,
                               dt_plant, p_plant, act, bypass,
                               limits.delta_max, limits.ax_max, trace_block)

        stop_row = n_ticks
        for i in range(n_ticks):
            t_i = t + (i + 1) * dt_plant
            row = trace_block[i]
            times[n_rows + i] = t_i
            states[n_rows + i] = row
            min_dist[n_rows + i] = _min_obstacle_distance(row, t_i, scripts,
                                                          scenario.footprint)
            # tick-resolution reveal so appearance times are exact
            if not all(revealed):
                _reveal_and_log(t_i, VehicleState.from_array(row[:N_STATES]))
            if min_dist[n_rows + i] < 0.0:
                status = "collided"
                events.append({"type": "collision", "t": t_i})
                stop_row = i + 1
                break
            departed = False
            for cx, cy in _footprint_centers(row[SX], row[SY], row[SPSI],
                                             scenario.footprint.offsets):
                for edge in scenario.edges:
                    if _signed_edge_distance(cx, cy, edge.points, 0,
                                             edge.points.shape[0],
                                             edge.side) < 0.0:
                        departed = True
            if departed:
                status = "departed_road"
                events.append({"type": "road_departure", "t": t_i})
                stop_row = i + 1
                break
        n_rows += stop_row
        t += solver_cfg.dt
        if status in ("collided", "departed_road"):
            break
        if np.all(trace_block[:, SVX] < VX_STOP):
            status = "stopped_safe"
            events.append({"type": "stopped", "t": t})
            break
        progress = path.project(plant[SX], plant[SY])
        if progress >= s_complete:
            status = "completed"
            events.append({"type": "completed", "t": t})
            break

    return SimLog(times=times[:n_rows].copy(), states=states[:n_rows].copy(),
                  min_obstacle_distance=min_dist[:n_rows].copy(),
                  plan_times=plan_times, diagnostics=diagnostics, events=events,
                  status=status, seed=scenario.seed,
                  scenario_name=scenario.name, mode_label=mode_label)


def _min_obstacle_distance(row, t, scripts, footprint) -> float:
    """Smallest surface-to-surface distance over all obstacles (hidden ones
    included: this is the ground-truth record)."""
    if not scripts:
        return math.inf
    best = math.inf
    centers = _footprint_centers(row[SX], row[SY], row[SPSI], footprint.offsets)
    for script in scripts:
        ox, oy = script.position_at(t)
        for cx, cy in centers:
            d = math.hypot(cx - ox, cy - oy) - footprint.radius - script.radius
            if d < best:
                best = d
    return best
