"""MPPI receding-horizon loop: sample, propagate, weight and update.

Each plan step shifts the previous solution, builds the active sampling modes,
draws one batch of Sobol-Gaussian perturbations, propagates all rollouts in
parallel, and blends them with a single exponentiated-cost softmax over the
whole batch. Reductions run in fixed (mode, rollout) order so results are
independent of the worker count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .costs import pack_edges, pack_obstacles
from .dynamics import VehicleState, ControlRates
from .geometry import WorldSnapshot
from .modes import (
    MAX_ACCEL,
    MAX_BRAKE,
    Mode,
    ModeConfig,
    TcpaReport,
    _longitudinal_mean,
    allocate_samples,
    build_mode_means,
    shift_prior,
    tcpa_report,
)
from .params import CostWeights, Limits, SolverConfig, VehicleParams
from .rollouts import _rollout_kernel
from .sampling import SobolStream, gaussian_perturbations


@dataclass
class RolloutBatch:
    """K sampled control sequences with their trajectories, costs and tags."""

    controls: np.ndarray          # (K, T, 2)
    trajectories: np.ndarray      # (K, T+1, 9)
    costs: np.ndarray             # (K,)
    mode_of: np.ndarray           # (K,) int index into mode_kinds
    mode_kinds: list[str]
    evel_sum: np.ndarray
    st_count: np.ndarray
    tf_count: np.ndarray
    max_util: np.ndarray
    ok: np.ndarray
    n_nonfinite: int = 0


@dataclass
class SolverDiagnostics:
    """Per-step solver telemetry for the run log."""

    rho: float
    eta: float
    ess: float
    n_modes: int
    min_tcpa: float
    weight_mass: dict
    mode_best_cost: dict
    mode_best_custom_cost: dict
    max_circle_util: float
    n_nonfinite: int
    degraded: bool
    rollout_ms: float
    total_ms: float
    command: tuple
    mean_xy: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "rho": self.rho, "eta": self.eta, "ess": self.ess,
            "n_modes": self.n_modes, "min_tcpa": self.min_tcpa,
            "weight_mass": self.weight_mass,
            "mode_best_cost": self.mode_best_cost,
            "mode_best_custom_cost": self.mode_best_custom_cost,
            "max_circle_util": self.max_circle_util,
            "n_nonfinite": self.n_nonfinite, "degraded": self.degraded,
            "rollout_ms": self.rollout_ms, "total_ms": self.total_ms,
            "command": list(self.command),
        }
        if self.mean_xy:
            d["mean_xy"] = {k: v.tolist() for k, v in self.mean_xy.items()}
        return d


def effective_workers(worker_count: int | None) -> int:
    limit = numba.config.NUMBA_NUM_THREADS
    if worker_count is None:
        return limit
    return max(1, min(worker_count, limit))


def propagate_rollouts(x_init: VehicleState, controls: np.ndarray,
                       params: VehicleParams, world: WorldSnapshot,
                       weights: CostWeights, dt: float,
                       worker_count: int | None = None) -> RolloutBatch:
    """Propagate a (K, T, 2) batch and accumulate nominal stage costs.

    Non-finite rollouts are flagged and their cost set to 10x the largest
    finite cost of the batch.
    """
    controls = np.ascontiguousarray(controls, dtype=np.float64)
    n_rollouts, horizon = controls.shape[0], controls.shape[1]
    path = world.path
    obs = pack_obstacles(world.obstacles)
    edge_pts, edge_off, edge_sides = pack_edges(world.edges)
    trajs = np.empty((n_rollouts, horizon + 1, 9))
    costs = np.empty(n_rollouts)
    evel = np.empty(n_rollouts)
    stc = np.empty(n_rollouts)
    tfc = np.empty(n_rollouts)
    util = np.empty(n_rollouts)
    ok = np.empty(n_rollouts, dtype=np.uint8)

    numba.set_num_threads(effective_workers(worker_count))
    _rollout_kernel(
        x_init.as_array(), controls, params.as_array(), weights.as_array(),
        math.tan(weights.beta_max), path.s, path.points[:, 0],
        path.points[:, 1], path.tangents[:, 0], path.tangents[:, 1],
        path.v_des, obs, edge_pts, edge_off, edge_sides,
        np.asarray(world.footprint.offsets, dtype=np.float64),
        world.footprint.radius, dt, trajs, costs, evel, stc, tfc, util, ok)

    bad = ok == 0
    n_bad = int(bad.sum())
    if n_bad and n_bad < n_rollouts:
        finite_max = float(np.max(costs[~bad]))
        costs[bad] = 10.0 * max(finite_max, 1.0)
    return RolloutBatch(controls, trajs, costs, np.zeros(n_rollouts, dtype=np.int64),
                        [], evel, stc, tfc, util, ok, n_bad)


def compute_weights(costs: np.ndarray, lam: float) -> tuple[np.ndarray, float, float]:
    """Exponentiated-cost weights: w_k = exp(-(S_k - rho)/lam) / eta."""
    costs = np.asarray(costs, dtype=np.float64)
    rho = float(np.min(costs))
    e = np.exp(-(costs - rho) / lam)
    eta = float(np.sum(e))
    return e / eta, rho, eta


def weighted_update(controls: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weight-averaged control sequence; plain C-order reduction over k."""
    return np.einsum("k,ktc->tc", weights, controls, optimize=False)


class Planner:
    """Stateful receding-horizon planner owning the prior and the Sobol stream."""

    def __init__(self, cfg: SolverConfig, weights: CostWeights,
                 params: VehicleParams, limits: Limits | None = None,
                 mode_cfg: ModeConfig | None = None, multimodal: bool = True,
                 seed: int | None = None, record_mean_xy: bool = True):
        self.cfg = cfg
        self.weights = weights
        self.params = params
        self.limits = limits or Limits()
        self.mode_cfg = mode_cfg or ModeConfig()
        self.multimodal = multimodal
        self.record_mean_xy = record_mean_xy
        # index 0 (the all-zeros point) maps to -inf under the inverse CDF
        self.stream = SobolStream(2 * cfg.horizon, start_index=1, shift_seed=seed)
        self.prior = np.zeros((cfg.horizon, 2))

    def reset(self, prior: np.ndarray | None = None) -> None:
        self.prior = np.zeros((self.cfg.horizon, 2)) if prior is None else prior.copy()

    def plan_step(self, state: VehicleState,
                  world: WorldSnapshot) -> tuple[ControlRates, SolverDiagnostics]:
        command, new_prior, diag = plan_step(
            state, world, self.prior, self.cfg, self.weights, self.params,
            self.limits, self.mode_cfg, self.stream, self.multimodal,
            self.record_mean_xy)
        self.prior = new_prior
        return command, diag


def plan_step(state: VehicleState, world: WorldSnapshot, prior: np.ndarray,
              cfg: SolverConfig, weights: CostWeights, params: VehicleParams,
              limits: Limits, mode_cfg: ModeConfig, stream: SobolStream,
              multimodal: bool = True, record_mean_xy: bool = True,
              ) -> tuple[ControlRates, np.ndarray, SolverDiagnostics]:
    """One MPPI planning cycle; returns (command, new prior, diagnostics)."""
    t_start = time.perf_counter()
    prior_shifted = shift_prior(prior)
    report = tcpa_report(state, world.obstacles)
    modes = build_mode_means(prior_shifted, state, world, params, limits,
                             weights, cfg.dt, report, mode_cfg, multimodal)
    allocate_samples(cfg.n_rollouts, modes)

    # one full batch of stream points per step, independent of the active modes
    points = stream.next_points(cfg.n_rollouts)
    perturbations = gaussian_perturbations(points, cfg.scale)

    controls = np.empty((cfg.n_rollouts, cfg.horizon, 2))
    mode_of = np.empty(cfg.n_rollouts, dtype=np.int64)
    start = 0
    slices = []
    for i, mode in enumerate(modes):
        stop = start + mode.sample_count
        controls[start:stop] = mode.mean[None, :, :] + perturbations[start:stop]
        controls[start] = mode.mean
        mode_of[start:stop] = i
        slices.append((mode, start, stop))
        start = stop
    np.clip(controls[:, :, 0], -limits.ddelta_max, limits.ddelta_max,
            out=controls[:, :, 0])
    np.clip(controls[:, :, 1], -limits.jx_max, limits.jx_max,
            out=controls[:, :, 1])

    t_roll = time.perf_counter()
    batch = propagate_rollouts(state, controls, params, world, weights, cfg.dt,
                               cfg.worker_count)
    rollout_ms = (time.perf_counter() - t_roll) * 1e3
    batch.mode_of = mode_of
    batch.mode_kinds = [m.kind for m in modes]

    degraded = batch.n_nonfinite >= cfg.n_rollouts
    if degraded:
        # every rollout blew up: fall back to the maximum-braking mean
        brake = _longitudinal_mean(prior_shifted, state, world.path, params,
                                   limits, mode_cfg, cfg.dt,
                                   -weights.s_c * params.mu * params.g)
        command = ControlRates(float(brake[0, 0]), float(brake[0, 1]))
        diag = SolverDiagnostics(
            rho=math.nan, eta=math.nan, ess=0.0, n_modes=len(modes),
            min_tcpa=report.min_tcpa, weight_mass={}, mode_best_cost={},
            mode_best_custom_cost={}, max_circle_util=float(np.max(batch.max_util)),
            n_nonfinite=batch.n_nonfinite, degraded=True, rollout_ms=rollout_ms,
            total_ms=(time.perf_counter() - t_start) * 1e3,
            command=(command.ddelta, command.jx))
        return command, brake, diag

    w, rho, eta = compute_weights(batch.costs, cfg.lam)
    new_prior = weighted_update(batch.controls, w)
    command = ControlRates(float(new_prior[0, 0]), float(new_prior[0, 1]))

    weight_mass = {}
    best_cost = {}
    best_custom = {}
    mean_xy = {}
    for mode, lo, hi in slices:
        weight_mass[mode.kind] = float(np.sum(w[lo:hi]))
        costs = batch.costs[lo:hi]
        custom = costs.copy()
        if mode.kind in (MAX_BRAKE, MAX_ACCEL):
            custom = custom - weights.q_evel * batch.evel_sum[lo:hi]
        if mode.kind == MAX_BRAKE:
            custom = custom - weights.q_st * batch.st_count[lo:hi]
        best_cost[mode.kind] = float(np.min(costs))
        best_custom[mode.kind] = float(np.min(custom))
        if record_mean_xy:
            mean_xy[mode.kind] = batch.trajectories[lo, :, 0:2].copy()

    diag = SolverDiagnostics(
        rho=rho, eta=eta, ess=float(1.0 / np.sum(w * w)), n_modes=len(modes),
        min_tcpa=report.min_tcpa, weight_mass=weight_mass,
        mode_best_cost=best_cost, mode_best_custom_cost=best_custom,
        max_circle_util=float(np.max(batch.max_util[batch.ok == 1], initial=0.0)),
        n_nonfinite=batch.n_nonfinite, degraded=False, rollout_ms=rollout_ms,
        total_ms=(time.perf_counter() - t_start) * 1e3,
        command=(command.ddelta, command.jx), mean_xy=mean_xy)
    return command, new_prior, diag
