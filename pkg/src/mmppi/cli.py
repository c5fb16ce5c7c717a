"""Command-line interface: run scenarios (multi-modal vs baseline) and
benchmark plan-step latency.

Exit status encodes operational failure only; a collision is a normal exit
with the outcome reported in the summary table.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .dynamics import VehicleState
from .geometry import WorldSnapshot
from .params import ConfigurationError
from .scenarios import ScenarioConfig, load_scenario
from .solver import Planner, effective_workers
from .world import run_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2


def _parse_seeds(spec: str) -> list[int]:
    seeds: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = part.split(":", 1)
            seeds.extend(range(int(lo), int(hi)))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ConfigurationError("at least one seed is required")
    return seeds


def _apply_overrides(scenario: ScenarioConfig, args) -> ScenarioConfig:
    solver = scenario.solver
    updates = {}
    if args.lambda_ is not None:
        updates["lam"] = args.lambda_
    if args.samples is not None:
        updates["n_rollouts"] = args.samples
    if getattr(args, "horizon", None) is not None:
        updates["horizon"] = args.horizon
    if getattr(args, "workers", None) is not None:
        updates["worker_count"] = args.workers
    if updates:
        solver = solver.replace(**updates)
    return dataclasses.replace(scenario, solver=solver)


def cmd_run(args) -> int:
    out_dir = Path(os.environ.get("MMPPI_OUT", args.out))
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    modes = ["multimodal", "baseline"] if args.mode == "both" else [args.mode]
    seeds = _parse_seeds(args.seeds)

    rows = []
    for mode in modes:
        for seed in seeds:
            cfg = scenario.with_seed(seed)
            log = run_scenario(cfg, multimodal=(mode == "multimodal"))
            stem = f"{cfg.name}_{mode}_seed{seed}"
            log.write_csv(out_dir / f"{stem}.csv")
            log.write_jsonl(out_dir / f"{stem}.jsonl")
            if args.plot:
                from .plotting import plot_run
                plot_run(log, cfg, out_dir / f"{stem}.svg")
            wall = [d.total_ms for d in log.diagnostics]
            rows.append((mode, seed, log.status,
                         float(np.min(log.min_obstacle_distance)),
                         log.max_sideslip, log.max_yaw_rate,
                         float(np.mean(wall)) if wall else math.nan,
                         float(np.max(wall)) if wall else math.nan))

    print(f"scenario: {scenario.name}   (artifacts in {out_dir})")
    header = (f"{'mode':<11} {'seed':>4} {'status':<14} {'min_dist_m':>10} "
              f"{'max|beta|':>9} {'max|r|':>7} {'mean_ms':>8} {'max_ms':>7}")
    print(header)
    print("-" * len(header))
    for mode, seed, status, dmin, beta, r, mean_ms, max_ms in rows:
        print(f"{mode:<11} {seed:>4} {status:<14} {dmin:>10.2f} {beta:>9.3f} "
              f"{r:>7.3f} {mean_ms:>8.1f} {max_ms:>7.1f}")
    return EXIT_OK


def bench_snapshot(scenario: ScenarioConfig) -> tuple[VehicleState, WorldSnapshot]:
    """A representative planning situation: every obstacle visible, the first
    one inside the mode gate."""
    path = scenario.path
    obstacles = [o for o in scenario.obstacles]
    if obstacles:
        first = min(o.center[0] for o in obstacles)
        x0 = max(0.0, first - 1.5 * scenario.v0)
    else:
        x0 = 0.0
    pos, tan, _ = path.sample(path.project(x0, 0.0))
    state = VehicleState(float(pos[0]), float(pos[1]),
                         math.atan2(tan[1], tan[0]), scenario.v0, 0.0, 0.0,
                         float(path.project(x0, 0.0)), 0.0, 0.0)
    from .geometry import Obstacle
    visible = [Obstacle(s.position_at(0.0), s.radius, s.velocity_at(0.0))
               for s in scenario.obstacles]
    snap = WorldSnapshot(path=path, obstacles=visible, edges=scenario.edges,
                         footprint=scenario.footprint)
    return state, snap


def _bench_once(scenario: ScenarioConfig, steps: int, workers: int | None,
                seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    cfg = scenario.solver.replace(worker_count=workers)
    planner = Planner(cfg, scenario.weights, scenario.vehicle,
                      limits=scenario.limits, seed=seed, record_mean_xy=False)
    state, snap = bench_snapshot(scenario)
    planner.plan_step(state, snap)  # warm-up: JIT compile outside timing
    planner.reset()
    total = np.empty(steps)
    rollout = np.empty(steps)
    for i in range(steps):
        t0 = time.perf_counter()
        _, diag = planner.plan_step(state, snap)
        total[i] = (time.perf_counter() - t0) * 1e3
        rollout[i] = diag.rollout_ms
    return total, rollout


def cmd_bench(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    workers = args.workers if args.workers is not None else None
    n_avail = effective_workers(None)
    print(f"bench: K={scenario.solver.n_rollouts} T={scenario.solver.horizon} "
          f"steps={args.steps} available_threads={n_avail}")

    total, rollout = _bench_once(scenario, args.steps, workers)
    print(f"plan step   mean {np.mean(total):7.2f} ms   "
          f"p95 {np.percentile(total, 95):7.2f} ms   max {np.max(total):7.2f} ms")
    print(f"rollouts    mean {np.mean(rollout):7.2f} ms   "
          f"p95 {np.percentile(rollout, 95):7.2f} ms   max {np.max(rollout):7.2f} ms")

    if args.scaling:
        counts = sorted({1, n_avail if workers is None else workers})
        base = None
        for n in counts:
            _, r = _bench_once(scenario, args.steps, n)
            mean_r = float(np.mean(r))
            if base is None:
                base = mean_r
            print(f"workers={n:<3d} rollout mean {mean_r:7.2f} ms   "
                  f"speedup x{base / mean_r:4.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmppi",
        description="Multi-modal MPPI collision-avoidance planner and simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario closed-loop")
    run.add_argument("--scenario", required=True,
                     help="scenario YAML file or built-in name")
    run.add_argument("--mode", choices=["multimodal", "baseline", "both"],
                     default="multimodal")
    run.add_argument("--seeds", default="0",
                     help="comma list and/or lo:hi ranges, e.g. '0,5,7' or '0:20'")
    run.add_argument("--out", default="runs", help="output directory "
                     "(env MMPPI_OUT overrides)")
    run.add_argument("--plot", action="store_true", help="write an SVG per run")
    run.add_argument("--lambda", dest="lambda_", type=float, default=None,
                     help="softmax temperature override")
    run.add_argument("--samples", type=int, default=None,
                     help="rollout count override (K)")
    run.add_argument("--horizon", type=int, default=None,
                     help="horizon override (T)")
    run.add_argument("--workers", type=int, default=None)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="measure plan-step latency")
    bench.add_argument("--scenario", required=True)
    bench.add_argument("--steps", type=int, default=50)
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--scaling", action="store_true",
                       help="also report 1..N worker scaling")
    bench.add_argument("--lambda", dest="lambda_", type=float, default=None)
    bench.add_argument("--samples", type=int, default=None)
    bench.add_argument("--horizon", type=int, default=None)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
