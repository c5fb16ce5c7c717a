"""Ad-hoc closed-loop experiment harness used while tuning defaults.

Not part of the package; run as: python3 scripts/explore.py <scenario> [mm|bl] [seeds...]
"""
import sys
import warnings

warnings.filterwarnings("ignore")

import numpy as np

from mmppi import run_scenario
from mmppi.dynamics import SVX, SX, SY
from mmppi.scenarios import builtin_scenario


def describe(log, verbose=True):
    print(f"[{log.mode_label} seed={log.seed}] status={log.status} "
          f"t_end={log.times[-1]:.2f} min_dist={log.min_obstacle_distance.min():.2f} "
          f"max|b|={log.max_sideslip:.3f} max|r|={log.max_yaw_rate:.3f}")
    if not verbose:
        return
    for i in range(0, len(log.times), 1000):
        print(f"  t={log.times[i]:5.2f} X={log.states[i, SX]:6.1f} "
              f"Y={log.states[i, SY]:6.2f} vx={log.states[i, SVX]:5.2f}")
    print(f"  t={log.times[-1]:5.2f} X={log.states[-1, SX]:6.1f} "
          f"Y={log.states[-1, SY]:6.2f} vx={log.states[-1, SVX]:5.2f} (final)")
    last = None
    for t, d in zip(log.plan_times, log.diagnostics):
        if d.n_modes > 1:
            m = {k: round(v, 2) for k, v in d.weight_mass.items()}
            key = tuple(sorted(m.items(), key=lambda kv: -kv[1]))[:1]
            if key != last:
                print(f"  t={t:.2f} mass={m}")
                last = key
    wall = [d.total_ms for d in log.diagnostics]
    print(f"  plan: n={len(wall)} mean={np.mean(wall):.0f}ms max={np.max(wall):.0f}ms")


if __name__ == "__main__":
    name = sys.argv[1] if len(sys.argv) > 1 else "dlc_high_ttc20"
    which = sys.argv[2] if len(sys.argv) > 2 else "mm"
    seeds = [int(s) for s in sys.argv[3:]] or [0]
    for seed in seeds:
        sc = builtin_scenario(name, seed=seed)
        log = run_scenario(sc, multimodal=(which == "mm"),
                           record_mean_xy=False)
        describe(log, verbose=(len(seeds) == 1))
