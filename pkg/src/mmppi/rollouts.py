"""Data-parallel rollout propagation and cost evaluation.

One compiled kernel propagates all K control sequences through the prediction
model and accumulates the stage cost, reusing each step's tyre forces for both
the integrator and the cost. Rollouts are independent, so results do not
depend on the number of worker threads.
"""

from __future__ import annotations

import math

import numpy as np
from numba import prange

from ._jit import fastjit

from .dynamics import N_STATES, SPSI, _axle_forces_trig, _step_rk2_with_forces
from .costs import _stage_cost
from .params import P_G, P_MU


@fastjit()
def _finite9(s) -> bool:
    for i in range(N_STATES):
        if not math.isfinite(s[i]):
            return False
    return True


@fastjit(parallel=True)
def _rollout_kernel(x0, controls, p, w, tan_beta_max, ps, px, py, ptx, pty, pv,
                    obs, edge_pts, edge_off, edge_sides, ego_off, ego_r, dt,
                    trajs, costs, evel_sum, st_count, tf_count, max_util, ok):
    n_rollouts = controls.shape[0]
    horizon = controls.shape[1]
    mu = p[P_MU]
    g = p[P_G]
    for k in prange(n_rollouts):
        scratch = np.empty(5)
        kbuf = np.empty(N_STATES)
        mid = np.empty(N_STATES)
        for i in range(N_STATES):
            trajs[k, 0, i] = x0[i]
        cost = 0.0
        ev = 0.0
        st = 0.0
        tf = 0.0
        util_max = 0.0
        good = True
        for t in range(horizon + 1):
            s = trajs[k, t]
            if not _finite9(s):
                good = False
                for tt in range(t, horizon + 1):
                    for i in range(N_STATES):
                        trajs[k, tt, i] = trajs[k, t - 1, i]
                break
            fxf, fyf, fxr, fyr, fzf, fzr, cd, sd = _axle_forces_trig(s, p)
            if t < horizon:
                cps, sps = _step_rk2_with_forces(
                    s, controls[k, t, 0], controls[k, t, 1], dt, p, fxf, fyf,
                    fxr, fyr, cd, sd, kbuf, mid, trajs[k, t + 1])
            else:
                cps = math.cos(s[SPSI])
                sps = math.sin(s[SPSI])
            if t >= 1:
                c, e, si, ti, ut = _stage_cost(
                    s, controls[k, t - 1, 0], controls[k, t - 1, 1], fxf, fyf,
                    fxr, fyr, fzf, fzr, cps, sps, w, tan_beta_max, mu, g, ps,
                    px, py, ptx, pty, pv, obs, t * dt, edge_pts, edge_off,
                    edge_sides, ego_off, ego_r, scratch)
                cost += c
                ev += e
                st += si
                tf += ti
                if ut > util_max:
                    util_max = ut
        if good and not math.isfinite(cost):
            good = False
        costs[k] = cost if good else np.nan
        evel_sum[k] = ev
        st_count[k] = st
        tf_count[k] = tf
        max_util[k] = util_max
        ok[k] = 1 if good else 0
