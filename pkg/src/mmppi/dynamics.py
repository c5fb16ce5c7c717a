"""Nonlinear single-track prediction model with Fiala tyres and RK2 stepping.

State layout (index constants below): world position X, Y and heading psi,
body-frame velocities vx, vy, yaw rate r, travelled distance theta, and the
two integrated inputs: road-wheel angle delta and longitudinal acceleration ax.
Inputs are the steering-angle rate ddelta and the longitudinal jerk jx.

All core routines are scalar ``@njit`` functions operating on a 9-element
state array and a parameter array (see :mod:`mmppi.params`), so the same
transcription serves the public API, the simulator plant and the parallel
rollout kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from ._jit import fastjit

from .params import (
    ConfigurationError,
    P_CAF,
    P_CAR,
    P_DRAG,
    P_G,
    P_IZZ,
    P_LF,
    P_LR,
    P_M,
    P_MU,
    VehicleParams,
)
from .tyre import _available_lateral_friction, _fiala_from_tan

# state vector layout
SX, SY, SPSI, SVX, SVY, SR, STHETA, SDELTA, SAX = range(9)
N_STATES = 9

# Slip angles divide by vx; clamp the denominator at VX_EPS. Below VX_STOP the
# plant is treated as stopped.
VX_EPS = 0.5
VX_STOP = 0.1


@dataclass(frozen=True)
class VehicleState:
    """Planner state: pose, body velocities, progress and integrated inputs."""

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    r: float = 0.0
    theta: float = 0.0
    delta: float = 0.0
    ax: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.psi, self.vx, self.vy, self.r, self.theta,
             self.delta, self.ax],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, s: np.ndarray) -> "VehicleState":
        return cls(*(float(v) for v in s[:N_STATES]))


@dataclass(frozen=True)
class ControlRates:
    """Input rates: steering-angle rate rad/s and longitudinal jerk m/s^3."""

    ddelta: float = 0.0
    jx: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.ddelta, self.jx], dtype=np.float64)


@dataclass(frozen=True)
class TyreForces:
    """Axle forces and normal loads, N."""

    fxf: float
    fyf: float
    fxr: float
    fyr: float
    fzf: float
    fzr: float


@fastjit()
def _normal_loads(p):
    l = p[P_LF] + p[P_LR]
    fzf = p[P_M] * p[P_G] * p[P_LR] / l
    fzr = p[P_M] * p[P_G] * p[P_LF] / l
    return fzf, fzr


@fastjit()
def _slip_angles(s, p):
    vx = max(s[SVX], VX_EPS)
    alpha_f = math.atan((s[SVY] + p[P_LF] * s[SR]) / vx) - s[SDELTA]
    alpha_r = math.atan((s[SVY] - p[P_LR] * s[SR]) / vx)
    return alpha_f, alpha_r


@fastjit()
def _axle_forces_trig(s, p):
    """Tyre forces consistent with the state: static load split, longitudinal
    allocation proportional to normal load with a hard friction-circle clamp,
    Fiala lateral force on the remaining friction. Also returns cos/sin of the
    steering angle so callers can reuse them."""
    fzf, fzr = _normal_loads(p)
    mu = p[P_MU]

    fx_total = p[P_M] * s[SAX]
    l = p[P_LF] + p[P_LR]
    fxf = min(max(fx_total * p[P_LR] / l, -mu * fzf), mu * fzf)
    fxr = min(max(fx_total * p[P_LF] / l, -mu * fzr), mu * fzr)

    vx = max(s[SVX], VX_EPS)
    wf = (s[SVY] + p[P_LF] * s[SR]) / vx
    wr = (s[SVY] - p[P_LR] * s[SR]) / vx

    cd = math.cos(s[SDELTA])
    sd = math.sin(s[SDELTA])
    td = sd / cd

    # tan(alpha_f) = tan(atan(wf) - delta) via the subtraction identity; exact
    # for |alpha_f| < pi/2. Beyond (denominator <= 0) the axle fully slides and
    # only sign(alpha_f) = sign(wf) matters.
    den = 1.0 + wf * td
    mu_yf = _available_lateral_friction(fxf, fzf, mu)
    if den > 0.0:
        fyf = _fiala_from_tan((wf - td) / den, fzf, mu_yf, p[P_CAF])
    elif wf > 0.0:
        fyf = -mu_yf * fzf
    else:
        fyf = mu_yf * fzf

    mu_yr = _available_lateral_friction(fxr, fzr, mu)
    fyr = _fiala_from_tan(wr, fzr, mu_yr, p[P_CAR])
    return fxf, fyf, fxr, fyr, fzf, fzr, cd, sd


@fastjit()
def _axle_forces(s, p):
    fxf, fyf, fxr, fyr, fzf, fzr, _, _ = _axle_forces_trig(s, p)
    return fxf, fyf, fxr, fyr, fzf, fzr


@fastjit()
def _derivatives_trig(s, ddelta, jx, p, fxf, fyf, fxr, fyr, cd, sd, out):
    """State derivative given forces and steering trig; returns cos/sin of the
    heading for reuse by the stage cost."""
    cps = math.cos(s[SPSI])
    sps = math.sin(s[SPSI])
    f_drag = p[P_DRAG] * s[SVX] * s[SVX]

    out[SX] = s[SVX] * cps - s[SVY] * sps
    out[SY] = s[SVX] * sps + s[SVY] * cps
    out[SPSI] = s[SR]
    out[SVX] = (-fyf * sd + fxf * cd + fxr - f_drag) / p[P_M] + s[SR] * s[SVY]
    out[SVY] = (fyf * cd + fxf * sd + fyr) / p[P_M] - s[SR] * s[SVX]
    out[SR] = (p[P_LF] * fyf * cd + p[P_LF] * fxf * sd - p[P_LR] * fyr) / p[P_IZZ]
    out[STHETA] = math.sqrt(s[SVX] * s[SVX] + s[SVY] * s[SVY])
    out[SDELTA] = ddelta
    out[SAX] = jx
    return cps, sps


@fastjit()
def _derivatives(s, ddelta, jx, p, fxf, fyf, fxr, fyr, out):
    cd = math.cos(s[SDELTA])
    sd = math.sin(s[SDELTA])
    _derivatives_trig(s, ddelta, jx, p, fxf, fyf, fxr, fyr, cd, sd, out)


@fastjit()
def _derivatives_at(s, ddelta, jx, p, out):
    fxf, fyf, fxr, fyr, _, _, cd, sd = _axle_forces_trig(s, p)
    _derivatives_trig(s, ddelta, jx, p, fxf, fyf, fxr, fyr, cd, sd, out)


@fastjit()
def _step_rk2_with_forces(s, ddelta, jx, dt, p, fxf, fyf, fxr, fyr, cd, sd,
                          k, mid, out):
    """Explicit-midpoint update given the tyre forces and steering trig at
    ``s``; forces are re-evaluated at the midpoint. vx is floored at zero so
    braking cannot drive the model backwards. Returns cos/sin of the heading
    at ``s`` for reuse."""
    cps, sps = _derivatives_trig(s, ddelta, jx, p, fxf, fyf, fxr, fyr, cd, sd, k)
    for i in range(N_STATES):
        mid[i] = s[i] + 0.5 * dt * k[i]
    _derivatives_at(mid, ddelta, jx, p, k)
    for i in range(N_STATES):
        out[i] = s[i] + dt * k[i]
    if out[SVX] < 0.0:
        out[SVX] = 0.0
    return cps, sps


@fastjit()
def _step_rk2(s, ddelta, jx, dt, p, out):
    fxf, fyf, fxr, fyr, _, _, cd, sd = _axle_forces_trig(s, p)
    k = np.empty(N_STATES)
    mid = np.empty(N_STATES)
    _step_rk2_with_forces(s, ddelta, jx, dt, p, fxf, fyf, fxr, fyr, cd, sd,
                          k, mid, out)


def axle_normal_loads(params: VehicleParams) -> tuple[float, float]:
    """Static front/rear axle loads (N); their sum equals m*g."""
    if params.lf + params.lr <= 0.0:
        raise ConfigurationError("wheelbase lf + lr must be positive")
    fzf, fzr = _normal_loads(params.as_array())
    return float(fzf), float(fzr)


def slip_angles(state: VehicleState, params: VehicleParams) -> tuple[float, float]:
    """Front and rear axle slip angles (rad); vx is clamped at VX_EPS."""
    af, ar = _slip_angles(state.as_array(), params.as_array())
    return float(af), float(ar)


def axle_forces(state: VehicleState, params: VehicleParams) -> TyreForces:
    """Tyre forces and normal loads consistent with ``state``."""
    fxf, fyf, fxr, fyr, fzf, fzr = _axle_forces(state.as_array(), params.as_array())
    return TyreForces(float(fxf), float(fyf), float(fxr), float(fyr),
                      float(fzf), float(fzr))


def derivatives(state: VehicleState, u: ControlRates, params: VehicleParams,
                forces: TyreForces) -> np.ndarray:
    """Time derivative of the 9-element state under the given forces."""
    out = np.empty(N_STATES)
    _derivatives(state.as_array(), u.ddelta, u.jx, params.as_array(),
                 forces.fxf, forces.fyf, forces.fxr, forces.fyr, out)
    return out


def step_rk2(state: VehicleState, u: ControlRates, dt: float,
             params: VehicleParams) -> VehicleState:
    """One explicit-midpoint step of length ``dt``."""
    if dt <= 0.0:
        raise ConfigurationError("dt must be positive")
    out = np.empty(N_STATES)
    _step_rk2(state.as_array(), u.ddelta, u.jx, dt, params.as_array(), out)
    return VehicleState.from_array(out)


def propagate(state: VehicleState, controls: np.ndarray, dt: float,
              params: VehicleParams) -> np.ndarray:
    """Propagate a (T, 2) control-rate sequence; returns (T+1, 9) states."""
    controls = np.asarray(controls, dtype=np.float64)
    T = controls.shape[0]
    p = params.as_array()
    traj = np.empty((T + 1, N_STATES))
    traj[0] = state.as_array()
    for t in range(T):
        _step_rk2(traj[t], controls[t, 0], controls[t, 1], dt, p, traj[t + 1])
    return traj
