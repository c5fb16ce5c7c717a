"""Parameter containers shared across the planner, cost function and simulator.

Numba kernels cannot consume dataclasses, so every container that crosses into
compiled code exposes ``as_array()`` with a fixed field layout documented by the
index constants below.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np


class ConfigurationError(ValueError):
    """Raised when a parameter block violates its physical constraints."""


# --- vehicle parameter array layout -----------------------------------------
P_M, P_IZZ, P_LF, P_LR, P_CAF, P_CAR, P_MU, P_DRAG, P_G = range(9)
N_VEHICLE_PARAMS = 9


@dataclass(frozen=True)
class VehicleParams:
    """Single-track model parameters.

    Units: mass kg, yaw inertia kg m^2, axle distances m, cornering stiffness
    N/rad (per axle), friction coefficient dimensionless, quadratic drag gain
    N s^2/m^2.
    """

    m: float = 1500.0
    izz: float = 2250.0
    lf: float = 1.2
    lr: float = 1.6
    calpha_f: float = 1.0e5
    calpha_r: float = 1.2e5
    mu: float = 1.0
    drag_coeff: float = 0.4
    g: float = 9.81

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) <= 0.0:
                raise ConfigurationError(f"vehicle parameter {f.name!r} must be positive")
        if self.lf + self.lr <= 0.0:
            raise ConfigurationError("wheelbase lf + lr must be positive")
        if self.mu > 1.2:
            raise ConfigurationError("friction coefficient mu must lie in (0, 1.2]")

    @property
    def wheelbase(self) -> float:
        return self.lf + self.lr

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.m, self.izz, self.lf, self.lr, self.calpha_f, self.calpha_r,
             self.mu, self.drag_coeff, self.g],
            dtype=np.float64,
        )

    def perturbed(self, calpha_factor: float = 1.0, mu_factor: float = 1.0,
                  m_factor: float = 1.0) -> "VehicleParams":
        """Plant-side copy with multiplicative parameter perturbations."""
        return VehicleParams(
            m=self.m * m_factor,
            izz=self.izz * m_factor,
            lf=self.lf,
            lr=self.lr,
            calpha_f=self.calpha_f * calpha_factor,
            calpha_r=self.calpha_r * calpha_factor,
            mu=self.mu * mu_factor,
            drag_coeff=self.drag_coeff,
            g=self.g,
        )


@dataclass(frozen=True)
class Limits:
    """Actuator bounds shared by the sampler, the mode builder and the plant.

    delta_max / ax_max are hard actuator ranges; ddelta_max / jx_max bound the
    input rates; engine_accel_max caps sustained positive acceleration.
    """

    delta_max: float = 0.6
    ax_max: float = 10.0
    ddelta_max: float = 0.85
    jx_max: float = 25.0
    engine_accel_max: float = 4.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) <= 0.0:
                raise ConfigurationError(f"limit {f.name!r} must be positive")


# --- cost weight array layout -------------------------------------------------
(W_ECON, W_ELAG, W_EVEL, W_DDELTA, W_JX, W_DELTA, W_AX, W_BETA, W_R, W_TF,
 W_ST, W_V2O, W_V2E, W_DELTA_MAX, W_AX_MAX, W_BETA_MAX, W_R_MAX, W_R_MAX_COEFF,
 W_SC, W_VX_MIN, W_DSFT_O, W_DSFT_E) = range(22)
N_COST_PARAMS = 22


@dataclass(frozen=True)
class CostWeights:
    """Stage-cost weights and soft-constraint thresholds.

    ``r_max`` = 0 selects the speed-dependent yaw-rate bound
    ``r_max_coeff * mu * g / vx``; a positive value fixes the bound instead.
    """

    q_econ: float = 8.0
    q_elag: float = 20.0
    q_evel: float = 4.0
    q_ddelta: float = 1.0
    q_jx: float = 0.1
    q_delta: float = 1.0e4
    q_ax: float = 1.0e4
    q_beta: float = 1.0e4
    q_r: float = 1.0e4
    q_tf: float = 1.0e4
    q_st: float = 500.0
    q_v2o: float = 3000.0
    q_v2e: float = 200.0
    delta_max: float = 0.6
    ax_max: float = 10.0
    beta_max: float = 0.17
    r_max: float = 0.0
    r_max_coeff: float = 0.85
    s_c: float = 0.95
    vx_min: float = 1.0
    d_sft_o: float = 1.0
    d_sft_e: float = 0.3

    def __post_init__(self) -> None:
        for name in ("q_econ", "q_elag", "q_evel", "q_ddelta", "q_jx", "q_delta",
                     "q_ax", "q_beta", "q_r", "q_tf", "q_st", "q_v2o", "q_v2e"):
            if getattr(self, name) < 0.0:
                raise ConfigurationError(f"cost weight {name!r} must be non-negative")
        if not 0.0 < self.s_c < 1.0:
            raise ConfigurationError("safety factor s_c must lie in (0, 1)")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.q_econ, self.q_elag, self.q_evel, self.q_ddelta, self.q_jx,
             self.q_delta, self.q_ax, self.q_beta, self.q_r, self.q_tf,
             self.q_st, self.q_v2o, self.q_v2e, self.delta_max, self.ax_max,
             self.beta_max, self.r_max, self.r_max_coeff, self.s_c, self.vx_min,
             self.d_sft_o, self.d_sft_e],
            dtype=np.float64,
        )

    def replace(self, **kwargs) -> "CostWeights":
        from dataclasses import replace as _replace
        return _replace(self, **kwargs)


@dataclass(frozen=True)
class PerturbationScale:
    """Standard deviations of the sampled input-rate perturbations."""

    sigma_ddelta: float = 0.25
    sigma_jx: float = 4.0

    def __post_init__(self) -> None:
        if self.sigma_ddelta <= 0.0 or self.sigma_jx <= 0.0:
            raise ConfigurationError("perturbation scales must be strictly positive")


@dataclass(frozen=True)
class SolverConfig:
    """MPPI solver configuration: K rollouts over a T-step horizon at dt."""

    n_rollouts: int = 2600
    horizon: int = 50
    dt: float = 0.05
    lam: float = 300.0
    scale: PerturbationScale = field(default_factory=PerturbationScale)
    worker_count: int | None = None

    def __post_init__(self) -> None:
        if self.n_rollouts < 1:
            raise ConfigurationError("n_rollouts must be >= 1")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")
        if self.lam <= 0.0:
            raise ConfigurationError("temperature lam must be positive")

    def replace(self, **kwargs) -> "SolverConfig":
        from dataclasses import replace as _replace
        return _replace(self, **kwargs)
