"""Fiala lateral tyre force with friction-circle coupling to longitudinal force.

The lateral force follows the classic cubic-saturation law; longitudinal demand
shrinks the available lateral friction through the friction circle, so
sqrt(Fx^2 + Fy^2) <= mu*Fz holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._jit import fastjit

from .params import ConfigurationError


@dataclass(frozen=True)
class TyreConfig:
    """Per-axle cornering stiffness (N/rad) and friction coefficient."""

    calpha: float
    mu: float

    def __post_init__(self) -> None:
        if self.calpha <= 0.0:
            raise ConfigurationError("cornering stiffness calpha must be positive")
        if self.mu <= 0.0:
            raise ConfigurationError("friction coefficient mu must be positive")


@fastjit()
def _available_lateral_friction(fx: float, fz: float, mu: float) -> float:
    cap = mu * fz
    return math.sqrt(max(0.0, cap * cap - fx * fx)) / fz


def available_lateral_friction(fx: float, fz: float, mu: float) -> float:
    """Lateral friction coefficient left after longitudinal demand ``fx``.

    Expects |fx| <= mu*fz (callers clamp first); returns
    sqrt((mu*fz)^2 - fx^2) / fz.
    """
    if fz <= 0.0:
        raise ConfigurationError("normal load fz must be positive")
    return float(_available_lateral_friction(fx, fz, mu))


@fastjit()
def _fiala_from_tan(tan_alpha: float, fz: float, mu_y: float, calpha: float) -> float:
    # Cubic build-up below the saturation slip angle, constant -mu_y*Fz beyond.
    fy_max = mu_y * fz
    if fy_max <= 0.0:
        return 0.0
    t_sl = 3.0 * fy_max / calpha
    t = tan_alpha
    if abs(t) < t_sl:
        return (-calpha * t
                + calpha * calpha / (3.0 * fy_max) * abs(t) * t
                - calpha ** 3 / (27.0 * fy_max * fy_max) * t ** 3)
    if t > 0.0:
        return -fy_max
    return fy_max


@fastjit()
def _fiala_lateral_force(alpha: float, fz: float, fx: float, calpha: float,
                         mu: float) -> float:
    mu_y = _available_lateral_friction(fx, fz, mu)
    return _fiala_from_tan(math.tan(alpha), fz, mu_y, calpha)


def fiala_lateral_force(alpha: float, fz: float, fx: float, cfg: TyreConfig) -> float:
    """Axle lateral force (N) at slip angle ``alpha`` under longitudinal force ``fx``."""
    if fz <= 0.0:
        raise ConfigurationError("normal load fz must be positive")
    return float(_fiala_lateral_force(alpha, fz, fx, cfg.calpha, cfg.mu))


def saturation_slip_angle(fz: float, fx: float, cfg: TyreConfig) -> float:
    """Slip angle beyond which the axle is fully sliding."""
    mu_y = available_lateral_friction(fx, fz, cfg.mu)
    return math.atan(3.0 * mu_y * fz / cfg.calpha)
