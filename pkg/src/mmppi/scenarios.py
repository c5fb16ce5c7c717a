"""Scenario configuration: YAML schema, validation and the built-in library.

A scenario file is a single YAML document with an explicit ``schema_version``.
Every cost weight, limit, solver and vehicle field is nameable in the file;
unknown keys are rejected so typos surface immediately.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .geometry import EgoFootprint, RoadEdge
from .params import (
    ConfigurationError,
    CostWeights,
    Limits,
    PerturbationScale,
    SolverConfig,
    VehicleParams,
)
from .path import PathReference, straight_path
from .world import ActuatorConfig, ObstacleScript

SCHEMA_VERSION = 1


class ScenarioError(ConfigurationError):
    """Scenario file failed validation; the message names the offending field."""


@dataclass
class ScenarioConfig:
    """Parsed scenario: geometry, plant setup, obstacle scripts and overrides."""

    name: str
    v0: float
    mu: float
    path: PathReference
    edges: list[RoadEdge]
    obstacles: list[ObstacleScript]
    trigger_ttc: float = 2.0
    barrier: np.ndarray | None = None
    footprint: EgoFootprint = field(default_factory=EgoFootprint)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    weights: CostWeights = field(default_factory=CostWeights)
    limits: Limits = field(default_factory=Limits)
    solver: SolverConfig = field(default_factory=SolverConfig)
    actuators: ActuatorConfig = field(default_factory=ActuatorConfig)
    calpha_factor: float = 0.9
    mu_factor: float = 0.95
    m_factor: float = 1.05
    seed: int = 0
    t_max: float = 25.0
    s_complete: float | None = None
    start_offset: float = 0.0

    def __post_init__(self):
        if self.trigger_ttc <= 0.0:
            raise ScenarioError("field 'trigger_ttc' must be positive")
        for fname in ("calpha_factor", "mu_factor", "m_factor"):
            v = getattr(self, fname)
            if not 0.8 <= v <= 1.2:
                raise ScenarioError(
                    f"field 'plant.{fname}' must lie in [0.8, 1.2], got {v}")

    def plant_params(self) -> VehicleParams:
        return self.vehicle.perturbed(self.calpha_factor, self.mu_factor,
                                      self.m_factor)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed)


def _take(d: dict, key: str, required: bool = False, default=None):
    if key not in d:
        if required:
            raise ScenarioError(f"missing required field '{key}'")
        return default
    return d.pop(key)


def _build_dataclass(cls, overrides: dict, context: str):
    overrides = dict(overrides or {})
    valid = {f.name for f in dataclasses.fields(cls)}
    for k in overrides:
        if k not in valid:
            raise ScenarioError(f"unknown field '{context}.{k}'")
    try:
        return cls(**overrides)
    except ConfigurationError as e:
        raise ScenarioError(f"invalid '{context}' block: {e}") from e


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    """Validate and build a ScenarioConfig from a parsed YAML document."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario document must be a mapping")
    d = dict(raw)
    version = _take(d, "schema_version", required=True)
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    name = _take(d, "name", required=True)
    mu = _take(d, "mu", required=True)
    if not isinstance(mu, (int, float)) or not 0.0 < float(mu) <= 1.2:
        raise ScenarioError(f"field 'mu' must be a number in (0, 1.2], got {mu!r}")
    if "v0_kmh" in d:
        v0 = float(_take(d, "v0_kmh")) / 3.6
    else:
        v0 = float(_take(d, "v0", required=True))
    if v0 <= 0.0:
        raise ScenarioError("field 'v0' must be positive")

    road = _take(d, "road", default={}) or {}
    lane_width = float(road.get("lane_width", 3.5))
    n_lanes = int(road.get("n_lanes", 2))
    length = float(road.get("length", 260.0))
    y_center = float(road.get("y_center", 0.0))
    half = 0.5 * lane_width * n_lanes
    left_edge = RoadEdge(np.array([[-20.0, y_center + half],
                                   [length, y_center + half]]), side=-1.0)
    right_edge = RoadEdge(np.array([[-20.0, y_center - half],
                                    [length, y_center - half]]), side=1.0)

    path_block = _take(d, "path", default={}) or {}
    path_y = float(path_block.get("y", y_center - 0.5 * lane_width))
    if "v_des_kmh" in path_block:
        v_des = float(path_block["v_des_kmh"]) / 3.6
    else:
        v_des = float(path_block.get("v_des", v0))
    path = straight_path((0.0, path_y), (length, path_y), v_des)
    s_complete = path_block.get("s_complete")
    if s_complete is not None:
        s_complete = float(s_complete)

    obstacles = []
    for i, ob in enumerate(_take(d, "obstacles", default=[]) or []):
        ob = dict(ob)
        center = ob.pop("center", None)
        if center is None or len(center) != 2:
            raise ScenarioError(f"obstacle {i}: field 'center' must be [x, y]")
        radius = ob.pop("radius", None)
        if radius is None or radius <= 0:
            raise ScenarioError(f"obstacle {i}: field 'radius' must be positive")
        reveal = ob.pop("reveal", "ttc")
        ttc_trigger = ob.pop("ttc", None)
        if "schedule" in ob:
            schedule = np.asarray(ob.pop("schedule"), dtype=np.float64)
        else:
            vel = ob.pop("velocity", [0.0, 0.0])
            schedule = np.array([[0.0, float(vel[0]), float(vel[1])]])
        if ob:
            raise ScenarioError(f"obstacle {i}: unknown field(s) {sorted(ob)}")
        try:
            obstacles.append(ObstacleScript((float(center[0]), float(center[1])),
                                            float(radius), schedule, reveal,
                                            ttc_trigger))
        except ConfigurationError as e:
            raise ScenarioError(f"obstacle {i}: {e}") from e

    barrier = _take(d, "barrier", default=None)
    if barrier is not None:
        barrier = np.asarray(barrier, dtype=np.float64)
        if barrier.ndim != 2 or barrier.shape[1] != 2 or barrier.shape[0] < 3:
            raise ScenarioError("field 'barrier' must be a polygon [[x, y], ...]")

    plant = _take(d, "plant", default={}) or {}
    act = _build_dataclass(ActuatorConfig, {
        k: plant.pop(k) for k in list(plant)
        if k in ("steer_wn", "steer_zeta", "accel_wn", "accel_zeta", "bypass")},
        "plant")
    calpha_factor = float(plant.pop("calpha_factor", 0.9))
    mu_factor = float(plant.pop("mu_factor", 0.95))
    m_factor = float(plant.pop("m_factor", 1.05))
    if plant:
        raise ScenarioError(f"unknown field(s) in 'plant': {sorted(plant)}")

    vehicle_overrides = dict(_take(d, "vehicle", default={}) or {})
    vehicle_overrides["mu"] = float(mu)
    vehicle = _build_dataclass(VehicleParams, vehicle_overrides, "vehicle")
    weights = _build_dataclass(CostWeights, _take(d, "weights", default={}),
                               "weights")
    limits = _build_dataclass(Limits, _take(d, "limits", default={}), "limits")

    solver_overrides = dict(_take(d, "solver", default={}) or {})
    if "scale" in solver_overrides:
        solver_overrides["scale"] = _build_dataclass(
            PerturbationScale, solver_overrides["scale"], "solver.scale")
    solver = _build_dataclass(SolverConfig, solver_overrides, "solver")

    fp = _take(d, "footprint", default={}) or {}
    footprint = EgoFootprint(tuple(fp.get("offsets", (-1.0, 1.0))),
                             float(fp.get("radius", 1.0)))

    cfg = ScenarioConfig(
        name=str(name), v0=v0, mu=float(mu), path=path,
        edges=[left_edge, right_edge], obstacles=obstacles,
        trigger_ttc=float(_take(d, "trigger_ttc", default=2.0)),
        barrier=barrier, footprint=footprint, vehicle=vehicle, weights=weights,
        limits=limits, solver=solver, actuators=act,
        calpha_factor=calpha_factor, mu_factor=mu_factor, m_factor=m_factor,
        seed=int(_take(d, "seed", default=0)),
        t_max=float(_take(d, "t_max", default=25.0)),
        s_complete=s_complete,
        start_offset=float(_take(d, "start_offset", default=0.0)))
    if d:
        raise ScenarioError(f"unknown top-level field(s): {sorted(d)}")
    return cfg


def load_scenario(source) -> ScenarioConfig:
    """Load a scenario from a YAML file path or a built-in scenario name."""
    p = Path(source)
    if not p.exists():
        builtin = builtin_scenario_path(str(source))
        if builtin is None:
            raise ScenarioError(
                f"scenario file '{source}' not found and no built-in scenario "
                f"has that name (available: {', '.join(BUILTIN_SCENARIOS)})")
        p = builtin
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ScenarioError(f"cannot parse scenario file {p}: {e}") from e
    return scenario_from_dict(raw)


BUILTIN_SCENARIOS = ("dlc_high_ttc20", "dlc_high_ttc17", "dlc_low_friction",
                     "occlusion")


def builtin_scenario_path(name: str) -> Path | None:
    if name not in BUILTIN_SCENARIOS:
        return None
    ref = resources.files("mmppi").joinpath(f"data/{name}.yaml")
    with resources.as_file(ref) as p:
        return Path(p)


def double_lane_change_dict(ttc: float = 2.0, mu: float = 1.0,
                            v0_kmh: float = 95.0, seed: int = 0,
                            name: str | None = None) -> dict:
    """Two staggered static obstacles forcing a double lane change."""
    if name is None:
        name = f"dlc_ttc{ttc:.1f}_mu{mu:.2f}"
    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "seed": seed,
        "mu": mu,
        "v0_kmh": v0_kmh,
        "trigger_ttc": ttc,
        "road": {"lane_width": 3.5, "n_lanes": 2, "length": 260.0},
        "path": {"y": -1.75, "s_complete": 200.0},
        "obstacles": [
            {"center": [110.0, -1.75], "radius": 1.4, "reveal": "ttc"},
            {"center": [136.0, 1.75], "radius": 1.4, "reveal": "ttc"},
        ],
        "t_max": 25.0,
    }


def occlusion_dict(seed: int = 0) -> dict:
    """A barrier hides two crossing walkers until the sightline clears."""
    return {
        "schema_version": SCHEMA_VERSION,
        "name": "occlusion",
        "seed": seed,
        "mu": 1.0,
        "v0_kmh": 50.0,
        "trigger_ttc": 2.0,
        "road": {"lane_width": 3.5, "n_lanes": 2, "length": 200.0},
        "path": {"y": -1.75, "s_complete": 150.0},
        "barrier": [[70.0, -20.0], [92.0, -20.0], [92.0, -3.7], [70.0, -3.7]],
        "obstacles": [
            {"center": [94.0, -13.6], "radius": 0.6, "velocity": [0.0, 1.5],
             "reveal": "occlusion"},
            {"center": [99.0, -16.0], "radius": 0.6, "velocity": [0.0, 1.5],
             "reveal": "occlusion"},
        ],
        "t_max": 20.0,
    }


def builtin_scenario(name: str, seed: int = 0) -> ScenarioConfig:
    """Construct a built-in scenario by name."""
    if name == "dlc_high_ttc20":
        return scenario_from_dict(double_lane_change_dict(2.0, seed=seed,
                                                          name=name))
    if name == "dlc_high_ttc17":
        return scenario_from_dict(double_lane_change_dict(1.7, seed=seed,
                                                          name=name))
    if name == "dlc_low_friction":
        d = double_lane_change_dict(4.0, mu=0.3, v0_kmh=60.0, seed=seed,
                                    name=name)
        return scenario_from_dict(d)
    if name == "occlusion":
        d = occlusion_dict(seed=seed)
        return scenario_from_dict(d)
    raise ScenarioError(f"unknown built-in scenario '{name}'")


def write_builtin_scenarios(directory) -> list[Path]:
    """Write the built-in scenario library as YAML files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    dicts = {
        "dlc_high_ttc20": double_lane_change_dict(2.0, name="dlc_high_ttc20"),
        "dlc_high_ttc17": double_lane_change_dict(1.7, name="dlc_high_ttc17"),
        "dlc_low_friction": double_lane_change_dict(4.0, mu=0.3, v0_kmh=60.0,
                                                    name="dlc_low_friction"),
        "occlusion": occlusion_dict(),
    }
    for name, doc in dicts.items():
        p = directory / f"{name}.yaml"
        p.write_text(yaml.safe_dump(doc, sort_keys=False))
        out.append(p)
    return out
