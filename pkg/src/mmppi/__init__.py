"""Multi-modal MPPI motion planner with a closed-loop scenario simulator.

The planner samples control rollouts with a Sobol stream around the shifted
prior plus analytical braking / acceleration / evasive candidates, propagates
them through a nonlinear single-track model with Fiala tyres, and blends them
with exponentiated-cost weights.
"""

from .dynamics import (
    ControlRates,
    TyreForces,
    VehicleState,
    axle_forces,
    axle_normal_loads,
    derivatives,
    propagate,
    slip_angles,
    step_rk2,
)
from .geometry import EgoFootprint, Obstacle, RoadEdge, WorldSnapshot
from .costs import (
    collision_check,
    contouring_lag_errors,
    logcosh_vel_error,
    sideslip,
    stage_cost,
    v2e_error,
    v2o_error,
)
from .modes import (
    EVASIVE,
    MAX_ACCEL,
    MAX_BRAKE,
    PRIOR,
    Mode,
    ModeConfig,
    TcpaReport,
    allocate_samples,
    build_mode_means,
    shift_prior,
    tcpa,
    tcpa_report,
)
from .params import (
    ConfigurationError,
    CostWeights,
    Limits,
    PerturbationScale,
    SolverConfig,
    VehicleParams,
)
from .path import PathReference, arc_path, straight_path
from .sampling import SobolStream, gaussian_perturbations, sobol_points
from .scenarios import (
    ScenarioConfig,
    ScenarioError,
    builtin_scenario,
    load_scenario,
    scenario_from_dict,
)
from .solver import (
    Planner,
    RolloutBatch,
    SolverDiagnostics,
    compute_weights,
    plan_step,
    propagate_rollouts,
    weighted_update,
)
from .tyre import TyreConfig, available_lateral_friction, fiala_lateral_force
from .world import (
    ActuatorConfig,
    ObstacleScript,
    PlantState,
    SimLog,
    baseline_mode,
    plant_step,
    reveal_obstacles,
    run_scenario,
)

__version__ = "0.1.0"
