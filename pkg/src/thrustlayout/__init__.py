"""Co-design of thrust-module placement and H2 feedback for payload transport."""

from .assembly import Layout, MassProperties, attachment_point, compose_mass_properties
from .dynamics import (
    DisturbanceWrench,
    LinearModel,
    StateVector,
    feedforward_hover,
    linearize_at_hover,
    model_for_layout,
    nonlinear_derivative,
)
from .errors import (
    CodesignError,
    ConfigError,
    GimbalLock,
    IllConditioned,
    InfeasibleConstraint,
    InfeasibleFeedforward,
    NoFeasibleLayout,
    NoIntersection,
    NotHurwitz,
    NotStabilizable,
    NumericalFailure,
    RankDeficientWrenchMap,
    SeparationViolation,
)
from .optimizer import (
    CodesignProblem,
    OptimizationConfig,
    OptimizationResult,
    evaluate_candidate,
    optimize,
)
from .payload import PayloadSpec, payload_from_shape
from .robustness import (
    RobustnessScore,
    feasibility_probability_oracle,
    hyperplane_distance,
    layout_cost,
)
from .simulate import Scenario, SimReport, compare_layouts, simulate
from .synthesis import (
    ControlSolution,
    WeightConfig,
    closed_loop_covariance,
    h2_cost,
    input_covariance,
    lqr_gain,
    solve_care,
    solve_lyapunov,
    synthesize,
)
from .vehicle import QuadSpec

__version__ = "0.1.0"

__all__ = [
    "CodesignError",
    "CodesignProblem",
    "ConfigError",
    "ControlSolution",
    "DisturbanceWrench",
    "GimbalLock",
    "IllConditioned",
    "InfeasibleConstraint",
    "InfeasibleFeedforward",
    "Layout",
    "LinearModel",
    "MassProperties",
    "NoFeasibleLayout",
    "NoIntersection",
    "NotHurwitz",
    "NotStabilizable",
    "NumericalFailure",
    "OptimizationConfig",
    "OptimizationResult",
    "PayloadSpec",
    "QuadSpec",
    "RankDeficientWrenchMap",
    "RobustnessScore",
    "Scenario",
    "SeparationViolation",
    "SimReport",
    "StateVector",
    "WeightConfig",
    "attachment_point",
    "closed_loop_covariance",
    "compare_layouts",
    "compose_mass_properties",
    "evaluate_candidate",
    "feasibility_probability_oracle",
    "feedforward_hover",
    "h2_cost",
    "hyperplane_distance",
    "input_covariance",
    "layout_cost",
    "linearize_at_hover",
    "lqr_gain",
    "model_for_layout",
    "nonlinear_derivative",
    "optimize",
    "payload_from_shape",
    "simulate",
    "solve_care",
    "solve_lyapunov",
    "synthesize",
]
