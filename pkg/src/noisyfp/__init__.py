"""Stochastic fictitious play for two-player matrix games with noisy decisions and observations."""

from .channels import (
    Channel,
    ErrorFrequencyTracker,
    InfeasiblePrecompensationError,
    SingularChannelError,
    sample_index,
)
from .continuous import (
    ConvergenceResult,
    DynamicsSpec,
    IntegrationUnstableError,
    OdeTrajectory,
    converged_limit,
    integrate,
    rhs,
)
from .discrete import (
    PlayerState,
    RngStreams,
    RunRecord,
    freq_update,
    initial_state,
    run,
    step_perfect,
    step_with_decision_errors,
    step_with_observation_errors,
)
from .equilibrium import (
    FixedPointProblem,
    MultistartResult,
    SolveResult,
    predicted_realized_frequencies,
    solve,
    solve_multistart,
)
from .game import (
    SIMPLEX_TOL,
    PlayerParams,
    as_simplex,
    best_response,
    check_game_shapes,
    cross_difference,
    entropy,
    nondegeneracy_2x2,
    softmax,
    uniform,
    utility,
    vertex,
)

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ConvergenceResult",
    "DynamicsSpec",
    "ErrorFrequencyTracker",
    "FixedPointProblem",
    "InfeasiblePrecompensationError",
    "IntegrationUnstableError",
    "MultistartResult",
    "OdeTrajectory",
    "PlayerParams",
    "PlayerState",
    "RngStreams",
    "RunRecord",
    "SIMPLEX_TOL",
    "SingularChannelError",
    "SolveResult",
    "as_simplex",
    "best_response",
    "check_game_shapes",
    "converged_limit",
    "cross_difference",
    "entropy",
    "freq_update",
    "initial_state",
    "integrate",
    "nondegeneracy_2x2",
    "predicted_realized_frequencies",
    "rhs",
    "run",
    "sample_index",
    "softmax",
    "solve",
    "solve_multistart",
    "step_perfect",
    "step_with_decision_errors",
    "step_with_observation_errors",
    "uniform",
    "utility",
    "vertex",
]
