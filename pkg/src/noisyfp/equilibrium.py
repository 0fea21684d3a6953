"""Fixed-point solving for the stationary systems of the learning dynamics.

Solutions found here serve as the independent reference against which both
the discrete simulator and the continuous-time integrator are validated:
the solver knows nothing about trajectories, it only iterates the stationary
response map with damping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channels import Channel, InfeasiblePrecompensationError
from .game import (
    SIMPLEX_TOL,
    PlayerParams,
    as_simplex,
    best_response,
    check_game_shapes,
    softmax,
)

StrategyPair = tuple[np.ndarray, np.ndarray]

#: Stationary-system variants with ready-made constructors.
VARIANTS = ("plain", "decision_error", "precompensated", "observation_error")


def _feasible_distribution(vector: np.ndarray) -> np.ndarray:
    """Clean an inverse-corrected law, rejecting genuine negativity."""
    if (vector < -SIMPLEX_TOL).any():
        raise InfeasiblePrecompensationError(vector)
    out = np.clip(vector, 0.0, None)
    return out / out.sum()


@dataclass(frozen=True, eq=False)
class FixedPointProblem:
    """A self-map on strategy pairs together with solver settings.

    ``response`` maps a strategy pair to the pair each side would settle on
    given the other; a fixed point of it is the equilibrium of the
    corresponding dynamic.
    """

    response: Callable[[np.ndarray, np.ndarray], StrategyPair]
    sizes: tuple[int, int]
    damping: float = 0.5
    tol: float = 1e-10
    max_iterations: int = 100_000

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping!r}")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @classmethod
    def plain(cls, params1: PlayerParams, params2: PlayerParams, **settings) -> "FixedPointProblem":
        """Mutual soft-max responses with exact play and exact observations."""
        check_game_shapes(params1, params2)

        def response(p1, p2):
            return best_response(p2, params1), best_response(p1, params2)

        return cls(response, (params1.n_actions, params2.n_actions), **settings)

    @classmethod
    def decision_errors(
        cls,
        params1: PlayerParams,
        params2: PlayerParams,
        noise1: Channel,
        noise2: Channel,
        **settings,
    ) -> "FixedPointProblem":
        """Stationary realized-action frequencies for players unaware of their noise.

        Each side responds to the other's realized frequencies, then its own
        noise channel distorts what actually comes out.
        """
        check_game_shapes(params1, params2)
        _check_channel(noise1, params1.n_actions, "noise1")
        _check_channel(noise2, params2.n_actions, "noise2")
        d1, d2 = noise1.matrix, noise2.matrix

        def response(p1, p2):
            return d1 @ best_response(p2, params1), d2 @ best_response(p1, params2)

        return cls(response, (params1.n_actions, params2.n_actions), **settings)

    @classmethod
    def precompensated(
        cls,
        params1: PlayerParams,
        params2: PlayerParams,
        noise1: Channel,
        noise2: Channel,
        min_det: float = 1e-9,
        **settings,
    ) -> "FixedPointProblem":
        """Stationary intended strategies for players who undo their own noise.

        Each side observes the other's realized frequencies and samples from
        the inverse-corrected response, so the fixed point lives in intended
        strategies.  Iterates whose corrected law leaves the simplex raise
        ``InfeasiblePrecompensationError``.
        """
        check_game_shapes(params1, params2)
        _check_channel(noise1, params1.n_actions, "noise1")
        _check_channel(noise2, params2.n_actions, "noise2")
        inv1 = noise1.inverse(min_det)
        inv2 = noise2.inverse(min_det)
        d1, d2 = noise1.matrix, noise2.matrix

        def response(p1, p2):
            r1 = _feasible_distribution(inv1 @ best_response(d2 @ p2, params1))
            r2 = _feasible_distribution(inv2 @ best_response(d1 @ p1, params2))
            return r1, r2

        return cls(response, (params1.n_actions, params2.n_actions), **settings)

    @classmethod
    def compensated_observations(
        cls,
        params1: PlayerParams,
        params2: PlayerParams,
        channel1: Channel,
        channel2: Channel,
        estimate1: Channel,
        estimate2: Channel,
        min_det: float = 1e-9,
        **settings,
    ) -> "FixedPointProblem":
        """Stationary strategies when observations pass through noisy channels.

        Each player inverts her *estimate* of the opponent's channel before
        responding; when the estimate is exact the system collapses to the
        plain one.
        """
        check_game_shapes(params1, params2)
        _check_channel(channel1, params1.n_actions, "channel1")
        _check_channel(estimate1, params1.n_actions, "estimate1")
        _check_channel(channel2, params2.n_actions, "channel2")
        _check_channel(estimate2, params2.n_actions, "estimate2")
        effective1 = params1.scaled_payoff @ estimate2.inverse(min_det) @ channel2.matrix
        effective2 = params2.scaled_payoff @ estimate1.inverse(min_det) @ channel1.matrix

        def response(p1, p2):
            return softmax(effective1 @ p2), softmax(effective2 @ p1)

        return cls(response, (params1.n_actions, params2.n_actions), **settings)


def _check_channel(channel: Channel, size: int, name: str) -> None:
    if channel.n_actions != size:
        raise ValueError(
            f"{name} acts on {channel.n_actions} actions, expected {size}"
        )


@dataclass
class SolveResult:
    """Outcome of one damped iteration run."""

    strategies: StrategyPair
    residual: float
    iterations: int
    converged: bool


@dataclass
class MultistartResult:
    """Aggregate of solver runs from independent random starts."""

    best: SolveResult
    runs: list[SolveResult]
    all_converged: bool
    max_spread: float
    agreement: bool

    @property
    def possibly_multiple_equilibria(self) -> bool:
        return self.all_converged and not self.agreement


def solve(problem: FixedPointProblem, start: StrategyPair) -> SolveResult:
    """Damped iteration ``x <- (1 - damping) x + damping F(x)``.

    Stops as soon as ``max_i ||x_i - F_i(x)||_inf`` falls under the problem
    tolerance; the returned point then satisfies that bound directly.  On
    exhaustion the lowest-residual iterate seen is returned, flagged
    not-converged.  Failures inside the response map (for instance an
    infeasible precompensation) propagate with the offending iterate
    attached.
    """
    x1 = as_simplex(start[0])
    x2 = as_simplex(start[1])
    if (x1.size, x2.size) != problem.sizes:
        raise ValueError(
            f"start sizes {(x1.size, x2.size)} do not match problem sizes {problem.sizes}"
        )
    lam = problem.damping
    best_x: StrategyPair = (x1, x2)
    best_residual = np.inf
    for it in range(problem.max_iterations):
        try:
            f1, f2 = problem.response(x1, x2)
        except Exception as exc:
            exc.solver_iteration = it
            exc.solver_iterate = (x1.copy(), x2.copy())
            raise
        residual = max(
            float(np.abs(x1 - f1).max()),
            float(np.abs(x2 - f2).max()),
        )
        if residual < best_residual:
            best_residual = residual
            best_x = (x1.copy(), x2.copy())
        if residual < problem.tol:
            return SolveResult((x1, x2), residual, it + 1, True)
        x1 = (1.0 - lam) * x1 + lam * f1
        x2 = (1.0 - lam) * x2 + lam * f2
    return SolveResult(best_x, best_residual, problem.max_iterations, False)


def solve_multistart(
    problem: FixedPointProblem,
    n_starts: int = 10,
    seed: int = 0,
    agreement_tol: float = 1e-8,
) -> MultistartResult:
    """Solve from ``n_starts`` random simplex starts and compare the limits.

    Disagreement beyond ``agreement_tol`` is reported (possibly multiple
    equilibria), never averaged away.
    """
    if n_starts < 1:
        raise ValueError("need at least one start")
    rng = np.random.default_rng(seed)
    m, n = problem.sizes
    runs = []
    for _ in range(n_starts):
        start = (rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n)))
        runs.append(solve(problem, start))
    converged = [r for r in runs if r.converged]
    all_converged = len(converged) == len(runs)
    pool = converged if converged else runs
    best = min(pool, key=lambda r: r.residual)
    max_spread = 0.0
    for i in range(len(pool)):
        for j in range(i + 1, len(pool)):
            a, b = pool[i].strategies, pool[j].strategies
            spread = max(
                float(np.abs(a[0] - b[0]).max()),
                float(np.abs(a[1] - b[1]).max()),
            )
            max_spread = max(max_spread, spread)
    agreement = all_converged and max_spread <= agreement_tol
    return MultistartResult(best, runs, all_converged, max_spread, agreement)


def predicted_realized_frequencies(
    strategies: StrategyPair,
    variant: str,
    params1: PlayerParams | None = None,
    params2: PlayerParams | None = None,
    noise1: Channel | None = None,
    noise2: Channel | None = None,
) -> StrategyPair:
    """Realized-action frequencies a long simulation should exhibit.

    Maps a solved strategy pair to the frequencies of actions that actually
    come out of the players:

    - ``plain`` and ``observation_error``: actions are executed exactly, so
      the solution itself is returned.
    - ``decision_error`` (unaware players): the noise channels act on the
      responses evaluated at the solution.
    - ``precompensated`` (aware players): the solution holds intended
      strategies; pushing them through the noise recovers the clean
      equilibrium.
    """
    p1 = np.asarray(strategies[0], dtype=float)
    p2 = np.asarray(strategies[1], dtype=float)
    if variant in ("plain", "observation_error"):
        return p1.copy(), p2.copy()
    if variant == "decision_error":
        if params1 is None or params2 is None or noise1 is None or noise2 is None:
            raise ValueError("decision_error prediction needs params and noise channels")
        return (
            noise1.matrix @ best_response(p2, params1),
            noise2.matrix @ best_response(p1, params2),
        )
    if variant == "precompensated":
        if noise1 is None or noise2 is None:
            raise ValueError("precompensated prediction needs both noise channels")
        return noise1.matrix @ p1, noise2.matrix @ p2
    raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
