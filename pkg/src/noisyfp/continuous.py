"""Continuous-time mean dynamics of the learning process.

Each variant moves both strategies toward a response target at unit rate:
plain play toward the soft-max response, noisy decisions toward the
channel-distorted response, and compensated noisy observations toward the
response through the inverse-estimate-times-channel composition.  A
fixed-step classic Runge-Kutta integrator produces trajectories with
per-snapshot residuals for convergence diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channels import Channel
from .game import PlayerParams, as_simplex, check_game_shapes, softmax

StrategyPair = tuple[np.ndarray, np.ndarray]

VARIANTS = ("plain", "decision_error", "observation_error")

# Coordinates may stray this far outside [0, 1] before the run is aborted.
_STATE_BOX_TOL = 1e-6


class IntegrationUnstableError(RuntimeError):
    """Trajectory left the admissible box around the simplex."""


@dataclass(frozen=True, eq=False)
class DynamicsSpec:
    """Which mean dynamic to integrate, with the matrices it needs.

    ``decision1``/``decision2`` are required by the ``decision_error``
    variant; the four channel/estimate fields by ``observation_error``.
    Supplying matrices a variant does not use is rejected, as is a
    non-invertible channel estimate.
    """

    variant: str
    player1: PlayerParams
    player2: PlayerParams
    decision1: Channel | None = None
    decision2: Channel | None = None
    channel1: Channel | None = None
    channel2: Channel | None = None
    estimate1: Channel | None = None
    estimate2: Channel | None = None
    min_det: float = 1e-9

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        check_game_shapes(self.player1, self.player2)
        decision = {"decision1": self.decision1, "decision2": self.decision2}
        observation = {
            "channel1": self.channel1,
            "channel2": self.channel2,
            "estimate1": self.estimate1,
            "estimate2": self.estimate2,
        }
        if self.variant == "decision_error":
            required, forbidden = decision, observation
        elif self.variant == "observation_error":
            required, forbidden = observation, decision
        else:
            required, forbidden = {}, {**decision, **observation}
        missing = [name for name, value in required.items() if value is None]
        extra = [name for name, value in forbidden.items() if value is not None]
        if missing or extra:
            raise ValueError(
                f"variant {self.variant!r} configuration mismatch: "
                f"missing {missing or 'nothing'}, unexpected {extra or 'nothing'}"
            )
        sizes = {
            "decision1": self.player1.n_actions,
            "channel1": self.player1.n_actions,
            "estimate1": self.player1.n_actions,
            "decision2": self.player2.n_actions,
            "channel2": self.player2.n_actions,
            "estimate2": self.player2.n_actions,
        }
        for name, value in required.items():
            if value.n_actions != sizes[name]:
                raise ValueError(
                    f"{name} acts on {value.n_actions} actions, expected {sizes[name]}"
                )
        if self.variant == "observation_error":
            # Fail fast on singular estimates; the inverse is needed anyway.
            self.estimate1.inverse(self.min_det)
            self.estimate2.inverse(self.min_det)

    @property
    def sizes(self) -> tuple[int, int]:
        return self.player1.n_actions, self.player2.n_actions


def _effective_maps(spec: DynamicsSpec):
    """Score matrices and optional post-factors defining both response maps.

    Player i's response target is ``post_i @ softmax(scores_i @ p_other)``.
    """
    scores1 = spec.player1.scaled_payoff
    scores2 = spec.player2.scaled_payoff
    post1 = post2 = None
    if spec.variant == "decision_error":
        post1 = spec.decision1.matrix
        post2 = spec.decision2.matrix
    elif spec.variant == "observation_error":
        scores1 = scores1 @ spec.estimate2.inverse(spec.min_det) @ spec.channel2.matrix
        scores2 = scores2 @ spec.estimate1.inverse(spec.min_det) @ spec.channel1.matrix
    return scores1, scores2, post1, post2


def _derivative(spec: DynamicsSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Derivative of the concatenated state, built once per integration."""
    m, n = spec.sizes
    scores1, scores2, post1, post2 = _effective_maps(spec)
    if m == 2 and n == 2:
        return _derivative_2x2(scores1, scores2, post1, post2)

    def derivative(y):
        p1 = y[:m]
        p2 = y[m:]
        r1 = softmax(scores1 @ p2)
        r2 = softmax(scores2 @ p1)
        if post1 is not None:
            r1 = post1 @ r1
            r2 = post2 @ r2
        out = np.empty(m + n)
        out[:m] = r1 - p1
        out[m:] = r2 - p2
        return out

    return derivative


def _derivative_2x2(scores1, scores2, post1, post2):
    # Scalar fast path for the two-action case: long-horizon sweeps call the
    # derivative tens of thousands of times per game, and unrolled float math
    # is an order of magnitude cheaper than small-array numpy here.  It must
    # compute exactly the max-shifted soft-max the array path computes
    # (asserted by tests against game.softmax).
    a11, a12 = float(scores1[0, 0]), float(scores1[0, 1])
    a21, a22 = float(scores1[1, 0]), float(scores1[1, 1])
    b11, b12 = float(scores2[0, 0]), float(scores2[0, 1])
    b21, b22 = float(scores2[1, 0]), float(scores2[1, 1])
    d1 = None if post1 is None else (
        float(post1[0, 0]), float(post1[0, 1]), float(post1[1, 0]), float(post1[1, 1])
    )
    d2 = None if post2 is None else (
        float(post2[0, 0]), float(post2[0, 1]), float(post2[1, 0]), float(post2[1, 1])
    )
    exp = math.exp

    def derivative(y):
        y0, y1, y2, y3 = y.tolist()
        s1 = a11 * y2 + a12 * y3
        s2 = a21 * y2 + a22 * y3
        if s1 >= s2:
            e = exp(s2 - s1)
            t = 1.0 + e
            r10, r11 = 1.0 / t, e / t
        else:
            e = exp(s1 - s2)
            t = 1.0 + e
            r10, r11 = e / t, 1.0 / t
        s1 = b11 * y0 + b12 * y1
        s2 = b21 * y0 + b22 * y1
        if s1 >= s2:
            e = exp(s2 - s1)
            t = 1.0 + e
            r20, r21 = 1.0 / t, e / t
        else:
            e = exp(s1 - s2)
            t = 1.0 + e
            r20, r21 = e / t, 1.0 / t
        if d1 is not None:
            r10, r11 = d1[0] * r10 + d1[1] * r11, d1[2] * r10 + d1[3] * r11
            r20, r21 = d2[0] * r20 + d2[1] * r21, d2[2] * r20 + d2[3] * r21
        return np.array((r10 - y0, r11 - y1, r20 - y2, r21 - y3))

    return derivative


def rhs(spec: DynamicsSpec, strategies: StrategyPair) -> StrategyPair:
    """Time derivative of both strategies at the given state.

    Each component of the result sums to zero, so the flow is tangent to the
    simplex.
    """
    m, n = spec.sizes
    p1 = as_simplex(strategies[0])
    p2 = as_simplex(strategies[1])
    if p1.size != m or p2.size != n:
        raise ValueError(f"state sizes {(p1.size, p2.size)} do not match game {(m, n)}")
    out = _derivative(spec)(np.concatenate([p1, p2]))
    return out[:m], out[m:]


@dataclass(eq=False)
class OdeTrajectory:
    """Uniform-grid record of one integration run.

    ``residual1``/``residual2`` hold the inf-norm of each player's derivative
    at every snapshot; ``max_simplex_drift`` is the largest deviation of a
    component sum from one observed before renormalization.
    """

    times: np.ndarray
    strategies1: np.ndarray
    strategies2: np.ndarray
    residual1: np.ndarray
    residual2: np.ndarray
    step: float
    variant: str
    max_simplex_drift: float
    renormalizations: int

    @property
    def residual(self) -> np.ndarray:
        """Combined residual: worse of the two players at each snapshot."""
        return np.maximum(self.residual1, self.residual2)

    @property
    def final(self) -> StrategyPair:
        return self.strategies1[-1].copy(), self.strategies2[-1].copy()


def integrate(
    spec: DynamicsSpec,
    start: StrategyPair,
    step: float = 0.01,
    horizon: float = 200.0,
    renorm_tol: float = 1e-12,
) -> OdeTrajectory:
    """Classic fixed-step fourth-order Runge-Kutta over ``[0, horizon]``.

    Component sums drifting beyond ``renorm_tol`` are renormalized back onto
    the simplex and the worst pre-correction drift is reported on the
    trajectory.  A coordinate escaping ``[-1e-6, 1 + 1e-6]`` raises
    ``IntegrationUnstableError`` with a hint to shrink the step.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    if horizon < step:
        raise ValueError("horizon must be at least one step long")
    m, n = spec.sizes
    p1 = as_simplex(start[0])
    p2 = as_simplex(start[1])
    if p1.size != m or p2.size != n:
        raise ValueError(f"start sizes {(p1.size, p2.size)} do not match game {(m, n)}")

    derivative = _derivative(spec)
    n_steps = int(round(horizon / step))
    times = np.arange(n_steps + 1) * step
    states1 = np.empty((n_steps + 1, m))
    states2 = np.empty((n_steps + 1, n))
    y = np.concatenate([p1, p2])
    states1[0] = y[:m]
    states2[0] = y[m:]

    half = step / 2.0
    sixth = step / 6.0
    max_drift = 0.0
    renorms = 0
    for k in range(n_steps):
        k1 = derivative(y)
        k2 = derivative(y + half * k1)
        k3 = derivative(y + half * k2)
        k4 = derivative(y + step * k3)
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        sum1 = y[:m].sum()
        sum2 = y[m:].sum()
        drift = max(abs(sum1 - 1.0), abs(sum2 - 1.0))
        if drift > max_drift:
            max_drift = drift
        if abs(sum1 - 1.0) > renorm_tol:
            y[:m] /= sum1
            renorms += 1
        if abs(sum2 - 1.0) > renorm_tol:
            y[m:] /= sum2
            renorms += 1
        if y.min() < -_STATE_BOX_TOL or y.max() > 1.0 + _STATE_BOX_TOL:
            raise IntegrationUnstableError(
                f"state left the simplex box at t = {times[k + 1]:.6g}; "
                f"try a step smaller than {step}"
            )
        states1[k + 1] = y[:m]
        states2[k + 1] = y[m:]

    residual1, residual2 = _residual_series(spec, states1, states2)
    return OdeTrajectory(
        times=times,
        strategies1=states1,
        strategies2=states2,
        residual1=residual1,
        residual2=residual2,
        step=step,
        variant=spec.variant,
        max_simplex_drift=max_drift,
        renormalizations=renorms,
    )


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _residual_series(spec, states1, states2):
    """Vectorized derivative inf-norms along a whole trajectory."""
    scores1, scores2, post1, post2 = _effective_maps(spec)
    r1 = _softmax_rows(states2 @ scores1.T)
    r2 = _softmax_rows(states1 @ scores2.T)
    if post1 is not None:
        r1 = r1 @ post1.T
        r2 = r2 @ post2.T
    residual1 = np.abs(r1 - states1).max(axis=1)
    residual2 = np.abs(r2 - states2).max(axis=1)
    return residual1, residual2


@dataclass
class ConvergenceResult:
    """Verdict of the trailing-window residual test on a trajectory.

    ``strategies`` always holds the final state; it is a limit estimate only
    when ``converged`` is true.
    """

    converged: bool
    strategies: StrategyPair
    residual_tail: np.ndarray
    tolerance: float


def converged_limit(trajectory: OdeTrajectory, tol: float) -> ConvergenceResult:
    """Final state if the residual stayed under ``tol`` over the last tenth of the grid.

    The windowed test guards against calling a coincidental residual dip at
    the final snapshot convergence.  Not converging is a result, not an
    error.
    """
    if len(trajectory.times) == 0:
        raise ValueError("empty trajectory")
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    window = max(1, math.ceil(0.1 * len(trajectory.times)))
    tail = trajectory.residual[-window:]
    return ConvergenceResult(
        converged=bool((tail < tol).all()),
        strategies=trajectory.final,
        residual_tail=tail.copy(),
        tolerance=tol,
    )
