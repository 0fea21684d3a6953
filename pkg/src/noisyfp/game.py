"""Static two-player matrix game primitives.

Strategies are probability vectors over each player's action set.  Best
responses are smoothed by a weighted entropy bonus, which makes them unique
and strictly mixed: the response is a soft-max of the expected payoffs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Validation tolerance for probability vectors.  Vectors within this distance
# of the simplex are repaired on construction; anything further off is
# rejected so accumulated drift cannot pass silently.
SIMPLEX_TOL = 1e-12


def as_simplex(values, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Coerce ``values`` to a validated probability vector.

    Entries must be nonnegative and sum to one within ``tol``.  Tiny negative
    entries are clipped and the vector renormalized; larger violations raise
    ``ValueError``.
    """
    p = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(
            f"expected a probability vector of length >= 2, got shape {p.shape}"
        )
    if not np.isfinite(p).all():
        raise ValueError("probability vector contains non-finite entries")
    if (p < -tol).any():
        raise ValueError(f"probability vector has negative entries: {p}")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"probability vector sums to {total!r}, expected 1")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def uniform(n_actions: int) -> np.ndarray:
    """Uniform distribution over ``n_actions`` actions."""
    if n_actions < 2:
        raise ValueError("need at least 2 actions")
    return np.full(n_actions, 1.0 / n_actions)


def vertex(n_actions: int, action: int) -> np.ndarray:
    """Pure-strategy indicator vector for ``action``."""
    if n_actions < 2:
        raise ValueError("need at least 2 actions")
    if not 0 <= action < n_actions:
        raise ValueError(f"action {action} out of range for {n_actions} actions")
    v = np.zeros(n_actions)
    v[action] = 1.0
    return v


def entropy(strategy) -> float:
    """Shannon entropy in nats, with the 0 * log(0) = 0 boundary convention."""
    p = as_simplex(strategy)
    safe = np.where(p > 0.0, p, 1.0)
    return float(-(p * np.log(safe)).sum())


def softmax(scores) -> np.ndarray:
    """Exponential normalization of a real score vector onto the simplex.

    The maximum score is subtracted before exponentiating so large
    payoff-to-entropy-weight ratios cannot overflow.  Every output entry is
    strictly positive.
    """
    x = np.asarray(scores, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"expected a score vector of length >= 2, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("soft-max scores must be finite")
    e = np.exp(x - x.max())
    return e / e.sum()


@dataclass(frozen=True, eq=False)
class PlayerParams:
    """One player's payoff matrix and entropy weight.

    ``payoff[i, j]`` is this player's payoff for action ``i`` against
    opponent action ``j``.  ``entropy_weight`` scales the entropy bonus that
    rewards randomization; it must be strictly positive, since the unsmoothed
    limit makes the best response set-valued and is deliberately unsupported.
    """

    payoff: np.ndarray
    entropy_weight: float = 1.0
    scaled_payoff: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        payoff = np.asarray(self.payoff, dtype=float)
        if payoff.ndim != 2 or payoff.shape[0] < 2 or payoff.shape[1] < 2:
            raise ValueError(
                f"payoff must be a matrix with at least 2 actions per side, got shape {payoff.shape}"
            )
        if not np.isfinite(payoff).all():
            raise ValueError("payoff matrix contains non-finite entries")
        weight = float(self.entropy_weight)
        if not np.isfinite(weight) or weight <= 0.0:
            raise ValueError(
                f"entropy_weight must be strictly positive, got {self.entropy_weight!r}"
            )
        object.__setattr__(self, "payoff", payoff)
        object.__setattr__(self, "entropy_weight", weight)
        object.__setattr__(self, "scaled_payoff", payoff / weight)

    @property
    def n_actions(self) -> int:
        return self.payoff.shape[0]

    @property
    def n_opponent_actions(self) -> int:
        return self.payoff.shape[1]


def check_game_shapes(params1: PlayerParams, params2: PlayerParams) -> None:
    """Require mutually transposed payoff shapes (m x n against n x m)."""
    m, n = params1.payoff.shape
    if params2.payoff.shape != (n, m):
        raise ValueError(
            f"payoff shapes are incompatible: {params1.payoff.shape} vs {params2.payoff.shape}"
        )


def utility(own_strategy, opponent_strategy, params: PlayerParams) -> float:
    """Expected payoff plus the weighted entropy bonus.

    Raises ``ValueError`` when either strategy length does not match the
    payoff matrix.
    """
    p = as_simplex(own_strategy)
    q = as_simplex(opponent_strategy)
    m, n = params.payoff.shape
    if p.size != m or q.size != n:
        raise ValueError(
            f"strategy lengths ({p.size}, {q.size}) do not match payoff shape {params.payoff.shape}"
        )
    return float(p @ params.payoff @ q + params.entropy_weight * entropy(p))


def best_response(opponent_strategy, params: PlayerParams) -> np.ndarray:
    """Soft-max response to an estimate of the opponent's strategy.

    The estimate may be any real vector of the right length: compensated
    observation estimates are fed in raw even when they fall outside the
    simplex.  The result is the unique maximizer of ``utility`` over own
    strategies whenever the estimate is a genuine distribution.
    """
    q = np.asarray(opponent_strategy, dtype=float)
    if q.shape != (params.payoff.shape[1],):
        raise ValueError(
            f"opponent strategy has length {q.shape}, payoff expects {params.payoff.shape[1]}"
        )
    return softmax(params.scaled_payoff @ q)


def cross_difference(matrix) -> float:
    """Corner-alternating sum ``m[0,0] - m[0,1] - m[1,0] + m[1,1]`` of a 2x2 matrix.

    This quadratic form decides whether a two-action game is degenerate for
    best-response dynamics; callers compare the product of both players'
    values against a threshold.
    """
    a = np.asarray(matrix, dtype=float)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    return float(a[0, 0] - a[0, 1] - a[1, 0] + a[1, 1])


def nondegeneracy_2x2(matrix1, matrix2) -> tuple[float, float]:
    """Cross differences of both players' effective payoff matrices."""
    return cross_difference(matrix1), cross_difference(matrix2)
