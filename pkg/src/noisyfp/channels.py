"""Stochastic corruption channels acting on player actions.

The same machinery models two distinct physical effects: decision noise (a
player intends one action but another comes out) and observation noise (an
opponent's action is recorded incorrectly).  Channels are stored
column-stochastic so that applying one to a mixed strategy yields another
mixed strategy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import SIMPLEX_TOL, as_simplex


class SingularChannelError(ValueError):
    """Channel matrix is too close to singular to invert for compensation."""

    def __init__(self, determinant: float, threshold: float):
        self.determinant = determinant
        self.threshold = threshold
        super().__init__(
            f"channel matrix is numerically singular: |det| = {abs(determinant):.3e} "
            f"<= threshold {threshold:.1e}"
        )


class InfeasiblePrecompensationError(ValueError):
    """Inverse-channel correction produced a vector off the probability simplex."""

    def __init__(self, vector):
        self.vector = np.asarray(vector, dtype=float)
        super().__init__(
            f"inverse-corrected action law is not a probability vector: {self.vector}"
        )


def sample_index(weights, u: float) -> int:
    """Inverse-CDF draw: smallest index whose cumulative weight exceeds ``u``."""
    acc = 0.0
    for j, w in enumerate(weights):
        acc += w
        if u < acc:
            return j
    return len(weights) - 1


@dataclass(frozen=True, eq=False)
class Channel:
    """Column-stochastic corruption channel over a k-action set.

    ``matrix[j, i]`` is the probability that action ``i`` comes out as (or is
    recorded as) action ``j``.  Columns must sum to one within the simplex
    tolerance; small drift is renormalized, larger violations are rejected
    with the offending column named.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"channel matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise ValueError("channel needs at least 2 actions")
        if not np.isfinite(m).all():
            raise ValueError("channel matrix contains non-finite entries")
        if (m < -SIMPLEX_TOL).any() or (m > 1.0 + SIMPLEX_TOL).any():
            raise ValueError(f"channel entries must lie in [0, 1], got:\n{m}")
        sums = m.sum(axis=0)
        bad = np.nonzero(np.abs(sums - 1.0) > SIMPLEX_TOL)[0]
        if bad.size:
            raise ValueError(
                f"channel columns {bad.tolist()} sum to {sums[bad].tolist()}, expected 1"
            )
        m = np.clip(m, 0.0, 1.0)
        object.__setattr__(self, "matrix", m / m.sum(axis=0))

    @classmethod
    def identity(cls, n_actions: int) -> "Channel":
        """Noiseless channel: every action comes out as itself."""
        return cls(np.eye(n_actions))

    @classmethod
    def binary(cls, flip_first: float, flip_second: float) -> "Channel":
        """Two-action channel from per-action flip probabilities.

        ``flip_first`` is the probability the first action comes out as the
        second, ``flip_second`` the probability the second comes out as the
        first.
        """
        for name, value in (("flip_first", flip_first), ("flip_second", flip_second)):
            if not np.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
        a, g = float(flip_first), float(flip_second)
        return cls(np.array([[1.0 - a, g], [a, 1.0 - g]]))

    @classmethod
    def from_rows(cls, matrix) -> "Channel":
        """Build from a row-stochastic matrix (row i = outcome law of action i).

        The input is transposed into the internal column convention.
        """
        return cls(np.asarray(matrix, dtype=float).T)

    @property
    def n_actions(self) -> int:
        return self.matrix.shape[0]

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def apply(self, strategy) -> np.ndarray:
        """Push a mixed strategy through the channel (matrix-vector product)."""
        q = as_simplex(strategy)
        if q.size != self.n_actions:
            raise ValueError(
                f"strategy length {q.size} does not match channel size {self.n_actions}"
            )
        return self.matrix @ q

    def inverse(self, min_det: float = 1e-9) -> np.ndarray:
        """Inverse matrix, used to undo the channel on frequencies.

        The result is a general real matrix (it may contain negative
        entries).  Raises ``SingularChannelError`` when ``|det|`` is at or
        below ``min_det``.
        """
        det = self.determinant
        if abs(det) <= min_det:
            raise SingularChannelError(det, min_det)
        return np.linalg.inv(self.matrix)

    def sample(self, action: int, rng: np.random.Generator) -> int:
        """Draw the corrupted outcome of ``action``.

        Consumes exactly one uniform variate, so identity channels leave the
        rest of a seeded stream untouched.  The caller is responsible for
        recording the (input, output) pair if it tracks frequencies.
        """
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range for {self.n_actions} actions")
        return sample_index(self.matrix[:, action], rng.random())


class ErrorFrequencyTracker:
    """Tallies (input action, output action) pairs seen through one channel.

    The empirical column frequencies converge to the channel matrix as
    samples accumulate.  Columns never exercised are reported as unobserved
    (NaN) rather than guessed.
    """

    def __init__(self, n_actions: int):
        if n_actions < 2:
            raise ValueError("tracker needs at least 2 actions")
        self.counts = np.zeros((n_actions, n_actions), dtype=np.int64)

    def record(self, input_action: int, output_action: int) -> None:
        self.counts[output_action, input_action] += 1

    @property
    def n_actions(self) -> int:
        return self.counts.shape[0]

    @property
    def column_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def observed_columns(self) -> np.ndarray:
        """Boolean mask of input actions seen at least once."""
        return self.column_totals > 0

    def frequencies(self) -> np.ndarray:
        """Empirical frequency matrix; unobserved columns are NaN."""
        totals = self.column_totals
        freq = np.full(self.counts.shape, np.nan)
        seen = totals > 0
        freq[:, seen] = self.counts[:, seen] / totals[seen]
        return freq
