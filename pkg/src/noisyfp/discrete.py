"""Discrete-time stochastic fictitious play with noisy decisions and observations.

One stage of the repeated game: each player soft-max responds to her running
estimate of the opponent's play and samples an action; the action may pass
through the player's decision-noise channel, and what the opponent records
may pass through an observation channel on top of that.  Players who know
their own decision noise sample from the inverse-corrected response; players
holding channel estimates invert them before responding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import (
    Channel,
    ErrorFrequencyTracker,
    InfeasiblePrecompensationError,
    sample_index,
)
from .game import (
    SIMPLEX_TOL,
    PlayerParams,
    best_response,
    check_game_shapes,
    uniform,
)


@dataclass
class RngStreams:
    """Independent per-purpose random streams derived from one seed.

    Action sampling and each noise source draw from their own stream, so
    toggling one noise source never shifts the variates any other consumes.
    That keeps paired-seed experiments comparable across error settings.
    """

    action1: np.random.Generator
    action2: np.random.Generator
    decision1: np.random.Generator
    decision2: np.random.Generator
    observation1: np.random.Generator
    observation2: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        children = np.random.SeedSequence(seed).spawn(6)
        return cls(*(np.random.default_rng(c) for c in children))


@dataclass
class PlayerState:
    """One player's view of the repeated game while it runs.

    ``observed_freq`` is the running average of the opponent's actions as
    this player recorded them (a uniform prior before the first stage).
    ``compensation`` holds the inverse estimated observation channel for the
    opponent's actions; ``own_precompensation`` the inverse of the player's
    own decision-noise matrix.  Both default to None (no correction).
    """

    observed_freq: np.ndarray
    step_count: int = 0
    compensation: np.ndarray | None = None
    own_precompensation: np.ndarray | None = None


def initial_state(
    n_opponent_actions: int,
    compensation: np.ndarray | None = None,
    own_precompensation: np.ndarray | None = None,
) -> PlayerState:
    """Fresh state that responds to a uniform prior until something is observed."""
    return PlayerState(
        uniform(n_opponent_actions), 0, compensation, own_precompensation
    )


def freq_update(freq: np.ndarray, step_count: int, vertex_index: int) -> np.ndarray:
    """Running average of action indicators after one more observation.

    The first observation replaces whatever prior the average held, so after
    ``k + 1`` calls the result is exactly the mean of the recorded action
    vertices.
    """
    if step_count < 0:
        raise ValueError("step_count must be nonnegative")
    if not 0 <= vertex_index < len(freq):
        raise ValueError(f"vertex index {vertex_index} out of range for {len(freq)} actions")
    if step_count == 0:
        out = np.zeros_like(freq)
        out[vertex_index] = 1.0
        return out
    out = freq * (step_count / (step_count + 1.0))
    out[vertex_index] += 1.0 / (step_count + 1.0)
    return out


def _intended_law(state: PlayerState, params: PlayerParams):
    """Action law the player samples from, plus the estimate it was based on.

    The compensated estimate is fed to the response raw even if it lies off
    the simplex; projecting it would change the dynamics being simulated.
    An inverse-corrected law with genuinely negative entries is an error,
    never silently repaired.
    """
    estimate = state.observed_freq
    if state.compensation is not None:
        estimate = state.compensation @ estimate
    law = best_response(estimate, params)
    if state.own_precompensation is not None:
        law = state.own_precompensation @ law
        if (law < -SIMPLEX_TOL).any():
            raise InfeasiblePrecompensationError(law)
        law = np.clip(law, 0.0, None)
        law = law / law.sum()
    return law, estimate


@dataclass
class StepOutcome:
    """What one player did during a single stage."""

    intended: int
    realized: int
    observed: int
    law: np.ndarray
    estimate: np.ndarray


def _advance(
    state1: PlayerState,
    state2: PlayerState,
    params1: PlayerParams,
    params2: PlayerParams,
    decision1: Channel | None,
    decision2: Channel | None,
    channel1: Channel | None,
    channel2: Channel | None,
    streams: RngStreams,
) -> tuple[StepOutcome, StepOutcome]:
    """One simultaneous stage; both states are updated in place."""
    law1, est1 = _intended_law(state1, params1)
    law2, est2 = _intended_law(state2, params2)
    a1 = sample_index(law1, streams.action1.random())
    a2 = sample_index(law2, streams.action2.random())
    r1 = decision1.sample(a1, streams.decision1) if decision1 is not None else a1
    r2 = decision2.sample(a2, streams.decision2) if decision2 is not None else a2
    o1 = channel1.sample(r1, streams.observation1) if channel1 is not None else r1
    o2 = channel2.sample(r2, streams.observation2) if channel2 is not None else r2
    state1.observed_freq = freq_update(state1.observed_freq, state1.step_count, o2)
    state1.step_count += 1
    state2.observed_freq = freq_update(state2.observed_freq, state2.step_count, o1)
    state2.step_count += 1
    return (
        StepOutcome(a1, r1, o1, law1, est1),
        StepOutcome(a2, r2, o2, law2, est2),
    )


def step_perfect(
    state1: PlayerState,
    state2: PlayerState,
    params1: PlayerParams,
    params2: PlayerParams,
    streams: RngStreams,
) -> tuple[int, int]:
    """One stage with exact decisions and exact observations.

    Returns both sampled actions; the states' observed averages update in
    place.
    """
    out1, out2 = _advance(
        state1, state2, params1, params2, None, None, None, None, streams
    )
    return out1.intended, out2.intended


def step_with_decision_errors(
    state1: PlayerState,
    state2: PlayerState,
    params1: PlayerParams,
    params2: PlayerParams,
    noise1: Channel,
    noise2: Channel,
    aware: bool,
    streams: RngStreams,
    min_det: float = 1e-9,
) -> tuple[tuple[int, int], tuple[int, int]]:
    """One stage where each player's action passes through her noise channel.

    Unaware players respond as if their play were exact; aware players sample
    from the inverse-corrected response so realized play matches the clean
    best response.  Returns ``((intended1, realized1), (intended2,
    realized2))``.
    """
    if aware:
        if state1.own_precompensation is None:
            state1.own_precompensation = noise1.inverse(min_det)
        if state2.own_precompensation is None:
            state2.own_precompensation = noise2.inverse(min_det)
    out1, out2 = _advance(
        state1, state2, params1, params2, noise1, noise2, None, None, streams
    )
    return (out1.intended, out1.realized), (out2.intended, out2.realized)


def step_with_observation_errors(
    state1: PlayerState,
    state2: PlayerState,
    params1: PlayerParams,
    params2: PlayerParams,
    channel1: Channel,
    channel2: Channel,
    estimate1: Channel,
    estimate2: Channel,
    streams: RngStreams,
    min_det: float = 1e-9,
) -> tuple[tuple[int, int], tuple[int, int]]:
    """One stage where every action is observed through a noisy channel.

    Each player compensates her running observed average with the inverse of
    her *estimate* of the opponent's channel (installed on first use).
    Returns ``((realized1, observed1), (realized2, observed2))``.
    """
    if state1.compensation is None:
        state1.compensation = estimate2.inverse(min_det)
    if state2.compensation is None:
        state2.compensation = estimate1.inverse(min_det)
    out1, out2 = _advance(
        state1, state2, params1, params2, None, None, channel1, channel2, streams
    )
    return (out1.realized, out1.observed), (out2.realized, out2.observed)


@dataclass(eq=False)
class RunRecord:
    """Step-by-step log of one simulated run.

    Frequency rows are the running averages *after* that stage's actions
    land, so row ``k`` equals the mean of the vertices recorded at stages
    ``0..k`` (recomputable from the action columns).  Optional arrays are
    None whenever they would duplicate the realized ones (no decision noise)
    or are undefined (no observation channels).

    ``estimate_raw*`` hold the compensated opponent estimate each player fed
    into her response at that stage, before any cleanup; ``estimate_clipped*``
    the same vectors clipped to the simplex for plotting.  ``residual1/2``
    are the inf-norm gaps between the recorded averages and the mode's
    stationary response map evaluated on them.
    """

    seed: int
    n_steps: int
    config_hash: str | None
    intended1: np.ndarray
    realized1: np.ndarray
    observed1: np.ndarray
    intended2: np.ndarray
    realized2: np.ndarray
    observed2: np.ndarray
    realized_freq1: np.ndarray
    realized_freq2: np.ndarray
    residual1: np.ndarray
    residual2: np.ndarray
    intended_freq1: np.ndarray | None = None
    intended_freq2: np.ndarray | None = None
    observed_freq1: np.ndarray | None = None
    observed_freq2: np.ndarray | None = None
    estimate_raw1: np.ndarray | None = None
    estimate_raw2: np.ndarray | None = None
    estimate_clipped1: np.ndarray | None = None
    estimate_clipped2: np.ndarray | None = None
    decision_tracker1: ErrorFrequencyTracker | None = None
    decision_tracker2: ErrorFrequencyTracker | None = None
    observation_tracker1: ErrorFrequencyTracker | None = None
    observation_tracker2: ErrorFrequencyTracker | None = None

    @property
    def final_realized(self) -> tuple[np.ndarray, np.ndarray]:
        return self.realized_freq1[-1].copy(), self.realized_freq2[-1].copy()


def run(
    params1: PlayerParams,
    params2: PlayerParams,
    n_steps: int,
    seed: int,
    decision1: Channel | None = None,
    decision2: Channel | None = None,
    decision_aware: bool = False,
    channel1: Channel | None = None,
    channel2: Channel | None = None,
    estimate1: Channel | None = None,
    estimate2: Channel | None = None,
    min_det: float = 1e-9,
    config_hash: str | None = None,
) -> RunRecord:
    """Play ``n_steps`` stages from uniform priors and log everything.

    Decision channels must be supplied for both players or neither; the same
    goes for the observation channel/estimate quadruple.  When both kinds of
    noise are active the pipeline order is intended action, then decision
    noise, then observation noise.  Identical seeds reproduce identical
    records.
    """
    check_game_shapes(params1, params2)
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    has_decision = decision1 is not None or decision2 is not None
    if has_decision and (decision1 is None or decision2 is None):
        raise ValueError("decision noise requires channels for both players")
    observation_parts = (channel1, channel2, estimate1, estimate2)
    has_observation = any(part is not None for part in observation_parts)
    if has_observation and any(part is None for part in observation_parts):
        raise ValueError(
            "observation noise requires both channels and both estimates"
        )
    if decision_aware and not has_decision:
        raise ValueError("decision_aware is meaningless without decision channels")
    m, n = params1.n_actions, params2.n_actions
    for name, chan, size in (
        ("decision1", decision1, m),
        ("channel1", channel1, m),
        ("estimate1", estimate1, m),
        ("decision2", decision2, n),
        ("channel2", channel2, n),
        ("estimate2", estimate2, n),
    ):
        if chan is not None and chan.n_actions != size:
            raise ValueError(f"{name} acts on {chan.n_actions} actions, expected {size}")

    comp1 = estimate2.inverse(min_det) if has_observation else None
    comp2 = estimate1.inverse(min_det) if has_observation else None
    precomp1 = decision1.inverse(min_det) if decision_aware else None
    precomp2 = decision2.inverse(min_det) if decision_aware else None
    state1 = initial_state(n, comp1, precomp1)
    state2 = initial_state(m, comp2, precomp2)
    streams = RngStreams.from_seed(seed)

    intended = np.empty((n_steps, 2), dtype=np.int16)
    realized = np.empty((n_steps, 2), dtype=np.int16)
    observed = np.empty((n_steps, 2), dtype=np.int16)
    realized_freq1 = np.empty((n_steps, m))
    realized_freq2 = np.empty((n_steps, n))
    intended_freq1 = np.empty((n_steps, m)) if has_decision else None
    intended_freq2 = np.empty((n_steps, n)) if has_decision else None
    observed_freq1 = np.empty((n_steps, m)) if has_observation else None
    observed_freq2 = np.empty((n_steps, n)) if has_observation else None
    estimate_raw1 = np.empty((n_steps, n)) if has_observation else None
    estimate_raw2 = np.empty((n_steps, m)) if has_observation else None

    decision_tracker1 = ErrorFrequencyTracker(m) if has_decision else None
    decision_tracker2 = ErrorFrequencyTracker(n) if has_decision else None
    observation_tracker1 = ErrorFrequencyTracker(m) if has_observation else None
    observation_tracker2 = ErrorFrequencyTracker(n) if has_observation else None

    realized_avg1 = np.zeros(m)
    realized_avg2 = np.zeros(n)
    intended_avg1 = np.zeros(m)
    intended_avg2 = np.zeros(n)

    for k in range(n_steps):
        out1, out2 = _advance(
            state1, state2, params1, params2,
            decision1, decision2, channel1, channel2, streams,
        )
        intended[k, 0], intended[k, 1] = out1.intended, out2.intended
        realized[k, 0], realized[k, 1] = out1.realized, out2.realized
        observed[k, 0], observed[k, 1] = out1.observed, out2.observed
        realized_avg1 = freq_update(realized_avg1, k, out1.realized)
        realized_avg2 = freq_update(realized_avg2, k, out2.realized)
        realized_freq1[k] = realized_avg1
        realized_freq2[k] = realized_avg2
        if has_decision:
            intended_avg1 = freq_update(intended_avg1, k, out1.intended)
            intended_avg2 = freq_update(intended_avg2, k, out2.intended)
            intended_freq1[k] = intended_avg1
            intended_freq2[k] = intended_avg2
            decision_tracker1.record(out1.intended, out1.realized)
            decision_tracker2.record(out2.intended, out2.realized)
        if has_observation:
            # state2 records player 1's actions and vice versa.
            observed_freq1[k] = state2.observed_freq
            observed_freq2[k] = state1.observed_freq
            estimate_raw1[k] = out1.estimate
            estimate_raw2[k] = out2.estimate
            observation_tracker1.record(out1.realized, out1.observed)
            observation_tracker2.record(out2.realized, out2.observed)

    residual1, residual2 = _stationarity_gaps(
        params1, params2,
        realized_freq1, realized_freq2,
        observed_freq1, observed_freq2,
        comp1, comp2,
        decision1 if (has_decision and not decision_aware) else None,
        decision2 if (has_decision and not decision_aware) else None,
    )

    estimate_clipped1 = _clip_rows(estimate_raw1) if has_observation else None
    estimate_clipped2 = _clip_rows(estimate_raw2) if has_observation else None

    return RunRecord(
        seed=seed,
        n_steps=n_steps,
        config_hash=config_hash,
        intended1=intended[:, 0], realized1=realized[:, 0], observed1=observed[:, 0],
        intended2=intended[:, 1], realized2=realized[:, 1], observed2=observed[:, 1],
        realized_freq1=realized_freq1,
        realized_freq2=realized_freq2,
        residual1=residual1,
        residual2=residual2,
        intended_freq1=intended_freq1,
        intended_freq2=intended_freq2,
        observed_freq1=observed_freq1,
        observed_freq2=observed_freq2,
        estimate_raw1=estimate_raw1,
        estimate_raw2=estimate_raw2,
        estimate_clipped1=estimate_clipped1,
        estimate_clipped2=estimate_clipped2,
        decision_tracker1=decision_tracker1,
        decision_tracker2=decision_tracker2,
        observation_tracker1=observation_tracker1,
        observation_tracker2=observation_tracker2,
    )


def _clip_rows(rows: np.ndarray) -> np.ndarray:
    clipped = np.clip(rows, 0.0, None)
    totals = clipped.sum(axis=1, keepdims=True)
    totals[totals == 0.0] = 1.0
    return clipped / totals


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _stationarity_gaps(
    params1, params2,
    realized_freq1, realized_freq2,
    observed_freq1, observed_freq2,
    comp1, comp2,
    noise1, noise2,
):
    """Gap between recorded averages and the mode's stationary response map.

    For each player the expected realized law is evaluated on the recorded
    post-stage averages: responses use the compensated observed average when
    observation noise is active (that is the information players actually
    have), and are pushed through the decision channel when unaware noise
    distorts play.  The gap shrinking to zero is the convergence diagnostic.
    """
    basis_for_1 = observed_freq2 if observed_freq2 is not None else realized_freq2
    basis_for_2 = observed_freq1 if observed_freq1 is not None else realized_freq1
    if comp1 is not None:
        basis_for_1 = basis_for_1 @ comp1.T
        basis_for_2 = basis_for_2 @ comp2.T
    expected1 = _softmax_rows(basis_for_1 @ params1.scaled_payoff.T)
    expected2 = _softmax_rows(basis_for_2 @ params2.scaled_payoff.T)
    if noise1 is not None:
        expected1 = expected1 @ noise1.matrix.T
        expected2 = expected2 @ noise2.matrix.T
    residual1 = np.abs(expected1 - realized_freq1).max(axis=1)
    residual2 = np.abs(expected2 - realized_freq2).max(axis=1)
    return residual1, residual2
