"""Online expert-weight maintenance and forecast substitution rules.

One round of the protocol: normalize the (confidence-adjusted) expert
weights, merge the expert CDFs into the learner's CDF with either the
aggregating rule (``"aa"``) or the weighted average (``"wa"``), observe the
outcome, then update the weights exponentially in the round's losses and
optionally mix them with the uniform distribution (Fixed Share).

Weights are kept in log space; normalization uses a max shift so that runs
of any length cannot underflow. All functions are pure: a state goes in, a
new state comes out.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .distributions import GridCdf, GridDomain, crps, crps_at_grid_outcomes
from .regret import RoundRecord

__all__ = [
    "AllExpertsAsleep",
    "AggregatorConfig",
    "AggregatorState",
    "RoundContext",
    "normalized_weights",
    "substitute_aa",
    "substitute_wa",
    "update_weights",
    "fixed_share",
    "step",
    "observe",
    "superprediction_check",
    "superprediction_slacks",
]

RULES = ("aa", "wa")


class AllExpertsAsleep(RuntimeError):
    """Every confidence is zero, so no aggregated forecast is defined."""


@dataclass(frozen=True)
class AggregatorConfig:
    """Immutable run configuration.

    The learning rate is derived from the rule and the interval width:
    ``2 / width`` for the aggregating rule, ``1 / (2 * width)`` for the
    weighted average. ``alpha`` is the Fixed Share parameter (0 disables
    sharing); the default follows the usual two-level scheme.
    """

    domain: GridDomain
    n_experts: int
    rule: str = "aa"
    alpha: float = 0.001
    confidence: bool = False

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.n_experts < 1:
            raise ValueError("need at least one expert")

    @property
    def learning_rate(self) -> float:
        width = self.domain.width
        return 2.0 / width if self.rule == "aa" else 0.5 / width


@dataclass(frozen=True)
class AggregatorState:
    """Unnormalized log-weights of the experts and the current round index."""

    log_weights: np.ndarray
    t: int = 1

    @classmethod
    def initial(cls, n_experts: int) -> "AggregatorState":
        lw = np.full(n_experts, -np.log(n_experts))
        lw.setflags(write=False)
        return cls(log_weights=lw, t=1)


@dataclass(frozen=True)
class RoundContext:
    """Decision-time snapshot carried from :func:`step` to :func:`observe`."""

    forecasts: tuple[GridCdf, ...]
    confidences: np.ndarray
    weights: np.ndarray
    learner: GridCdf


def _log_dot_exp(log_terms: np.ndarray, weights: np.ndarray) -> float:
    """``log(sum_i w_i * exp(log_terms_i))`` with a max shift."""
    shift = log_terms.max()
    return float(shift + np.log((weights * np.exp(log_terms - shift)).sum()))


def _check_confidences(confidences, n_experts: int) -> np.ndarray:
    if confidences is None:
        return np.ones(n_experts)
    p = np.asarray(confidences, dtype=np.float64)
    if p.shape != (n_experts,):
        raise ValueError(f"expected {n_experts} confidences, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("confidences must lie in [0, 1]")
    return p


def normalized_weights(state: AggregatorState, confidences=None) -> np.ndarray:
    """Confidence-adjusted normalized weights ``p_i w_i / sum_j p_j w_j``.

    Computed in log space with a max shift. With all confidences equal to 1
    this is the plain normalization of the stored weights. Raises
    :class:`AllExpertsAsleep` when every product ``p_i w_i`` vanishes.
    """
    p = _check_confidences(confidences, state.log_weights.shape[0])
    with np.errstate(divide="ignore"):
        logp = np.where(p > 0.0, np.log(np.where(p > 0.0, p, 1.0)), -np.inf)
    combined = state.log_weights + logp
    shift = combined.max()
    if shift == -np.inf:
        raise AllExpertsAsleep("all confidence-weight products are zero")
    w = np.exp(combined - shift)
    return w / w.sum()


def _check_weights(weights, n_experts: int) -> np.ndarray:
    q = np.asarray(weights, dtype=np.float64)
    if q.shape != (n_experts,):
        raise ValueError(f"expected {n_experts} weights, got shape {q.shape}")
    if np.any(q < 0.0) or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability vector")
    return q


def _stack_forecasts(forecasts: Sequence[GridCdf]) -> tuple[np.ndarray, GridDomain]:
    if len(forecasts) == 0:
        raise ValueError("need at least one forecast")
    domain = forecasts[0].domain
    for f in forecasts[1:]:
        if f.domain != domain:
            raise ValueError("forecasts must share one grid domain")
    return np.stack([f.values for f in forecasts]), domain


def _aa_values(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Pointwise aggregating-rule merge of an ``(N, d)`` value matrix.

    ``1/2 - 1/4 * ln( sum_i q_i e^{-2 f_i^2} / sum_i q_i e^{-2 (1-f_i)^2} )``
    per grid point, as a log of summed exponentials. The exponents lie in
    ``[-2, 0]``, so both weighted sums stay inside ``[e^{-2}, 1]`` and no
    shift is needed. The constants are those of the binary square-loss game
    on [0, 1] and do not depend on the interval width.
    """
    q = weights[:, None]
    num = np.log((q * np.exp(-2.0 * values * values)).sum(axis=0))
    den = np.log((q * np.exp(-2.0 * (1.0 - values) ** 2)).sum(axis=0))
    return 0.5 - 0.25 * (num - den)


def substitute_aa(forecasts: Sequence[GridCdf], weights) -> GridCdf:
    """Merge expert CDFs under the aggregating rule.

    The result dominates the weighted experts at every outcome (see
    :func:`superprediction_check`); it is monotone up to floating-point
    wobble, which the :class:`GridCdf` constructor repairs.
    """
    values, domain = _stack_forecasts(forecasts)
    q = _check_weights(weights, values.shape[0])
    return GridCdf(domain, _aa_values(values, q))


def substitute_wa(forecasts: Sequence[GridCdf], weights) -> GridCdf:
    """Pointwise convex combination of the expert CDFs."""
    values, domain = _stack_forecasts(forecasts)
    q = _check_weights(weights, values.shape[0])
    return GridCdf(domain, q @ values)


def update_weights(
    state: AggregatorState,
    expert_losses: np.ndarray,
    learner_loss: float,
    confidences,
    config: AggregatorConfig,
) -> AggregatorState:
    """Exponential update in the virtual-expert losses.

    ``log w_i -= lr * (p_i * loss_i + (1 - p_i) * learner_loss)``: a fully
    confident expert pays its own loss, a sleeping one pays the learner's,
    so its weight relative to other sleepers never moves.
    """
    p = _check_confidences(confidences, config.n_experts)
    losses = np.asarray(expert_losses, dtype=np.float64)
    virtual = p * losses + (1.0 - p) * learner_loss
    lw = state.log_weights - config.learning_rate * virtual
    return replace(state, log_weights=lw, t=state.t + 1)


def fixed_share(state: AggregatorState, config: AggregatorConfig) -> AggregatorState:
    """Mix the normalized weights with the uniform distribution.

    ``w_i <- alpha / N + (1 - alpha) * w_i`` on the normalized weights.
    With ``alpha = 0`` this only renormalizes, which is done in log space so
    that weights far below the linear floating-point range survive.
    """
    lw = state.log_weights
    if config.alpha == 0.0:
        shift = lw.max()
        return replace(state, log_weights=lw - (shift + np.log(np.exp(lw - shift).sum())))
    w = np.exp(lw - lw.max())
    w /= w.sum()
    mixed = config.alpha / config.n_experts + (1.0 - config.alpha) * w
    return replace(state, log_weights=np.log(mixed))


def step(
    state: AggregatorState,
    forecasts: Sequence[GridCdf],
    config: AggregatorConfig,
    confidences=None,
) -> tuple[GridCdf, RoundContext]:
    """Produce the learner's forecast for the round.

    Returns the forecast and the decision-time context that the matching
    :func:`observe` call needs. ``AllExpertsAsleep`` propagates to the
    caller, whose policy decides what to emit for the round.
    """
    if len(forecasts) != config.n_experts:
        raise ValueError(f"expected {config.n_experts} forecasts, got {len(forecasts)}")
    p = _check_confidences(confidences if config.confidence else None, config.n_experts)
    q = normalized_weights(state, p)
    merge = substitute_aa if config.rule == "aa" else substitute_wa
    learner = merge(forecasts, q)
    return learner, RoundContext(tuple(forecasts), p, q, learner)


def observe(
    state: AggregatorState,
    ctx: RoundContext,
    outcome: float,
    config: AggregatorConfig,
) -> tuple[AggregatorState, RoundRecord]:
    """Score the round, update the weights, and record it.

    Must be called with the context returned by :func:`step` for the same
    round. The weight update runs first, then Fixed Share mixing.
    """
    losses = np.array([crps(f, outcome) for f in ctx.forecasts])
    learner_loss = crps(ctx.learner, outcome)
    lr = config.learning_rate
    virtual = ctx.confidences * losses + (1.0 - ctx.confidences) * learner_loss
    # The benchmark the learner cannot exceed telescopes over the plain
    # normalized weights (the virtual experts' shares), not the
    # confidence-adjusted decision weights.
    mix_bound = -_log_dot_exp(-lr * virtual, normalized_weights(state)) / lr
    record = RoundRecord(
        t=state.t,
        outcome=float(outcome),
        learner_loss=learner_loss,
        expert_losses=losses,
        confidences=ctx.confidences.copy(),
        weights=ctx.weights.copy(),
        mix_bound=mix_bound,
    )
    new_state = update_weights(state, losses, learner_loss, ctx.confidences, config)
    new_state = fixed_share(new_state, config)
    return new_state, record


def superprediction_check(
    learner: GridCdf,
    forecasts: Sequence[GridCdf],
    weights,
    outcome: float,
    learning_rate: float,
    tolerance: float = 1e-9,
) -> tuple[bool, float]:
    """Check that the learner's loss does not exceed the mixture benchmark.

    Evaluates ``slack = -lr * loss(learner) - ln sum_i q_i e^{-lr * loss_i}``
    at one outcome; the aggregating rule guarantees ``slack >= 0`` up to
    floating-point noise at every outcome.
    """
    values, domain = _stack_forecasts(forecasts)
    if learner.domain != domain:
        raise ValueError("learner and expert forecasts must share one grid domain")
    q = _check_weights(weights, values.shape[0])
    losses = np.array([crps(f, outcome) for f in forecasts])
    slack = -learning_rate * crps(learner, outcome) - _log_dot_exp(
        -learning_rate * losses, q
    )
    return slack >= -tolerance, slack


def superprediction_slacks(
    learner: GridCdf,
    forecasts: Sequence[GridCdf],
    weights,
    learning_rate: float,
) -> np.ndarray:
    """Superprediction slack at every grid point outcome, vectorized.

    Entry ``k`` matches ``superprediction_check(..., outcome=z_{k+1})`` up
    to summation-order noise; checking all entries exhausts every loss
    pattern the grid game can realize.
    """
    _, domain = _stack_forecasts(forecasts)
    if learner.domain != domain:
        raise ValueError("learner and expert forecasts must share one grid domain")
    q = _check_weights(weights, len(forecasts))
    learner_losses = crps_at_grid_outcomes(learner)
    scores = -learning_rate * np.stack([crps_at_grid_outcomes(f) for f in forecasts])
    shift = scores.max(axis=0)
    bench = shift + np.log((q[:, None] * np.exp(scores - shift)).sum(axis=0))
    return -learning_rate * learner_losses - bench
