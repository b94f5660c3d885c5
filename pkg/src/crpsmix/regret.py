"""Per-round loss accounting, regret curves, and worst-case bound checks.

A :class:`RegretLedger` accumulates one :class:`RoundRecord` per round of an
online aggregation run. Regret with respect to an expert is the learner's
cumulative loss minus that expert's; the discounted variant weights each
round's excess by the expert's confidence. For runs without weight sharing
(``alpha = 0``) the discounted regret of every expert is bounded at every
prefix by ``ln(N) / learning_rate``, which :func:`verify_bounds` checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RunSettings",
    "RoundRecord",
    "RegretLedger",
    "BoundReport",
    "BoundScopeError",
    "cumulative_regret",
    "discounted_regret",
    "theoretical_bound",
    "verify_bounds",
]

BOUND_SLACK = 1e-6


class BoundScopeError(RuntimeError):
    """The regret bound is not certified for the run's configuration."""


@dataclass(frozen=True)
class RunSettings:
    """Configuration snapshot stored alongside a ledger."""

    rule: str
    n_experts: int
    learning_rate: float
    alpha: float
    lower: float
    upper: float
    n_cells: int
    confidence: bool = False


@dataclass(frozen=True)
class RoundRecord:
    """Everything observed in one round.

    ``weights`` are the confidence-adjusted normalized weights used to form
    the learner's forecast (NaN on a round where every expert slept).
    ``mix_bound`` is the superprediction value the learner's loss cannot
    exceed under the aggregating rule.
    """

    t: int
    outcome: float
    learner_loss: float
    expert_losses: np.ndarray
    confidences: np.ndarray
    weights: np.ndarray
    mix_bound: float = math.nan
    all_asleep: bool = False


@dataclass
class RegretLedger:
    """Append-only sequence of round records plus the run's settings."""

    settings: RunSettings
    rounds: list[RoundRecord] = field(default_factory=list)

    def append(self, record: RoundRecord) -> None:
        expected = len(self.rounds) + 1
        if record.t != expected:
            raise ValueError(f"round indices must be contiguous: got {record.t}, expected {expected}")
        self.rounds.append(record)

    def __len__(self) -> int:
        return len(self.rounds)

    # -- array views --------------------------------------------------------

    def learner_losses(self) -> np.ndarray:
        return np.array([r.learner_loss for r in self.rounds])

    def expert_losses(self) -> np.ndarray:
        """Shape ``(T, N)``."""
        return np.array([r.expert_losses for r in self.rounds])

    def confidences(self) -> np.ndarray:
        return np.array([r.confidences for r in self.rounds])

    def weights(self) -> np.ndarray:
        return np.array([r.weights for r in self.rounds])

    def outcomes(self) -> np.ndarray:
        return np.array([r.outcome for r in self.rounds])

    def cumulative_regret_curves(self) -> np.ndarray:
        """Shape ``(T, N)``: prefix sums of the learner/expert loss gap."""
        self._require_rounds()
        gap = self.learner_losses()[:, None] - self.expert_losses()
        return np.cumsum(gap, axis=0)

    def discounted_regret_curves(self) -> np.ndarray:
        """Shape ``(T, N)``: prefix sums of the confidence-weighted gap."""
        self._require_rounds()
        gap = self.learner_losses()[:, None] - self.expert_losses()
        return np.cumsum(self.confidences() * gap, axis=0)

    def verify_bounds(
        self, tolerance: float = BOUND_SLACK, strict: bool = False
    ) -> "BoundReport":
        return verify_bounds(self, tolerance, strict)

    def _require_rounds(self) -> None:
        if not self.rounds:
            raise ValueError("ledger is empty")

    def _check_expert(self, expert: int) -> int:
        n = self.settings.n_experts
        if not 0 <= expert < n:
            raise IndexError(f"expert index {expert} out of range for {n} experts")
        return expert


def cumulative_regret(ledger: RegretLedger, expert: int) -> float:
    """Learner's cumulative loss minus expert ``expert``'s (0-based index)."""
    ledger._require_rounds()
    ledger._check_expert(expert)
    return float(ledger.cumulative_regret_curves()[-1, expert])


def discounted_regret(ledger: RegretLedger, expert: int) -> float:
    """Cumulative confidence-weighted excess loss against one expert.

    With all confidences equal to 1 this coincides with
    :func:`cumulative_regret`.
    """
    ledger._require_rounds()
    ledger._check_expert(expert)
    return float(ledger.discounted_regret_curves()[-1, expert])


def theoretical_bound(n_experts: int, learning_rate: float) -> float:
    """Worst-case regret bound ``ln(N) / learning_rate``.

    Evaluates to ``(upper - lower)/2 * ln(N)`` for the aggregating rule and
    ``2 * (upper - lower) * ln(N)`` for the weighted-average rule.
    """
    if n_experts < 1:
        raise ValueError("need at least one expert")
    return math.log(n_experts) / learning_rate


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking prefix regrets against the theoretical bound."""

    bound: float
    max_prefix_regret: np.ndarray
    tolerance: float
    advisory: bool
    passed: bool | None

    @property
    def verdict(self) -> str:
        if self.advisory:
            return "advisory"
        return "pass" if self.passed else "fail"


def verify_bounds(
    ledger: RegretLedger, tolerance: float = BOUND_SLACK, strict: bool = False
) -> BoundReport:
    """Check every expert's discounted regret at every prefix against the bound.

    The bound is only certified for runs without weight sharing; with
    ``alpha > 0`` the report is advisory (no pass/fail verdict), or a
    :class:`BoundScopeError` when ``strict`` is set.
    """
    ledger._require_rounds()
    s = ledger.settings
    bound = theoretical_bound(s.n_experts, s.learning_rate)
    max_prefix = ledger.discounted_regret_curves().max(axis=0)
    if s.alpha > 0.0:
        if strict:
            raise BoundScopeError(
                f"bound not certified for alpha={s.alpha}; rerun with alpha=0"
            )
        return BoundReport(bound, max_prefix, tolerance, advisory=True, passed=None)
    passed = bool(np.all(max_prefix <= bound + tolerance))
    return BoundReport(bound, max_prefix, tolerance, advisory=False, passed=passed)
