"""Synthetic benchmark: outcomes from a time-varying triangular mixture.

A scenario mixes three triangular distributions over a horizon split into
equal segments. Method 1 hands full weight to one component per segment
(leadership rotates); Method 2 cross-fades linearly between consecutive
leaders so the mixture drifts instead of jumping. Three experts each stick
to one fixed component, so the best expert changes with the leadership.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import GridCdf, GridDomain, Triangular, discretize

__all__ = [
    "RNG_ALGORITHM",
    "MixtureScenario",
    "default_components",
    "schedule_method1",
    "schedule_method2",
    "weight_schedule",
    "sample_sequence",
    "build_expert_pool",
    "segment_leaders",
]

RNG_ALGORITHM = "numpy PCG64"

N_COMPONENTS = 3


def default_components(lower: float = 0.0, upper: float = 1.0) -> tuple[Triangular, ...]:
    """Three overlapping triangles with peaks at the quartiles of the interval."""
    width = upper - lower
    peaks = (0.25, 0.5, 0.75)
    half_base = 0.25 * width
    return tuple(
        Triangular(
            max(lower, lower + p * width - half_base),
            lower + p * width,
            min(upper, lower + p * width + half_base),
        )
        for p in peaks
    )


@dataclass(frozen=True)
class MixtureScenario:
    """Data-generating recipe: components, horizon, segmentation, mixing method.

    ``seed`` is required explicitly; there is no wall-clock fallback, so a
    scenario always reproduces its sequence.
    """

    seed: int
    components: tuple[Triangular, ...] = field(default_factory=default_components)
    horizon: int = 3000
    segments: int = 6
    method: int = 1

    def __post_init__(self) -> None:
        if len(self.components) != N_COMPONENTS:
            raise ValueError(f"need exactly {N_COMPONENTS} components")
        if self.segments < 1 or self.horizon < 1:
            raise ValueError("horizon and segments must be positive")
        if self.horizon % self.segments != 0:
            raise ValueError(
                f"horizon {self.horizon} not divisible into {self.segments} segments"
            )
        if self.method not in (1, 2):
            raise ValueError(f"method must be 1 or 2, got {self.method}")

    @property
    def segment_length(self) -> int:
        return self.horizon // self.segments


def segment_leaders(scenario: MixtureScenario) -> np.ndarray:
    """Leader component per segment: cycles 0, 1, 2, 0, ..."""
    return np.arange(scenario.segments) % N_COMPONENTS


def schedule_method1(scenario: MixtureScenario) -> np.ndarray:
    """One-hot weights: within each segment the leader gets weight 1."""
    leaders = segment_leaders(scenario)
    rows = np.zeros((scenario.horizon, N_COMPONENTS))
    per_round = np.repeat(leaders, scenario.segment_length)
    rows[np.arange(scenario.horizon), per_round] = 1.0
    return rows


def schedule_method2(scenario: MixtureScenario) -> np.ndarray:
    """Smoothly varying weights: linear cross-fade between segment leaders.

    The weight vector equals the leader's one-hot exactly at each segment
    center and interpolates linearly between consecutive centers, staying
    constant before the first and after the last center. Rows remain
    probability vectors because interpolation is convex.
    """
    leaders = segment_leaders(scenario)
    length = scenario.segment_length
    centers = np.arange(scenario.segments) * length + length // 2
    onehot = np.eye(N_COMPONENTS)[leaders]
    t = np.arange(scenario.horizon)
    rows = np.column_stack(
        [np.interp(t, centers, onehot[:, c]) for c in range(N_COMPONENTS)]
    )
    return rows


def weight_schedule(scenario: MixtureScenario) -> np.ndarray:
    return schedule_method1(scenario) if scenario.method == 1 else schedule_method2(scenario)


def sample_sequence(scenario: MixtureScenario, schedule: np.ndarray) -> np.ndarray:
    """Draw one outcome per round: pick a component, then sample it.

    Component choice inverts the schedule row's CDF; the triangular draw
    uses the generator's inverse-CDF sampler. Fully determined by the
    scenario seed (generator: ``RNG_ALGORITHM``).
    """
    if schedule.shape != (scenario.horizon, N_COMPONENTS):
        raise ValueError(f"schedule shape {schedule.shape} does not match scenario")
    rng = np.random.default_rng(scenario.seed)
    cut = np.cumsum(schedule, axis=1)
    picks = np.minimum(
        (rng.random(scenario.horizon)[:, None] >= cut).sum(axis=1), N_COMPONENTS - 1
    )
    left = np.array([c.lower for c in scenario.components])[picks]
    mode = np.array([c.mode for c in scenario.components])[picks]
    right = np.array([c.upper for c in scenario.components])[picks]
    return rng.triangular(left, mode, right)


def build_expert_pool(scenario: MixtureScenario, domain: GridDomain) -> list[GridCdf]:
    """One fixed forecast per component, re-emitted unchanged every round."""
    return [discretize(c, domain) for c in scenario.components]
