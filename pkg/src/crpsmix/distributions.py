"""Probability distribution functions on a bounded interval and the CRPS loss.

Forecasts are cumulative distribution functions on ``[lower, upper]``. They
are represented on a uniform grid of cells: a :class:`GridCdf` stores the CDF
value at the right endpoint of each cell, which makes the continuous ranked
probability score a weighted sum of squared differences against a binary
step vector. Parametric families (point mass, uniform, triangular, truncated
Gaussian mixture) evaluate their CDF in closed form and are rendered onto a
grid with :func:`discretize`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

__all__ = [
    "GridDomain",
    "GridCdf",
    "PointMass",
    "Uniform",
    "Triangular",
    "TruncatedGaussianMixture",
    "parse_distribution",
    "discretize",
    "heaviside_grid",
    "crps",
    "crps_refined",
    "crps_at_grid_outcomes",
]

# Pre-clamp violations of monotonicity / range larger than this are treated
# as corrupt input rather than floating-point wobble.
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class GridDomain:
    """Uniform grid of ``n_cells`` cells covering ``[lower, upper]``.

    The grid points are ``lower + s * cell_width`` for ``s = 0 .. n_cells``;
    :attr:`points` holds the right endpoints (``s = 1 .. n_cells``), with the
    last point pinned to ``upper`` exactly.
    """

    lower: float
    upper: float
    n_cells: int
    cell_width: float = field(init=False, compare=False, repr=False)
    points: np.ndarray = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        lower = float(self.lower)
        upper = float(self.upper)
        n = int(self.n_cells)
        if not (np.isfinite(lower) and np.isfinite(upper) and lower < upper):
            raise ValueError(f"need lower < upper, got [{lower}, {upper}]")
        if n < 2:
            raise ValueError(f"need at least 2 grid cells, got {n}")
        width = (upper - lower) / n
        points = lower + width * np.arange(1, n + 1)
        points[-1] = upper
        points.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "n_cells", n)
        object.__setattr__(self, "cell_width", width)
        object.__setattr__(self, "points", points)

    @property
    def width(self) -> float:
        """Length of the interval, ``upper - lower``."""
        return self.upper - self.lower

    def with_cells(self, n_cells: int) -> "GridDomain":
        """Same interval on a grid of ``n_cells`` cells."""
        return GridDomain(self.lower, self.upper, n_cells)

    def contains(self, y: float) -> bool:
        return self.lower <= y <= self.upper


class GridCdf:
    """A CDF sampled at the right grid endpoints of a :class:`GridDomain`.

    ``values[s-1]`` is the CDF value on the cell ending at grid point
    ``z_s``; the sequence is non-decreasing in ``[0, 1]`` and ends at
    exactly 1. Construction tolerates floating-point wobble up to
    ``CLAMP_TOL`` and repairs it (running maximum, clip, pin the last
    value); larger violations raise ``ValueError``.
    """

    __slots__ = ("domain", "values")

    def __init__(self, domain: GridDomain, values: np.ndarray | Sequence[float]):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (domain.n_cells,):
            raise ValueError(
                f"expected {domain.n_cells} CDF values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("CDF values must be finite")
        if values.min() < -CLAMP_TOL or values.max() > 1.0 + CLAMP_TOL:
            raise ValueError("CDF values outside [0, 1] beyond tolerance")
        if np.diff(values).min() < -CLAMP_TOL:
            raise ValueError("CDF values decrease beyond tolerance")
        if abs(values[-1] - 1.0) > CLAMP_TOL:
            raise ValueError(f"CDF must reach 1 at the upper endpoint, got {values[-1]!r}")
        values = np.clip(np.maximum.accumulate(values), 0.0, 1.0)
        values[-1] = 1.0
        values.setflags(write=False)
        self.domain = domain
        self.values = values

    def __repr__(self) -> str:  # pragma: no cover
        dom = self.domain
        return f"GridCdf([{dom.lower}, {dom.upper}], n_cells={dom.n_cells})"


# ---------------------------------------------------------------------------
# Parametric families
# ---------------------------------------------------------------------------


class PointMass:
    """Distribution concentrated at a single location.

    The CDF is the Heaviside step ``1{u >= location}``.
    """

    kind = "point"

    def __init__(self, location: float):
        location = float(location)
        if not np.isfinite(location):
            raise ValueError("location must be finite")
        self.location = location

    def cdf(self, u):
        return (np.asarray(u, dtype=np.float64) >= self.location).astype(np.float64)

    def support(self) -> tuple[float, float]:
        return self.location, self.location

    def params(self) -> tuple[float, ...]:
        return (self.location,)

    def __repr__(self) -> str:  # pragma: no cover
        return f"PointMass({self.location})"


class Uniform:
    """Uniform distribution on ``[lower, upper]`` with the linear CDF."""

    kind = "uniform"

    def __init__(self, lower: float, upper: float):
        lower, upper = float(lower), float(upper)
        if not (np.isfinite(lower) and np.isfinite(upper) and lower < upper):
            raise ValueError(f"need lower < upper, got [{lower}, {upper}]")
        self.lower = lower
        self.upper = upper

    def cdf(self, u):
        u = np.asarray(u, dtype=np.float64)
        return np.clip((u - self.lower) / (self.upper - self.lower), 0.0, 1.0)

    def support(self) -> tuple[float, float]:
        return self.lower, self.upper

    def params(self) -> tuple[float, ...]:
        return (self.lower, self.upper)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Uniform({self.lower}, {self.upper})"


class Triangular:
    """Triangular distribution with support ``[lower, upper]`` and peak ``mode``.

    Closed-form CDF: ``(u-l)^2 / ((r-l)(m-l))`` left of the mode and
    ``1 - (r-u)^2 / ((r-l)(r-m))`` right of it. Degenerate peaks at either
    endpoint are allowed (``lower <= mode <= upper``, ``lower < upper``).
    """

    kind = "triangular"

    def __init__(self, lower: float, mode: float, upper: float):
        lower, mode, upper = float(lower), float(mode), float(upper)
        if not (np.isfinite(lower) and np.isfinite(mode) and np.isfinite(upper)):
            raise ValueError("parameters must be finite")
        if not (lower <= mode <= upper and lower < upper):
            raise ValueError(
                f"need lower <= mode <= upper and lower < upper, got ({lower}, {mode}, {upper})"
            )
        self.lower = lower
        self.mode = mode
        self.upper = upper

    def cdf(self, u):
        u = np.asarray(u, dtype=np.float64)
        l, m, r = self.lower, self.mode, self.upper
        span = r - l
        left = np.zeros_like(u) if m == l else (u - l) ** 2 / (span * (m - l))
        right = np.ones_like(u) if m == r else 1.0 - (r - u) ** 2 / (span * (r - m))
        out = np.where(u <= m, left, right)
        return np.clip(np.where(u <= l, 0.0, np.where(u >= r, 1.0, out)), 0.0, 1.0)

    def support(self) -> tuple[float, float]:
        return self.lower, self.upper

    def params(self) -> tuple[float, ...]:
        return (self.lower, self.mode, self.upper)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Triangular({self.lower}, {self.mode}, {self.upper})"


class TruncatedGaussianMixture:
    """Gaussian mixture restricted and renormalized to ``[lower, upper]``.

    ``components`` is a sequence of ``(weight, mean, std)`` triples with
    non-negative weights summing to 1 and positive standard deviations.
    The CDF is ``(F(u) - F(lower)) / (F(upper) - F(lower))`` where ``F`` is
    the untruncated mixture CDF. Components with less than ``1e-6`` of
    their mass inside the interval are rejected: such a component would be
    almost entirely an artifact of renormalization.
    """

    kind = "gaussmix"

    MIN_COMPONENT_MASS = 1e-6

    def __init__(
        self,
        components: Sequence[tuple[float, float, float]],
        lower: float,
        upper: float,
    ):
        lower, upper = float(lower), float(upper)
        if not (np.isfinite(lower) and np.isfinite(upper) and lower < upper):
            raise ValueError(f"need lower < upper, got [{lower}, {upper}]")
        comp = np.asarray(components, dtype=np.float64)
        if comp.ndim != 2 or comp.shape[1] != 3 or comp.shape[0] == 0:
            raise ValueError("components must be a non-empty sequence of (weight, mean, std)")
        weights, means, stds = comp[:, 0], comp[:, 1], comp[:, 2]
        if np.any(weights < 0):
            raise ValueError("component weights must be non-negative")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"component weights must sum to 1, got {weights.sum()!r}")
        if np.any(stds <= 0):
            raise ValueError("component std must be positive")
        inside = ndtr((upper - means) / stds) - ndtr((lower - means) / stds)
        if np.any(inside < self.MIN_COMPONENT_MASS):
            raise ValueError(
                "component carries almost no mass inside the interval; "
                "widen the interval or drop the component"
            )
        self.weights = weights / weights.sum()
        self.means = means
        self.stds = stds
        self.lower = lower
        self.upper = upper
        self._mass_low = self._raw_cdf(lower)
        self._mass_span = self._raw_cdf(upper) - self._mass_low

    def _raw_cdf(self, u):
        u = np.asarray(u, dtype=np.float64)
        z = (u[..., None] - self.means) / self.stds
        return ndtr(z) @ self.weights

    def cdf(self, u):
        out = (self._raw_cdf(u) - self._mass_low) / self._mass_span
        return np.clip(out, 0.0, 1.0)

    def support(self) -> tuple[float, float]:
        return self.lower, self.upper

    def params(self) -> tuple[float, ...]:
        return tuple(
            np.column_stack([self.weights, self.means, self.stds]).ravel().tolist()
        )

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"TruncatedGaussianMixture({len(self.weights)} components, "
            f"[{self.lower}, {self.upper}])"
        )


ParametricDistribution = PointMass | Uniform | Triangular | TruncatedGaussianMixture


def parse_distribution(
    kind: str, params: Sequence[float], lower: float, upper: float
) -> ParametricDistribution:
    """Build a parametric distribution from its wire encoding.

    ``params`` is the flat positional parameter list used in run configs and
    forecast CSV files: ``point: (location)``, ``uniform: (lower, upper)``,
    ``triangular: (lower, mode, upper)``, ``gaussmix: (weight, mean, std)
    triples``. ``lower``/``upper`` give the outcome interval, used as the
    truncation interval for ``gaussmix``.
    """
    params = [float(p) for p in params]
    if kind == "point":
        if len(params) != 1:
            raise ValueError(f"point takes 1 parameter, got {len(params)}")
        return PointMass(params[0])
    if kind == "uniform":
        if len(params) != 2:
            raise ValueError(f"uniform takes 2 parameters, got {len(params)}")
        return Uniform(params[0], params[1])
    if kind == "triangular":
        if len(params) != 3:
            raise ValueError(f"triangular takes 3 parameters, got {len(params)}")
        return Triangular(params[0], params[1], params[2])
    if kind == "gaussmix":
        if len(params) == 0 or len(params) % 3 != 0:
            raise ValueError("gaussmix takes (weight, mean, std) triples")
        comp = np.asarray(params, dtype=np.float64).reshape(-1, 3)
        return TruncatedGaussianMixture(comp, lower, upper)
    raise ValueError(f"unknown distribution kind {kind!r}")


# ---------------------------------------------------------------------------
# Grid operations
# ---------------------------------------------------------------------------


def discretize(dist: ParametricDistribution, domain: GridDomain) -> GridCdf:
    """Sample a parametric CDF at the right grid endpoints of ``domain``.

    The support of ``dist`` must lie inside the domain interval. The final
    value is pinned to exactly 1 before the monotone clamp.
    """
    lo, hi = dist.support()
    if lo < domain.lower - CLAMP_TOL or hi > domain.upper + CLAMP_TOL:
        raise ValueError(
            f"distribution support [{lo}, {hi}] outside domain "
            f"[{domain.lower}, {domain.upper}]"
        )
    values = np.asarray(dist.cdf(domain.points), dtype=np.float64).copy()
    values[-1] = 1.0
    return GridCdf(domain, values)


def heaviside_grid(outcome: float, domain: GridDomain) -> np.ndarray:
    """Binary vector with component ``s`` equal to ``1{z_s >= outcome}``.

    This is the grid rendering of the perfect forecast concentrated at the
    outcome; it is non-decreasing in ``s``.
    """
    _check_outcome(outcome, domain)
    return (domain.points >= outcome).astype(np.float64)


def _check_outcome(outcome: float, domain: GridDomain) -> None:
    if not np.isfinite(outcome):
        raise ValueError("outcome must be finite")
    if not domain.contains(outcome):
        raise ValueError(
            f"outcome {outcome} outside [{domain.lower}, {domain.upper}]"
        )


def crps(forecast: GridCdf, outcome: float) -> float:
    """Continuous ranked probability score of a grid CDF at an outcome.

    ``cell_width * sum_s (f_s - 1{z_s >= y})^2``, summed in ascending grid
    order. The result lies in ``[0, upper - lower]`` and is 0 exactly when
    the forecast is the step function at the outcome.
    """
    domain = forecast.domain
    _check_outcome(outcome, domain)
    diff = forecast.values - (domain.points >= outcome)
    return domain.cell_width * float(np.sum(diff * diff))


def crps_refined(
    dist: ParametricDistribution,
    outcome: float,
    lower: float,
    upper: float,
    n_cells: int,
) -> float:
    """CRPS of a parametric forecast on a fresh grid of ``n_cells`` cells.

    Convenience path for convergence checks: the score changes by at most
    ``2 * (upper - lower) / n_cells`` when the cell count doubles.
    """
    domain = GridDomain(lower, upper, n_cells)
    return crps(discretize(dist, domain), outcome)


def crps_at_grid_outcomes(forecast: GridCdf) -> np.ndarray:
    """CRPS of ``forecast`` at every grid point outcome, as a length-d vector.

    Entry ``k`` (0-based) is ``crps(forecast, z_{k+1})``. For the outcome
    ``z_j`` the step vector is 1 from position ``j`` on, so the score splits
    into a prefix sum of ``f^2`` and a suffix sum of ``(1-f)^2``, both
    computed with cumulative sums in ascending order.
    """
    f = forecast.values
    head = np.concatenate(([0.0], np.cumsum(f * f)[:-1]))
    tail = np.cumsum(((1.0 - f) * (1.0 - f))[::-1])[::-1]
    return forecast.domain.cell_width * (head + tail)
