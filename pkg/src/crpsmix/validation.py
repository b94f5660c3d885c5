"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .distributions import GridCdf, GridDomain

__all__ = [
    "check_forecast_round",
    "check_forecast_rounds",
    "check_outcome",
]


def check_forecast_round(X, domain: GridDomain) -> list[GridCdf]:
    """Coerce one round of expert forecasts to a list of :class:`GridCdf`.

    Accepts a sequence of ``GridCdf`` on ``domain`` or an ``(N, d)`` array
    of CDF values, one row per expert. Array rows are validated and clamped
    by the ``GridCdf`` constructor.
    """
    if isinstance(X, GridCdf):
        raise ValueError("a round is a sequence of forecasts, got a single GridCdf")
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], GridCdf):
        for f in X:
            if not isinstance(f, GridCdf):
                raise ValueError("mixed forecast types in one round")
            if f.domain != domain:
                raise ValueError("forecast domain does not match the aggregator domain")
        return list(X)
    values = np.asarray(X, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected an (N, d) forecast matrix, got shape {values.shape}")
    return [GridCdf(domain, row) for row in values]


def check_forecast_rounds(X, domain: GridDomain) -> list[list[GridCdf]]:
    """Coerce a batch of rounds: ``(T, N, d)`` array or sequence of rounds."""
    if isinstance(X, np.ndarray):
        if X.ndim != 3:
            raise ValueError(f"expected a (T, N, d) forecast array, got shape {X.shape}")
        return [check_forecast_round(r, domain) for r in X]
    if not isinstance(X, Sequence) or len(X) == 0:
        raise ValueError("expected a non-empty sequence of rounds")
    return [check_forecast_round(r, domain) for r in X]


def check_outcome(y, lower: float, upper: float, lenient: bool = False) -> float:
    """Validate an outcome against the interval; clip instead when lenient."""
    y = float(y)
    if not np.isfinite(y):
        raise ValueError("outcome must be finite")
    if y < lower or y > upper:
        if not lenient:
            raise ValueError(f"outcome {y} outside [{lower}, {upper}]")
        y = min(max(y, lower), upper)
    return y
