"""Shared helpers: random forecast distributions and grid CDFs."""

import numpy as np

from crpsmix.distributions import (
    GridCdf,
    PointMass,
    Triangular,
    TruncatedGaussianMixture,
    Uniform,
)


def random_distribution(rng, lower=0.0, upper=1.0):
    """Random parametric forecast with support inside [lower, upper]."""
    width = upper - lower
    u = rng.random()
    if u < 0.15:
        return PointMass(rng.uniform(lower, upper))
    if u < 0.45:
        left = rng.uniform(lower, lower + 0.9 * width)
        right = rng.uniform(left + 0.05 * width, upper)
        return Uniform(left, right)
    if u < 0.80:
        left = rng.uniform(lower, lower + 0.9 * width)
        right = rng.uniform(left + 0.05 * width, upper)
        return Triangular(left, rng.uniform(left, right), right)
    k = int(rng.integers(1, 4))
    comps = np.column_stack(
        [
            rng.dirichlet(np.ones(k)),
            rng.uniform(lower, upper, k),
            rng.uniform(0.03 * width, 0.4 * width, k),
        ]
    )
    return TruncatedGaussianMixture(comps, lower, upper)


def random_grid_cdf(rng, domain) -> GridCdf:
    """Random valid CDF values: sorted uniforms scaled to end at 1."""
    values = np.sort(rng.random(domain.n_cells))
    return GridCdf(domain, values / values[-1])
