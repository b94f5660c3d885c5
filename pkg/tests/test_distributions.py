"""Grid construction, parametric CDFs, and the CRPS score."""

import numpy as np
import pytest
import sympy as sp

from conftest import random_distribution, random_grid_cdf
from crpsmix.distributions import (
    GridCdf,
    GridDomain,
    PointMass,
    Triangular,
    TruncatedGaussianMixture,
    Uniform,
    crps,
    crps_at_grid_outcomes,
    crps_refined,
    discretize,
    heaviside_grid,
    parse_distribution,
)


def symbolic_crps(cdf_expr, var, outcome, lower, upper) -> float:
    """Independent oracle: exact integral of (F(u) - 1{u >= y})^2 du."""
    below = sp.integrate(cdf_expr**2, (var, lower, outcome))
    above = sp.integrate((cdf_expr - 1) ** 2, (var, outcome, upper))
    return float(below + above)


class TestGridDomain:
    def test_endpoints_exact(self):
        dom = GridDomain(0.0, 1.0, 3)
        assert dom.points[-1] == 1.0
        assert dom.cell_width == pytest.approx(1.0 / 3.0, abs=0)
        np.testing.assert_allclose(dom.points[:-1], [1 / 3, 2 / 3], rtol=1e-15)

    def test_width_and_with_cells(self):
        dom = GridDomain(-2.0, 3.0, 10)
        assert dom.width == 5.0
        assert dom.with_cells(20) == GridDomain(-2.0, 3.0, 20)

    @pytest.mark.parametrize("args", [(1.0, 1.0, 4), (2.0, 1.0, 4), (0.0, 1.0, 1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            GridDomain(*args)


class TestGridCdf:
    def test_clamp_repairs_wobble(self):
        dom = GridDomain(0.0, 1.0, 4)
        f = GridCdf(dom, [-1e-12, 0.5, 0.5 - 1e-12, 1.0 + 1e-12])
        assert f.values[0] == 0.0
        assert f.values[2] >= f.values[1]
        assert f.values[-1] == 1.0
        assert np.all(np.diff(f.values) >= 0)

    @pytest.mark.parametrize(
        "values",
        [
            [0.0, 0.5, 1.5, 1.0],        # out of range
            [0.0, 0.6, 0.4, 1.0],        # decreasing
            [0.0, 0.3, 0.6, 0.9],        # does not reach 1
            [0.0, 0.5, np.nan, 1.0],     # not finite
            [0.0, 1.0],                  # wrong length
        ],
    )
    def test_rejects_corrupt_values(self, values):
        with pytest.raises(ValueError):
            GridCdf(GridDomain(0.0, 1.0, 4), values)

    def test_values_read_only(self):
        f = random_grid_cdf(np.random.default_rng(0), GridDomain(0.0, 1.0, 8))
        with pytest.raises(ValueError):
            f.values[0] = 0.5


class TestParametricCdfs:
    def test_point_mass_is_step(self):
        d = PointMass(0.3)
        assert d.cdf(0.2) == 0.0
        assert d.cdf(0.3) == 1.0
        assert d.cdf(0.9) == 1.0

    def test_uniform_identity_cdf(self):
        assert Uniform(0.0, 1.0).cdf(0.25) == pytest.approx(0.25, abs=0)

    def test_triangular_symmetric_median(self):
        assert Triangular(0.0, 0.5, 1.0).cdf(0.5) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("mode", [0.0, 1.0])
    def test_triangular_degenerate_peak(self, mode):
        d = Triangular(0.0, mode, 1.0)
        assert d.cdf(0.0) == 0.0
        assert d.cdf(1.0) == 1.0

    def test_gaussmix_renormalized_endpoints(self):
        d = TruncatedGaussianMixture([(0.4, 0.2, 0.3), (0.6, 0.7, 0.1)], 0.0, 1.0)
        assert d.cdf(0.0) == pytest.approx(0.0, abs=1e-15)
        assert d.cdf(1.0) == pytest.approx(1.0, abs=1e-15)

    def test_gaussmix_rejects_negligible_component(self):
        with pytest.raises(ValueError, match="mass"):
            TruncatedGaussianMixture([(0.5, 50.0, 0.1), (0.5, 0.5, 0.1)], 0.0, 1.0)

    @pytest.mark.parametrize(
        "comps",
        [
            [(0.5, 0.5, 0.1)],                      # weights sum to 0.5
            [(1.0, 0.5, 0.0)],                      # zero std
            [(-0.5, 0.5, 0.1), (1.5, 0.5, 0.1)],    # negative weight
        ],
    )
    def test_gaussmix_rejects_bad_parameters(self, comps):
        with pytest.raises(ValueError):
            TruncatedGaussianMixture(comps, 0.0, 1.0)

    @pytest.mark.parametrize("ctor", [lambda: Uniform(0.5, 0.5), lambda: Triangular(0.3, 0.2, 0.5)])
    def test_rejects_bad_support(self, ctor):
        with pytest.raises(ValueError):
            ctor()

    def test_cdf_non_decreasing(self):
        rng = np.random.default_rng(42)
        u = np.linspace(0.0, 1.0, 257)
        for _ in range(50):
            values = random_distribution(rng).cdf(u)
            assert np.diff(values).min() >= -1e-12

    def test_parse_round_trip(self):
        for dist in (PointMass(0.3), Uniform(0.1, 0.8), Triangular(0.0, 0.4, 0.9)):
            again = parse_distribution(dist.kind, dist.params(), 0.0, 1.0)
            assert again.params() == dist.params()

    def test_parse_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown"):
            parse_distribution("cauchy", [0.0, 1.0], 0.0, 1.0)

    def test_parse_rejects_wrong_arity(self):
        with pytest.raises(ValueError):
            parse_distribution("triangular", [0.0, 1.0], 0.0, 1.0)


class TestDiscretize:
    def test_uniform_linear_values(self):
        got = discretize(Uniform(0.0, 1.0), GridDomain(0.0, 1.0, 4))
        np.testing.assert_array_equal(got.values, [0.25, 0.5, 0.75, 1.0])

    def test_point_mass_at_upper_endpoint(self):
        got = discretize(PointMass(1.0), GridDomain(0.0, 1.0, 4))
        np.testing.assert_array_equal(got.values, [0.0, 0.0, 0.0, 1.0])

    def test_symmetric_triangle_closed_form(self):
        # F(u) = 2u^2 below the peak, 1 - 2(1-u)^2 above it.
        got = discretize(Triangular(0.0, 0.5, 1.0), GridDomain(0.0, 1.0, 4))
        np.testing.assert_allclose(got.values, [0.125, 0.5, 0.875, 1.0], rtol=1e-15)

    def test_rejects_support_outside_domain(self):
        with pytest.raises(ValueError, match="support"):
            discretize(Uniform(-0.5, 0.5), GridDomain(0.0, 1.0, 8))

    def test_always_valid_cdf(self):
        rng = np.random.default_rng(7)
        dom = GridDomain(0.0, 1.0, 64)
        for _ in range(50):
            f = discretize(random_distribution(rng), dom)
            assert f.values[-1] == 1.0
            assert np.all(np.diff(f.values) >= 0)
            assert f.values[0] >= 0.0


class TestHeavisideGrid:
    def test_lower_endpoint_all_ones(self):
        dom = GridDomain(0.0, 1.0, 8)
        np.testing.assert_array_equal(heaviside_grid(0.0, dom), np.ones(8))

    def test_upper_endpoint_last_only(self):
        dom = GridDomain(0.0, 1.0, 4)
        np.testing.assert_array_equal(heaviside_grid(1.0, dom), [0, 0, 0, 1])

    def test_interior_outcome(self):
        dom = GridDomain(0.0, 1.0, 4)
        np.testing.assert_array_equal(heaviside_grid(0.6, dom), [0, 0, 1, 1])

    def test_non_decreasing_components(self):
        dom = GridDomain(0.0, 2.0, 33)
        rng = np.random.default_rng(3)
        for _ in range(20):
            steps = heaviside_grid(rng.uniform(0.0, 2.0), dom)
            assert np.all(np.diff(steps) >= 0)

    def test_rejects_outcome_outside(self):
        with pytest.raises(ValueError):
            heaviside_grid(1.5, GridDomain(0.0, 1.0, 4))


class TestCrps:
    def test_perfect_forecast_scores_zero(self):
        dom = GridDomain(0.0, 1.0, 64)
        for y in (0.0, 0.31, 0.5, 1.0):
            assert crps(discretize(PointMass(y), dom), y) == 0.0

    @pytest.mark.parametrize("n_cells", [4, 64, 1024])
    def test_constant_half_forecast(self, n_cells):
        dom = GridDomain(0.0, 1.0, n_cells)
        values = np.full(n_cells, 0.5)
        values[-1] = 1.0
        expected = 0.25 * (n_cells - 1) / n_cells
        assert crps(GridCdf(dom, values), 0.0) == pytest.approx(expected, rel=1e-12)

    def test_uniform_against_symbolic_oracle(self):
        u = sp.Symbol("u")
        oracle = symbolic_crps(u, u, sp.Rational(1, 2), 0, 1)
        assert oracle == pytest.approx(1.0 / 12.0, abs=1e-15)
        got = crps(discretize(Uniform(0.0, 1.0), GridDomain(0.0, 1.0, 1024)), 0.5)
        assert got == pytest.approx(oracle, abs=2e-3)

    def test_triangle_against_symbolic_oracle(self):
        u = sp.Symbol("u")
        expr = sp.Piecewise((2 * u**2, u <= sp.Rational(1, 2)), (1 - 2 * (1 - u) ** 2, True))
        oracle = symbolic_crps(expr, u, sp.Rational(3, 10), 0, 1)
        n_cells = 8192
        got = crps(discretize(Triangular(0.0, 0.5, 1.0), GridDomain(0.0, 1.0, n_cells)), 0.3)
        assert got == pytest.approx(oracle, abs=4.0 / n_cells)

    def test_score_within_interval_range(self):
        rng = np.random.default_rng(11)
        dom = GridDomain(-1.0, 3.0, 128)
        for _ in range(50):
            score = crps(random_grid_cdf(rng, dom), rng.uniform(-1.0, 3.0))
            assert 0.0 <= score <= dom.width

    def test_affine_rescaling(self):
        rng = np.random.default_rng(19)
        lower, upper = 2.0, 7.0
        scale = upper - lower
        dom_unit = GridDomain(0.0, 1.0, 256)
        dom_wide = GridDomain(lower, upper, 256)
        for _ in range(20):
            base = random_distribution(rng)
            if isinstance(base, PointMass):
                wide = PointMass(lower + scale * base.location)
            elif isinstance(base, Uniform):
                wide = Uniform(lower + scale * base.lower, lower + scale * base.upper)
            elif isinstance(base, Triangular):
                wide = Triangular(
                    lower + scale * base.lower,
                    lower + scale * base.mode,
                    lower + scale * base.upper,
                )
            else:
                comps = np.column_stack(
                    [base.weights, lower + scale * base.means, scale * base.stds]
                )
                wide = TruncatedGaussianMixture(comps, lower, upper)
            y = rng.random()
            unit_score = crps(discretize(base, dom_unit), y)
            wide_score = crps(discretize(wide, dom_wide), lower + scale * y)
            assert wide_score == pytest.approx(scale * unit_score, rel=1e-12, abs=1e-13)

    def test_rejects_outcome_outside(self):
        dom = GridDomain(0.0, 1.0, 8)
        with pytest.raises(ValueError):
            crps(random_grid_cdf(np.random.default_rng(0), dom), 1.2)


class TestCrpsRefined:
    def test_uniform_fine_grid(self):
        got = crps_refined(Uniform(0.0, 1.0), 0.5, 0.0, 1.0, 2**16)
        assert got == pytest.approx(1.0 / 12.0, abs=1e-4)

    def test_point_mass_always_zero(self):
        for n_cells in (2, 17, 4096):
            assert crps_refined(PointMass(0.4), 0.4, 0.0, 1.0, n_cells) == 0.0

    def test_grid_refinement_gap(self):
        rng = np.random.default_rng(23)
        n_cells = 128
        budget = 2.0 / n_cells
        for _ in range(100):
            dist = random_distribution(rng)
            y = rng.random()
            coarse = crps_refined(dist, y, 0.0, 1.0, n_cells)
            fine = crps_refined(dist, y, 0.0, 1.0, 2 * n_cells)
            assert abs(coarse - fine) <= budget


class TestCrpsAtGridOutcomes:
    def test_matches_scalar_crps(self):
        rng = np.random.default_rng(31)
        dom = GridDomain(0.0, 2.0, 97)
        f = random_grid_cdf(rng, dom)
        profile = crps_at_grid_outcomes(f)
        expected = np.array([crps(f, z) for z in dom.points])
        np.testing.assert_allclose(profile, expected, atol=1e-12)
