"""Triangular-mixture scenario generation and the fixed expert pool."""

import numpy as np
import pytest

from crpsmix.distributions import GridDomain, Triangular, crps
from crpsmix.synthetic import (
    MixtureScenario,
    build_expert_pool,
    sample_sequence,
    schedule_method1,
    schedule_method2,
    segment_leaders,
    weight_schedule,
)


class TestScenario:
    def test_defaults_are_valid(self):
        scen = MixtureScenario(seed=1)
        assert scen.horizon == 3000 and scen.segments == 6
        assert scen.segment_length == 500

    def test_rejects_indivisible_horizon(self):
        with pytest.raises(ValueError, match="divisible"):
            MixtureScenario(seed=1, horizon=100, segments=7)

    def test_rejects_wrong_component_count(self):
        comps = (Triangular(0, 0.5, 1),) * 2
        with pytest.raises(ValueError, match="components"):
            MixtureScenario(seed=1, components=comps)

    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError, match="method"):
            MixtureScenario(seed=1, method=3)

    def test_leaders_cycle(self):
        scen = MixtureScenario(seed=1, horizon=700, segments=7)
        np.testing.assert_array_equal(segment_leaders(scen), [0, 1, 2, 0, 1, 2, 0])


class TestMethod1:
    def test_three_round_example(self):
        scen = MixtureScenario(seed=1, horizon=3, segments=3)
        np.testing.assert_array_equal(
            schedule_method1(scen), [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        )

    def test_rows_are_one_hot(self):
        scen = MixtureScenario(seed=1, horizon=600, segments=6)
        rows = schedule_method1(scen)
        assert np.all(rows.sum(axis=1) == 1.0)
        assert np.all(rows.max(axis=1) == 1.0)

    def test_switches_exactly_at_segment_boundaries(self):
        scen = MixtureScenario(seed=1, horizon=600, segments=6)
        rows = schedule_method1(scen)
        leaders = rows.argmax(axis=1)
        changes = np.flatnonzero(np.diff(leaders)) + 1
        np.testing.assert_array_equal(changes, [100, 200, 300, 400, 500])


class TestMethod2:
    SCEN = MixtureScenario(seed=1, horizon=600, segments=6, method=2)

    def test_one_hot_at_segment_centers(self):
        rows = schedule_method2(self.SCEN)
        length = self.SCEN.segment_length
        for k, lead in enumerate(segment_leaders(self.SCEN)):
            center = k * length + length // 2
            assert rows[center, lead] == 1.0
            assert rows[center].sum() == 1.0

    def test_half_mix_at_segment_boundary(self):
        rows = schedule_method2(self.SCEN)
        # Boundary between segments 0 and 1 sits midway between their centers.
        np.testing.assert_allclose(rows[100], [0.5, 0.5, 0.0], atol=1e-12)

    def test_rows_are_probability_vectors(self):
        rows = schedule_method2(self.SCEN)
        np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-12)
        assert rows.min() >= 0.0

    def test_strictly_mixed_between_centers(self):
        rows = schedule_method2(self.SCEN)
        length = self.SCEN.segment_length
        inter = rows[length // 2 + 1 : length + length // 2]
        assert np.all(inter.max(axis=1) < 1.0)

    def test_constant_outside_first_and_last_centers(self):
        rows = schedule_method2(self.SCEN)
        assert np.all(rows[: self.SCEN.segment_length // 2, 0] == 1.0)
        assert np.all(rows[-(self.SCEN.segment_length - self.SCEN.segment_length // 2) :].argmax(axis=1) == rows[-1].argmax())


class TestSampling:
    def test_deterministic_given_seed(self):
        scen = MixtureScenario(seed=99, horizon=300, segments=3)
        sched = weight_schedule(scen)
        np.testing.assert_array_equal(
            sample_sequence(scen, sched), sample_sequence(scen, sched)
        )

    def test_one_hot_schedule_respects_support(self):
        scen = MixtureScenario(seed=5, horizon=900, segments=3)
        rows = schedule_method1(scen)
        draws = sample_sequence(scen, rows)
        for k, lead in enumerate(segment_leaders(scen)):
            seg = draws[k * 300 : (k + 1) * 300]
            comp = scen.components[lead]
            assert seg.min() >= comp.lower and seg.max() <= comp.upper

    def test_empirical_cdf_matches_closed_form(self):
        # Static leader: all mass on component 0 for the whole horizon.
        scen = MixtureScenario(seed=7, horizon=100_000, segments=1)
        draws = np.sort(sample_sequence(scen, schedule_method1(scen)))
        n = len(draws)
        theory = scen.components[0].cdf(draws)
        empirical_hi = np.arange(1, n + 1) / n
        empirical_lo = np.arange(0, n) / n
        ks = max(
            np.abs(empirical_hi - theory).max(), np.abs(theory - empirical_lo).max()
        )
        assert ks < 0.01

    def test_shape_mismatch_rejected(self):
        scen = MixtureScenario(seed=5, horizon=300, segments=3)
        with pytest.raises(ValueError, match="schedule"):
            sample_sequence(scen, np.ones((10, 3)))


class TestExpertPool:
    def test_three_valid_fixed_forecasts(self):
        scen = MixtureScenario(seed=1)
        dom = GridDomain(0.0, 1.0, 128)
        pool = build_expert_pool(scen, dom)
        assert len(pool) == 3
        for f in pool:
            assert f.values[-1] == 1.0
            assert np.all(np.diff(f.values) >= 0)

    def test_leader_expert_has_lowest_segment_loss(self):
        scen = MixtureScenario(seed=21, horizon=3000, segments=6)
        dom = GridDomain(0.0, 1.0, 256)
        pool = build_expert_pool(scen, dom)
        draws = sample_sequence(scen, schedule_method1(scen))
        length = scen.segment_length
        for k, lead in enumerate(segment_leaders(scen)):
            seg = draws[k * length : (k + 1) * length]
            means = [np.mean([crps(f, y) for y in seg]) for f in pool]
            assert int(np.argmin(means)) == lead
