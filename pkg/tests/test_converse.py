"""Converse bounds: frozen arithmetic examples, identities, and dominance."""

import math
from fractions import Fraction

import numpy as np
import pytest

from codedcache.baselines import baseline_parameters
from codedcache.converse import (
    ActiveSet,
    ConverseValue,
    converse_average,
    converse_average_uniform,
    converse_worst_case,
    stirling2,
)
from codedcache.loads import average_load, worst_case_load
from codedcache.model import ScenarioError, SystemInstance
from codedcache.smooth import project_feasible


def make_instance(file_sizes, cache_sizes, tier_user_counts, popularity=None):
    v = np.asarray(file_sizes, dtype=float)
    if popularity is None:
        popularity = np.full(v.size, 1.0 / v.size)
    return SystemInstance(
        file_sizes=v,
        cache_sizes=np.asarray(cache_sizes, dtype=float),
        tier_user_counts=tuple(tier_user_counts),
        popularity=np.asarray(popularity, dtype=float),
    )


def oracle_stirling(m, j):
    """Inclusion-exclusion count of surjections divided by j!."""
    if j == 0:
        return 1 if m == 0 else 0
    total = sum(
        (-1) ** r * math.comb(j, r) * (j - r) ** m for r in range(j + 1)
    )
    return total // math.factorial(j)


class TestStirling:
    def test_frozen_values(self):
        assert stirling2(0, 0) == 1
        assert stirling2(3, 2) == 3
        assert stirling2(4, 2) == 7

    def test_matches_inclusion_exclusion(self):
        for m in range(0, 13):
            for j in range(0, m + 1):
                assert stirling2(m, j) == oracle_stirling(m, j)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            stirling2(2, 3)
        with pytest.raises(ValueError):
            stirling2(-1, 0)


class TestActiveSet:
    def test_sorted_caches(self):
        inst = make_instance([2.0, 1.0], [1.0, 2.0], (2, 1))
        active = ActiveSet(inst, (2, 1))
        assert np.allclose(active.sorted_caches, [1.0, 1.0, 2.0])
        assert active.total == 3

    def test_rejects_overcount(self):
        inst = make_instance([2.0, 1.0], [1.0], (1,))
        with pytest.raises(ScenarioError, match="cannot activate"):
            ActiveSet(inst, (2,))

    def test_rejects_empty(self):
        inst = make_instance([2.0, 1.0], [1.0], (1,))
        with pytest.raises(ScenarioError, match="at least one"):
            ActiveSet(inst, (0,))

    def test_value_nonnegative(self):
        with pytest.raises(ScenarioError, match="nonnegative"):
            ConverseValue(value=-0.1)


class TestWorstCase:
    def test_cacheless_two_users(self):
        # Both files must cross the broadcast in full.
        inst = make_instance([1.0, 1.0], [0.0, 0.5], (2, 1))
        active = ActiveSet(inst, (2, 0))
        out = converse_worst_case(inst, active)
        assert out.value == pytest.approx(2.0)
        assert out.m == 2

    def test_unit_caches(self):
        inst = make_instance([1.0, 1.0], [1.0], (2,))
        out = converse_worst_case(inst, ActiveSet(inst, (2,)))
        assert out.value == pytest.approx(0.5)
        assert out.m == 1

    def test_full_cache_clamps_to_zero(self):
        inst = make_instance([1.0, 1.0], [2.0], (1,))
        out = converse_worst_case(inst, ActiveSet(inst, (1,)))
        assert out.value == 0.0

    def test_equal_cache_reduction(self):
        # With identical caches the general formula must equal the
        # flat-cache specialization computed from scalars.
        inst = make_instance([2.0, 1.5, 1.0], [1.2], (3,))
        out = converse_worst_case(inst, ActiveSet(inst, (3,)))
        n = 3
        total_v = 4.5
        m_cache = 1.2
        expected = 0.0
        for m in range(1, min(n, 3) + 1):
            spread = sum(l * m_cache / (n - l + 1) for l in range(1, m + 1))
            pooled = m / n * m * m_cache
            expected = max(expected, max(m / n * total_v - min(spread, pooled), 0.0))
        assert out.value == pytest.approx(expected, rel=1e-12)


class TestAverageUniform:
    def test_distinct_demand_identity(self):
        # The combinatorial weight equals the expected fraction of distinct
        # files hit by m uniform draws: 1 - (1 - 1/n')^m.
        for n_prime in range(1, 9):
            for m in range(1, 9):
                numerator = sum(
                    math.comb(n_prime - 1, j - 1)
                    * math.factorial(j)
                    * stirling2(m, j)
                    for j in range(1, min(m, n_prime) + 1)
                )
                weight = Fraction(numerator, n_prime**m)
                closed = 1.0 - (1.0 - 1.0 / n_prime) ** m
                assert float(weight) == pytest.approx(closed, abs=1e-12)

    def test_single_zero_cache(self):
        inst = make_instance([2.0, 1.0, 0.5], [1.0], (1,))
        for n_prime in (1, 2, 3):
            value = converse_average_uniform([0.0], n_prime, inst)
            expected = float(inst.file_sizes[:n_prime].sum()) / n_prime
            assert value == pytest.approx(expected, rel=1e-12)

    def test_large_caches_clamp_to_zero(self):
        inst = make_instance([1.0, 1.0], [2.0], (2,))
        assert converse_average_uniform([2.0, 2.0], 2, inst) == 0.0

    def test_equal_sizes_reduction(self):
        # Equal file sizes and equal caches: compare against the scalar
        # form driven entirely by the distinct-demand identity.
        f, m_cache, n_prime, s = 1.5, 0.8, 3, 3
        inst = make_instance([f] * 3, [m_cache], (3,))
        value = converse_average_uniform([m_cache] * s, n_prime, inst)
        expected = 0.0
        for m in range(1, min(n_prime, s) + 1):
            kappa = 1.0 - (1.0 - 1.0 / n_prime) ** m
            requested = kappa * n_prime * f
            spread = sum(l * m_cache for l in range(1, m + 1)) / n_prime
            pooled = kappa * m * m_cache
            expected = max(expected, max(requested - min(spread, pooled), 0.0))
        assert value == pytest.approx(expected, rel=1e-12)


class TestAverage:
    def test_single_user_worked_example(self):
        inst = make_instance([1.0, 1.0], [0.0, 0.5], (1, 1))
        active = ActiveSet(inst, (1, 0))
        out = converse_average(inst, active)
        assert out.value == pytest.approx(1.0)
        assert out.n_prime == 2

    def test_uniform_popularity_concentrates_on_full_set(self):
        # With uniform popularity, n' = N makes the demand weight collapse
        # onto i = L_a, so that term equals the full-set uniform bound.
        inst = make_instance([1.0, 1.0], [0.4], (2,))
        active = ActiveSet(inst, (2,))
        out = converse_average(inst, active)
        full = converse_average_uniform(active.sorted_caches, 2, inst)
        assert out.value >= full - 1e-12

    def test_full_caches_give_zero(self):
        inst = make_instance([1.0, 1.0], [2.0], (2,))
        out = converse_average(inst, ActiveSet(inst, (2,)))
        assert out.value == 0.0


class TestDominance:
    def random_instance(self, rng):
        n = int(rng.integers(1, 4))
        t = int(rng.integers(1, 3))
        v = np.sort(rng.uniform(0.5, 3.0, size=n))[::-1].copy()
        total = float(v.sum())
        m = np.sort(rng.uniform(0.05, total, size=t))
        while np.any(np.diff(m) <= 0):
            m = np.sort(rng.uniform(0.05, total, size=t))
        counts = tuple(int(c) for c in rng.integers(1, 3, size=t))
        raw = rng.uniform(0.2, 1.0, size=n)
        pop = np.sort(raw / raw.sum())[::-1].copy()
        return make_instance(v, m, counts, popularity=pop)

    def test_no_scheme_beats_the_bound(self):
        rng = np.random.default_rng(71)
        for _ in range(15):
            inst = self.random_instance(rng)
            layout = inst.full_layout()
            active = ActiveSet(inst, layout.counts)
            lb_worst = converse_worst_case(inst, active).value
            lb_avg = converse_average(inst, active).value
            candidates = list(baseline_parameters(inst).values())
            raw = rng.uniform(0.0, 1.0, size=(inst.n_tiers, inst.n_files))
            candidates.append(project_feasible(raw, inst))
            for q in candidates:
                assert worst_case_load(inst, layout, q) >= lb_worst - 1e-9
                assert average_load(inst, layout, q) >= lb_avg - 1e-9

    def test_monotone_in_sizes(self):
        rng = np.random.default_rng(72)
        for _ in range(10):
            inst = self.random_instance(rng)
            active = ActiveSet(inst, inst.tier_user_counts)
            base_w = converse_worst_case(inst, active).value
            base_a = converse_average(inst, active).value

            grown = make_instance(
                np.asarray(inst.file_sizes) * 1.3,
                inst.cache_sizes,
                inst.tier_user_counts,
                popularity=inst.popularity,
            )
            grown_active = ActiveSet(grown, inst.tier_user_counts)
            assert converse_worst_case(grown, grown_active).value >= base_w - 1e-12
            assert converse_average(grown, grown_active).value >= base_a - 1e-12

            shrunk_caches = np.asarray(inst.cache_sizes) * 0.7
            smaller = make_instance(
                inst.file_sizes,
                shrunk_caches,
                inst.tier_user_counts,
                popularity=inst.popularity,
            )
            small_active = ActiveSet(smaller, inst.tier_user_counts)
            assert converse_worst_case(smaller, small_active).value >= base_w - 1e-12
            assert converse_average(smaller, small_active).value >= base_a - 1e-12
