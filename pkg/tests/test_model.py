"""Instance construction, layouts, and feasibility checking."""

import numpy as np
import pytest

from codedcache.model import (
    CachingParameter,
    ScenarioError,
    SystemInstance,
    TierLayout,
    build_arithmetic_scenario,
    check_feasible,
    expected_active_layout,
    merge_equal_tiers,
    zipf_popularity,
)


def make_instance(**overrides):
    base = dict(
        file_sizes=np.array([10.0, 9.0, 8.0]),
        cache_sizes=np.array([5.0, 12.0]),
        tier_user_counts=(2, 1),
        popularity=np.array([0.5, 0.3, 0.2]),
    )
    base.update(overrides)
    return SystemInstance(**base)


class TestSystemInstance:
    def test_valid_instance_roundtrips(self):
        inst = make_instance()
        assert inst.n_files == 3
        assert inst.n_tiers == 2
        assert inst.total_volume == pytest.approx(27.0)
        assert inst.full_layout().counts == (2, 1)

    def test_arrays_are_immutable(self):
        inst = make_instance()
        with pytest.raises(ValueError):
            inst.file_sizes[0] = 99.0

    def test_rejects_nonpositive_file_size(self):
        with pytest.raises(ScenarioError, match="positive"):
            make_instance(file_sizes=np.array([10.0, 0.0, 8.0]))

    def test_rejects_cache_above_total_volume(self):
        with pytest.raises(ScenarioError, match="total file volume"):
            make_instance(cache_sizes=np.array([5.0, 28.0]))

    def test_rejects_equal_cache_sizes(self):
        with pytest.raises(ScenarioError, match="strictly increasing"):
            make_instance(cache_sizes=np.array([5.0, 5.0]))

    def test_rejects_increasing_popularity(self):
        with pytest.raises(ScenarioError, match="nonincreasing"):
            make_instance(popularity=np.array([0.2, 0.3, 0.5]))

    def test_rejects_popularity_not_summing_to_one(self):
        with pytest.raises(ScenarioError, match="sum to one"):
            make_instance(popularity=np.array([0.5, 0.3, 0.1]))

    def test_rejects_zero_user_count(self):
        with pytest.raises(ScenarioError, match="positive"):
            make_instance(tier_user_counts=(2, 0))


class TestMergeEqualTiers:
    def test_merges_and_sorts(self):
        sizes, counts = merge_equal_tiers(np.array([7.0, 3.0, 7.0]), (1, 4, 2))
        assert sizes.tolist() == [3.0, 7.0]
        assert counts == (4, 3)

    def test_identity_when_distinct(self):
        sizes, counts = merge_equal_tiers(np.array([3.0, 7.0]), (4, 3))
        assert sizes.tolist() == [3.0, 7.0]
        assert counts == (4, 3)


class TestTierLayout:
    def test_offsets_and_tier_lookup(self):
        layout = TierLayout((2, 0, 3))
        assert layout.total == 5
        assert layout.offsets == (0, 2, 2, 5)
        assert [layout.tier_of(u) for u in range(5)] == [0, 0, 2, 2, 2]
        assert layout.user_tiers().tolist() == [0, 0, 2, 2, 2]
        assert list(layout.users_of(2)) == [2, 3, 4]
        assert list(layout.users_of(1)) == []

    def test_requires_a_user(self):
        with pytest.raises(ScenarioError, match="at least one user"):
            TierLayout((0, 0))

    def test_rejects_negative_count(self):
        with pytest.raises(ScenarioError):
            TierLayout((2, -1))


class TestCachingParameter:
    def test_accepts_box_values(self):
        CachingParameter(np.array([[0.0, 0.5, 1.0]]))

    def test_rejects_out_of_box(self):
        with pytest.raises(ScenarioError):
            CachingParameter(np.array([[0.0, 1.5]]))


class TestZipf:
    def test_two_files_gamma_one(self):
        p = zipf_popularity(2, 1.0)
        assert p == pytest.approx([2 / 3, 1 / 3])

    def test_gamma_zero_is_uniform(self):
        assert zipf_popularity(4, 0.0) == pytest.approx([0.25] * 4)

    def test_sums_to_one_and_nonincreasing(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(1, 40))
            gamma = float(rng.uniform(0, 3))
            p = zipf_popularity(n, gamma)
            assert p.sum() == pytest.approx(1.0)
            assert np.all(np.diff(p) <= 1e-15)


class TestArithmeticScenario:
    def test_ladder_values(self):
        inst = build_arithmetic_scenario(
            n_files=4, first_size=10.0, size_step=-1.0,
            n_tiers=4, first_cache=5.5, cache_step=5.5,
        )
        assert inst.file_sizes.tolist() == [10.0, 9.0, 8.0, 7.0]
        assert inst.cache_sizes.tolist() == [5.5, 11.0, 16.5, 22.0]
        assert inst.tier_user_counts == (1, 1, 1, 1)

    def test_steep_negative_ladder(self):
        inst = build_arithmetic_scenario(
            n_files=4, first_size=13.0, size_step=-4.0,
            n_tiers=4, first_cache=5.0, cache_step=1.0,
        )
        assert inst.file_sizes.tolist() == [13.0, 9.0, 5.0, 1.0]
        assert inst.cache_sizes.tolist() == [5.0, 6.0, 7.0, 8.0]

    def test_rejects_ladder_through_zero(self):
        with pytest.raises(ScenarioError, match="nonpositive"):
            build_arithmetic_scenario(
                n_files=5, first_size=10.0, size_step=-3.0,
                n_tiers=1, first_cache=5.0, cache_step=0.0,
            )

    def test_zero_cache_step_merges_tiers(self):
        inst = build_arithmetic_scenario(
            n_files=3, first_size=5.0, size_step=0.0,
            n_tiers=3, first_cache=4.0, cache_step=0.0,
        )
        assert inst.n_tiers == 1
        assert inst.tier_user_counts == (3,)


class TestExpectedActiveLayout:
    def test_rounds_expected_counts_up(self):
        layout = expected_active_layout(0.3, (5,))
        assert layout.counts == (2,)

    def test_per_tier_probabilities(self):
        layout = expected_active_layout(np.array([0.5, 0.5]), (4, 2))
        assert layout.counts == (2, 1)

    def test_exact_products_do_not_round_up(self):
        assert expected_active_layout(0.5, (4,)).counts == (2,)
        assert expected_active_layout(1.0, (3, 2)).counts == (3, 2)

    def test_all_zero_is_an_error(self):
        with pytest.raises(ScenarioError, match="zero expected active"):
            expected_active_layout(0.0, (5, 5))


class TestCheckFeasible:
    def test_accepts_budget_boundary(self):
        inst = make_instance()
        q = np.array([[0.1, 0.2, 0.275], [0.4, 0.4, 0.5]])
        # tier 0 uses 1 + 1.8 + 2.2 = 5.0 exactly
        report = check_feasible(inst, q)
        assert report.ok and bool(report)

    def test_flags_budget_violation(self):
        inst = make_instance()
        q = np.array([[0.3, 0.3, 0.3], [0.1, 0.1, 0.1]])
        report = check_feasible(inst, q)
        assert not report.ok
        (tier, used, cap) = report.budget_violations[0]
        assert tier == 0
        assert used == pytest.approx(8.1)
        assert cap == pytest.approx(5.0)

    def test_flags_box_violation(self):
        inst = make_instance()
        q = np.array([[0.0, 0.0, 1.2], [0.0, 0.0, 0.0]])
        report = check_feasible(inst, q)
        assert report.bound_violations == ((0, 2, 1.2),)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ScenarioError, match="shape"):
            check_feasible(make_instance(), np.zeros((3, 3)))
