"""Projected gradient on the smoothed load and the gap-bound calculator."""

import math

import numpy as np
import pytest

from codedcache.loads import (
    SmoothingConfig,
    average_load,
    smoothed_average,
    smoothed_worst_case,
    worst_case_load,
)
from codedcache.model import (
    CachingParameter,
    ScenarioError,
    SystemInstance,
)
from codedcache.smooth import (
    ProjectedGradConfig,
    increment_bound,
    minimize_smoothed,
    project_feasible,
)


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


def random_instance(rng, max_files=3, max_tiers=2):
    n = int(rng.integers(1, max_files + 1))
    t = int(rng.integers(1, max_tiers + 1))
    v = np.sort(rng.uniform(0.5, 3.0, size=n))[::-1].copy()
    total = float(v.sum())
    m = np.sort(rng.uniform(0.1, total, size=t))
    while np.any(np.diff(m) <= 0):
        m = np.sort(rng.uniform(0.1, total, size=t))
    counts = tuple(int(c) for c in rng.integers(1, 3, size=t))
    return make_instance(v, m, counts)


class TestConfig:
    def test_rejects_small_c(self):
        with pytest.raises(ScenarioError, match="c must be"):
            ProjectedGradConfig(c=0.5)

    def test_rejects_bad_shrink(self):
        with pytest.raises(ScenarioError, match="shrink"):
            ProjectedGradConfig(shrink=1.0)

    def test_rejects_zero_starts(self):
        with pytest.raises(ScenarioError, match="start"):
            ProjectedGradConfig(starts=0)


class TestProjection:
    def test_feasible_input_unchanged(self):
        inst = make_instance([1.0, 1.0], [1.0], (1,))
        q = np.array([[0.2, 0.3]])
        out = project_feasible(q, inst)
        assert np.allclose(out.q, q)

    def test_symmetric_overshoot(self):
        inst = make_instance([1.0, 1.0], [1.0], (1,))
        out = project_feasible(np.array([[2.0, 2.0]]), inst)
        assert np.allclose(out.q, 0.5, atol=1e-10)

    def test_box_clip_satisfies_budget(self):
        inst = make_instance([1.0, 1.0], [2.0], (1,))
        out = project_feasible(np.array([[1.5, -0.5]]), inst)
        assert np.allclose(out.q, [[1.0, 0.0]], atol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            inst = random_instance(rng)
            raw = rng.uniform(-1.0, 2.0, size=(inst.n_tiers, inst.n_files))
            once = project_feasible(raw, inst).q
            twice = project_feasible(once, inst).q
            assert np.allclose(once, twice, atol=1e-9)

    def test_nonexpansive(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            inst = random_instance(rng)
            a = rng.uniform(-1.0, 2.0, size=(inst.n_tiers, inst.n_files))
            b = rng.uniform(-1.0, 2.0, size=(inst.n_tiers, inst.n_files))
            pa = project_feasible(a, inst).q
            pb = project_feasible(b, inst).q
            assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-9

    def test_variational_inequality(self):
        # Projections satisfy <raw - P(raw), z - P(raw)> <= 0 for every
        # feasible z; this certifies KKT optimality of the bisection.
        rng = np.random.default_rng(5)
        for _ in range(20):
            inst = random_instance(rng)
            raw = rng.uniform(-1.0, 2.0, size=(inst.n_tiers, inst.n_files))
            p = project_feasible(raw, inst).q
            for _ in range(5):
                z = project_feasible(
                    rng.uniform(0.0, 1.0, size=raw.shape), inst
                ).q
                inner = float(((raw - p) * (z - p)).sum())
                assert inner <= 1e-8

    def test_zero_cache_tier(self):
        inst = make_instance([1.0, 2.0], [0.0, 2.0], (1, 1))
        out = project_feasible(np.full((2, 2), 0.7), inst)
        assert np.allclose(out.q[0], 0.0, atol=1e-12)


class TestMinimize:
    def test_single_file_full_cache(self):
        inst = make_instance([1.0], [1.0], (1,))
        q, trace = minimize_smoothed(inst, inst.full_layout())
        assert q.q[0, 0] == pytest.approx(1.0, abs=1e-6)
        assert trace.objective <= 1e-6
        # Every start reaches the same floor, so ties resolve to start 0.
        assert trace.best_start == 0

    def test_two_by_two_sandwich(self):
        inst = make_instance([1.0, 1.0], [1.0], (2,))
        cfg = ProjectedGradConfig(c=10.0, seed=1)
        q, trace = minimize_smoothed(inst, inst.full_layout(), cfg, "wst")
        exact = worst_case_load(inst, inst.full_layout(), q)
        assert exact <= 0.75 + 3 * math.log(2) / 10.0 + 1e-6
        assert trace.exact_load == pytest.approx(exact, rel=1e-12)

    def test_single_user_average_matches_greedy(self):
        # K=1 leaves nothing to smooth for the average load, so the solver
        # works on the exact linear objective and must land on the greedy
        # budget fill: all 2.0 units on the most popular file.
        inst = make_instance(
            [2.0, 1.0, 1.0], [2.0], (1,), popularity=[0.5, 0.3, 0.2]
        )
        cfg = ProjectedGradConfig(tol=1e-12, max_iter=500)
        q, trace = minimize_smoothed(inst, inst.full_layout(), cfg, "avg")
        assert trace.exact_load == pytest.approx(0.5, abs=1e-4)

    def test_deterministic_given_seed(self):
        inst = make_instance([2.0, 1.0], [1.5], (2,))
        cfg = ProjectedGradConfig(seed=42, starts=3, max_iter=50)
        q1, t1 = minimize_smoothed(inst, inst.full_layout(), cfg)
        q2, t2 = minimize_smoothed(inst, inst.full_layout(), cfg)
        assert np.array_equal(q1.q, q2.q)
        assert t1.rows == t2.rows

    def test_per_start_trace_nonincreasing(self):
        inst = make_instance([2.0, 1.0], [1.2, 2.0], (1, 1))
        cfg = ProjectedGradConfig(starts=4, max_iter=60, seed=9)
        _, trace = minimize_smoothed(inst, inst.full_layout(), cfg)
        by_start: dict[int, list[float]] = {}
        for start, _, val, _ in trace.rows:
            by_start.setdefault(start, []).append(val)
        assert set(by_start) == {0, 1, 2, 3}
        for vals in by_start.values():
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_checkpoint_rows_carry_exact_load(self):
        inst = make_instance([1.0, 1.0], [1.0], (2,))
        cfg = ProjectedGradConfig(starts=2, max_iter=30)
        _, trace = minimize_smoothed(inst, inst.full_layout(), cfg)
        for start, it, _, exact in trace.rows:
            if it % 10 == 0:
                assert math.isfinite(exact)
        finals = {}
        for start, it, _, exact in trace.rows:
            finals[start] = exact
        assert all(math.isfinite(v) for v in finals.values())

    def test_result_feasible(self):
        rng = np.random.default_rng(21)
        from codedcache.model import check_feasible

        for _ in range(5):
            inst = random_instance(rng)
            q, _ = minimize_smoothed(
                inst,
                inst.full_layout(),
                ProjectedGradConfig(starts=2, max_iter=40, seed=int(rng.integers(1e6))),
            )
            assert check_feasible(inst, q).ok

    def test_rejects_unknown_objective(self):
        inst = make_instance([1.0], [0.5], (1,))
        with pytest.raises(ScenarioError, match="objective"):
            minimize_smoothed(inst, inst.full_layout(), None, "median")


class TestIncrementBound:
    def test_single_user_worst(self):
        for n in (1, 2, 7):
            assert increment_bound(1, n, 1.0, "wst") == pytest.approx(math.log(n))

    def test_two_user_worst(self):
        assert increment_bound(2, 2, 1.0, "wst") == pytest.approx(3 * math.log(2))

    def test_two_user_average(self):
        assert increment_bound(2, 5, 1.0, "avg") == pytest.approx(math.log(2))

    def test_inverse_c_scaling(self):
        base = increment_bound(4, 3, 1.0, "wst")
        for c in (2.0, 10.0, 100.0):
            assert increment_bound(4, 3, c, "wst") * c == pytest.approx(base)

    def test_closed_form_cap(self):
        # The binomial sum stays below both closed-form envelopes.
        n = 3
        for k in range(2, 21):
            bound = increment_bound(k, n, 1.0, "wst")
            cap = min(
                (k / 2 - 1) * 2**k + 1,
                (2**k - 1) * math.log(k),
            ) + k * math.log(n)
            assert bound <= cap + 1e-9

    def test_large_k_uses_log_domain(self):
        value = increment_bound(500, 2, 1.0, "avg")
        assert value > 1e100
        assert math.isfinite(value)

    def test_pointwise_sandwich(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            inst = random_instance(rng)
            layout = inst.full_layout()
            k = layout.total
            q = rng.uniform(0.0, 1.0, size=(inst.n_tiers, inst.n_files))
            q = project_feasible(q, inst)
            cfg = SmoothingConfig(float(rng.uniform(1.0, 20.0)))
            c_eff = cfg.effective_c(inst)
            for which, smoothed_fn, exact_fn in (
                ("wst", smoothed_worst_case, worst_case_load),
                ("avg", smoothed_average, average_load),
            ):
                smooth_val = smoothed_fn(inst, layout, q, cfg)
                exact_val = exact_fn(inst, layout, q)
                gap = smooth_val - exact_val
                assert gap >= -1e-12
                assert gap <= increment_bound(k, inst.n_files, c_eff, which) + 1e-12

    def test_validation(self):
        with pytest.raises(ScenarioError):
            increment_bound(0, 2, 1.0, "wst")
        with pytest.raises(ScenarioError):
            increment_bound(2, 2, 0.5, "wst")
        with pytest.raises(ScenarioError):
            increment_bound(2, 2, 1.0, "median")
