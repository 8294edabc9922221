"""Problem data for decentralized coded caching with heterogeneous sizes.

A server holds N files of arbitrary sizes ``V[0..N-1]``. Users are grouped
into tiers; every user in tier ``t`` owns a cache of capacity ``M[t]``, and
the capacities are strictly increasing across tiers. File popularity is a
probability vector, nonincreasing in the file index (files are sorted from
most to least popular). Placement is described by a caching parameter
``q[t, n]``: the fraction of file ``n`` that each tier-``t`` user stores.

This module holds the immutable instance/layout types, scenario builders for
arithmetic size ladders, Zipf popularity, and feasibility checking of a
caching parameter against the per-tier cache budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ScenarioError",
    "SystemInstance",
    "TierLayout",
    "CachingParameter",
    "FeasibilityReport",
    "zipf_popularity",
    "build_arithmetic_scenario",
    "expected_active_layout",
    "check_feasible",
]

# Tolerance for "sums to one" and budget checks on user-supplied data.
_ATOL = 1e-9


class ScenarioError(ValueError):
    """Raised when instance data violates a model invariant."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SystemInstance:
    """File sizes, tier cache sizes, tier populations, and popularity.

    Invariants are checked at construction:

    * all file sizes are positive,
    * cache sizes are strictly increasing and lie in ``[0, sum(V)]``,
    * tier user counts are positive integers,
    * popularity is nonnegative, nonincreasing, and sums to one.

    Equal cache sizes must be merged into a single tier before construction;
    ``merge_equal_tiers`` does this for raw input data.
    """

    file_sizes: np.ndarray
    cache_sizes: np.ndarray
    tier_user_counts: tuple[int, ...]
    popularity: np.ndarray

    def __post_init__(self) -> None:
        v = _readonly(np.atleast_1d(self.file_sizes))
        m = _readonly(np.atleast_1d(self.cache_sizes))
        p = _readonly(np.atleast_1d(self.popularity))
        counts = tuple(int(c) for c in self.tier_user_counts)
        object.__setattr__(self, "file_sizes", v)
        object.__setattr__(self, "cache_sizes", m)
        object.__setattr__(self, "popularity", p)
        object.__setattr__(self, "tier_user_counts", counts)

        if v.ndim != 1 or v.size == 0:
            raise ScenarioError("file_sizes must be a nonempty 1-d array")
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            raise ScenarioError(f"file sizes must be positive and finite, got {v}")
        total = float(v.sum())
        if m.ndim != 1 or m.size == 0:
            raise ScenarioError("cache_sizes must be a nonempty 1-d array")
        if np.any(m < 0) or np.any(m > total + _ATOL):
            raise ScenarioError(
                f"cache sizes must lie in [0, {total}] (total file volume), got {m}"
            )
        if np.any(np.diff(m) <= 0):
            raise ScenarioError(
                f"cache sizes must be strictly increasing across tiers, got {m}; "
                "merge equal tiers first"
            )
        if len(counts) != m.size:
            raise ScenarioError(
                f"{len(counts)} tier counts for {m.size} cache sizes"
            )
        if any(c <= 0 for c in counts):
            raise ScenarioError(f"tier user counts must be positive, got {counts}")
        if p.shape != v.shape:
            raise ScenarioError("popularity must have one entry per file")
        if np.any(p < -_ATOL):
            raise ScenarioError(f"popularity must be nonnegative, got {p}")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ScenarioError(f"popularity must sum to one, got sum {p.sum()!r}")
        if np.any(np.diff(p) > _ATOL):
            raise ScenarioError(
                f"popularity must be nonincreasing in the file index, got {p}"
            )

    @property
    def n_files(self) -> int:
        return int(self.file_sizes.size)

    @property
    def n_tiers(self) -> int:
        return int(self.cache_sizes.size)

    @property
    def total_volume(self) -> float:
        return float(self.file_sizes.sum())

    def full_layout(self) -> "TierLayout":
        """Layout in which every subscribed user is active."""
        return TierLayout(self.tier_user_counts)


def merge_equal_tiers(
    cache_sizes: np.ndarray, tier_user_counts: tuple[int, ...]
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Merge tiers with equal cache size, summing their user counts.

    Input tiers may appear in any order; output is sorted by cache size.
    """
    m = np.atleast_1d(np.asarray(cache_sizes, dtype=float))
    counts = [int(c) for c in tier_user_counts]
    if m.size != len(counts):
        raise ScenarioError("one user count per cache size is required")
    merged: dict[float, int] = {}
    for size, count in zip(m.tolist(), counts):
        merged[size] = merged.get(size, 0) + count
    sizes = sorted(merged)
    return np.array(sizes), tuple(merged[s] for s in sizes)


@dataclass(frozen=True)
class TierLayout:
    """How many users each tier contributes to a delivery round.

    ``counts[t]`` is the number of tier-``t`` users taking part; zeros are
    allowed (an inactive tier) but at least one user must be present overall.
    Users are indexed ``0 .. total-1``, tier by tier: tier ``t`` owns the
    index range ``[offsets[t], offsets[t+1])``.
    """

    counts: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 0 for c in counts):
            raise ScenarioError(f"per-tier user counts must be >= 0, got {counts}")
        if sum(counts) < 1:
            raise ScenarioError("a layout needs at least one user")
        offsets = (0, *np.cumsum(counts).tolist())
        object.__setattr__(self, "offsets", tuple(int(o) for o in offsets))

    @property
    def total(self) -> int:
        return self.offsets[-1]

    @property
    def n_tiers(self) -> int:
        return len(self.counts)

    def tier_of(self, user: int) -> int:
        if not 0 <= user < self.total:
            raise IndexError(f"user {user} out of range [0, {self.total})")
        return int(np.searchsorted(self.offsets, user, side="right") - 1)

    def user_tiers(self) -> np.ndarray:
        """Array mapping user index to tier index."""
        return np.repeat(np.arange(self.n_tiers), self.counts)

    def users_of(self, tier: int) -> range:
        return range(self.offsets[tier], self.offsets[tier + 1])


@dataclass(frozen=True)
class CachingParameter:
    """Per-tier, per-file caching fractions ``q[t, n]`` in ``[0, 1]``."""

    q: np.ndarray

    def __post_init__(self) -> None:
        q = _readonly(np.atleast_2d(self.q))
        object.__setattr__(self, "q", q)
        if q.ndim != 2:
            raise ScenarioError("q must be a tiers-by-files matrix")
        if np.any(q < -_ATOL) or np.any(q > 1 + _ATOL) or not np.all(np.isfinite(q)):
            raise ScenarioError("caching fractions must lie in [0, 1]")

    @property
    def n_tiers(self) -> int:
        return int(self.q.shape[0])

    @property
    def n_files(self) -> int:
        return int(self.q.shape[1])


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of checking a caching parameter against an instance.

    ``bound_violations`` lists ``(tier, file, value)`` entries outside
    ``[0, 1]``; ``budget_violations`` lists ``(tier, used, capacity)`` rows
    whose cache budget is exceeded beyond tolerance.
    """

    ok: bool
    bound_violations: tuple[tuple[int, int, float], ...]
    budget_violations: tuple[tuple[int, float, float], ...]

    def __bool__(self) -> bool:
        return self.ok


def check_feasible(
    instance: SystemInstance, q: CachingParameter | np.ndarray, atol: float = 1e-9
) -> FeasibilityReport:
    """Check box bounds and per-tier budgets ``sum_n q[t,n] V[n] <= M[t]``."""
    mat = q.q if isinstance(q, CachingParameter) else np.atleast_2d(np.asarray(q, float))
    if mat.shape != (instance.n_tiers, instance.n_files):
        raise ScenarioError(
            f"q has shape {mat.shape}, expected "
            f"({instance.n_tiers}, {instance.n_files})"
        )
    bounds = []
    for t, n in zip(*np.where((mat < -atol) | (mat > 1 + atol))):
        bounds.append((int(t), int(n), float(mat[t, n])))
    budgets = []
    used = mat @ instance.file_sizes
    for t in range(instance.n_tiers):
        cap = float(instance.cache_sizes[t])
        if used[t] > cap + atol:
            budgets.append((t, float(used[t]), cap))
    return FeasibilityReport(
        ok=not bounds and not budgets,
        bound_violations=tuple(bounds),
        budget_violations=tuple(budgets),
    )


def zipf_popularity(n_files: int, gamma: float) -> np.ndarray:
    """Zipf popularity ``p[n] proportional to (n+1)**-gamma``; gamma=0 is uniform."""
    if n_files < 1:
        raise ScenarioError("need at least one file")
    if gamma < 0:
        raise ScenarioError("the Zipf exponent must be nonnegative")
    ranks = np.arange(1, n_files + 1, dtype=float)
    weights = ranks**-gamma
    return weights / weights.sum()


def build_arithmetic_scenario(
    n_files: int,
    first_size: float,
    size_step: float,
    n_tiers: int,
    first_cache: float,
    cache_step: float,
    tier_user_counts: tuple[int, ...] | None = None,
    gamma: float = 0.0,
) -> SystemInstance:
    """Instance with arithmetic file sizes and cache sizes.

    ``V[n] = first_size + n * size_step`` and ``M[t] = first_cache + t *
    cache_step``; popularity is Zipf with exponent ``gamma``. When
    ``tier_user_counts`` is omitted every tier gets a single user. Equal
    cache sizes (``cache_step == 0`` with several tiers) are merged.
    """
    v = first_size + size_step * np.arange(n_files, dtype=float)
    if np.any(v <= 0):
        raise ScenarioError(
            f"arithmetic ladder {first_size} + n*{size_step} leaves a "
            f"nonpositive file size for N={n_files}"
        )
    m = first_cache + cache_step * np.arange(n_tiers, dtype=float)
    counts = tuple(tier_user_counts) if tier_user_counts else (1,) * n_tiers
    if len(counts) != n_tiers:
        raise ScenarioError(f"{len(counts)} tier counts for {n_tiers} tiers")
    m, counts = merge_equal_tiers(m, counts)
    # Ladder order is kept as given: file n pairs with popularity rank n.
    return SystemInstance(
        file_sizes=v,
        cache_sizes=m,
        tier_user_counts=counts,
        popularity=zipf_popularity(n_files, gamma),
    )


def expected_active_layout(
    activity: float | np.ndarray, tier_user_counts: tuple[int, ...]
) -> TierLayout:
    """Layout sized for the expected number of active users per tier.

    Each of the ``L[t]`` subscribed users is active independently with
    probability ``activity`` (scalar, or one probability per tier). The
    optimization is sized for ``K[t] = ceil(activity[t] * L[t])`` users.
    """
    probs = np.broadcast_to(
        np.asarray(activity, dtype=float), (len(tier_user_counts),)
    )
    if np.any(probs < 0) or np.any(probs > 1):
        raise ScenarioError(f"activity probabilities must lie in [0, 1], got {probs}")
    counts = tuple(
        int(math.ceil(p * l - 1e-12)) for p, l in zip(probs.tolist(), tier_user_counts)
    )
    if sum(counts) < 1:
        raise ScenarioError(
            "every tier rounds to zero expected active users; nothing to optimize"
        )
    return TierLayout(counts)
