"""Lower bounds on the delivery load that no placement can beat.

Both bounds follow a cut-set style argument: any ``m`` of the active users
must be served their distinct requests out of the broadcast plus their own
caches, so the load is at least the requested volume minus what the caches
can contribute. The worst-case bound maximizes over the number of cut users
``m``; the average bound additionally restricts attention to the ``N'`` most
popular files and weights cut sizes by how many distinct popular files a
random demand hits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .model import ScenarioError, SystemInstance

__all__ = [
    "ActiveSet",
    "ConverseValue",
    "stirling2",
    "converse_worst_case",
    "converse_average_uniform",
    "converse_average",
]


@dataclass(frozen=True)
class ActiveSet:
    """The users taking part in one delivery round.

    ``counts[t]`` active users in tier ``t``; the derived ``sorted_caches``
    lists each active user's cache size in nondecreasing order.
    """

    instance: SystemInstance
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        inst = self.instance
        if len(counts) != inst.n_tiers:
            raise ScenarioError(
                f"{len(counts)} active counts for {inst.n_tiers} tiers"
            )
        for t, c in enumerate(counts):
            if c < 0 or c > inst.tier_user_counts[t]:
                raise ScenarioError(
                    f"tier {t} has {inst.tier_user_counts[t]} subscribers, "
                    f"cannot activate {c}"
                )
        if sum(counts) < 1:
            raise ScenarioError("at least one user must be active")

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def sorted_caches(self) -> np.ndarray:
        return np.repeat(self.instance.cache_sizes, self.counts)


@dataclass(frozen=True)
class ConverseValue:
    """A converse bound with the cut parameters that attain it.

    ``m`` is the maximizing cut size for the worst case; ``n_prime`` the
    maximizing library restriction for the average case.
    """

    value: float
    m: int | None = None
    n_prime: int | None = None

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise ScenarioError(f"converse value must be nonnegative, got {self.value}")


@lru_cache(maxsize=None)
def _stirling_row(m: int) -> tuple[int, ...]:
    if m == 0:
        return (1,)
    prev = _stirling_row(m - 1)
    row = [0] * (m + 1)
    for j in range(1, m + 1):
        above = prev[j] if j < len(prev) else 0
        row[j] = j * above + prev[j - 1]
    return tuple(row)


def stirling2(m: int, j: int) -> int:
    """Number of ways to partition ``m`` labeled items into ``j`` blocks."""
    if m < 0 or j < 0 or j > m:
        raise ValueError(f"need 0 <= j <= m, got m={m}, j={j}")
    return _stirling_row(m)[j]


def converse_worst_case(instance: SystemInstance, active: ActiveSet) -> ConverseValue:
    """Cut-set lower bound on the worst-case load of any placement."""
    if active.instance is not instance and not _same_instance(active.instance, instance):
        raise ScenarioError("active set was built for a different instance")
    caches = np.asarray(active.sorted_caches, dtype=float)
    n = instance.n_files
    total_v = float(instance.file_sizes.sum())
    prefix = np.concatenate(([0.0], np.cumsum(caches)))
    best = 0.0
    best_m = None
    for m in range(1, min(n, active.total) + 1):
        requested = m / n * total_v
        spread = sum(prefix[l] / (n - l + 1) for l in range(1, m + 1))
        pooled = m / n * prefix[m]
        inner = max(requested - min(spread, pooled), 0.0)
        if best_m is None or inner > best:
            best = inner
            best_m = m
    return ConverseValue(value=best, m=best_m)


def converse_average_uniform(
    sorted_caches, n_prime: int, instance: SystemInstance
) -> float:
    """Average-load bound when attention is restricted to the ``n_prime``
    most popular files and every listed cache takes part."""
    caches = np.sort(np.asarray(sorted_caches, dtype=float))
    s = caches.size
    if s < 1:
        raise ScenarioError("need at least one cache in the cut")
    if not 1 <= n_prime <= instance.n_files:
        raise ScenarioError(f"n_prime must lie in [1, {instance.n_files}]")
    top_volume = float(instance.file_sizes[:n_prime].sum())
    prefix = np.concatenate(([0.0], np.cumsum(caches)))
    best = 0.0
    for m in range(1, min(n_prime, s) + 1):
        # Expected number of distinct requested files among m independent
        # uniform draws from n_prime files, divided by n_prime.
        numerator = sum(
            math.comb(n_prime - 1, j - 1) * math.factorial(j) * stirling2(m, j)
            for j in range(1, min(m, n_prime) + 1)
        )
        weight = Fraction(numerator, n_prime**m)
        requested = float(weight) * top_volume
        spread = float(prefix[1 : m + 1].sum()) / n_prime
        pooled = (1.0 - (1.0 - 1.0 / n_prime) ** m) * float(prefix[m])
        inner = max(requested - min(spread, pooled), 0.0)
        best = max(best, inner)
    return best


def _compositions(counts: tuple[int, ...], size: int):
    """Per-tier splits of ``size`` active users with their subset counts."""
    ranges = [range(min(c, size) + 1) for c in counts]
    for combo in itertools.product(*ranges):
        if sum(combo) == size:
            ways = 1
            for c, j in zip(counts, combo):
                ways *= math.comb(c, j)
            yield combo, ways


def converse_average(instance: SystemInstance, active: ActiveSet) -> ConverseValue:
    """Popularity-weighted lower bound on the average load."""
    if active.instance is not instance and not _same_instance(active.instance, instance):
        raise ScenarioError("active set was built for a different instance")
    l_a = active.total
    counts = active.counts
    cache_sizes = instance.cache_sizes
    best = 0.0
    best_np = None
    uniform_cache: dict[tuple, float] = {}
    for n_prime in range(1, instance.n_files + 1):
        x = n_prime * float(instance.popularity[n_prime - 1])
        x = min(max(x, 0.0), 1.0)
        value = 0.0
        for i in range(1, l_a + 1):
            weight = (x**i) * ((1.0 - x) ** (l_a - i))
            if weight == 0.0:
                continue
            subset_sum = 0.0
            for combo, ways in _compositions(counts, i):
                key = (combo, n_prime)
                if key not in uniform_cache:
                    multiset = np.repeat(cache_sizes, combo)
                    uniform_cache[key] = converse_average_uniform(
                        multiset, n_prime, instance
                    )
                subset_sum += float(ways) * uniform_cache[key]
            value += weight * subset_sum
        if best_np is None or value > best:
            best = value
            best_np = n_prime
    return ConverseValue(value=max(best, 0.0), n_prime=best_np)


def _same_instance(a: SystemInstance, b: SystemInstance) -> bool:
    return (
        np.array_equal(a.file_sizes, b.file_sizes)
        and np.array_equal(a.cache_sizes, b.cache_sizes)
        and a.tier_user_counts == b.tier_user_counts
        and np.array_equal(a.popularity, b.popularity)
    )
