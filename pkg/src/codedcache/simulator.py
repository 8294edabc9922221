"""Monte Carlo realization of random placement with subset-XOR delivery.

Files are split into ``scale`` data units per nominal size unit. Placement
draws, for every user and file, a uniform random subset of the file's units
sized by the caching fraction. Delivery walks the nonempty user subsets;
each subset's message is as long as the largest operand after zero-padding,
i.e. the largest count of units demanded by a member and held by exactly
the other members. The descaled total is an unbiased estimate of the exact
load formulas, which makes this module an independent check on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import loads
from .model import (
    CachingParameter,
    ScenarioError,
    SystemInstance,
    TierLayout,
    check_feasible,
)

__all__ = [
    "PlacementState",
    "DeliveryMeasurement",
    "place",
    "deliver",
    "monte_carlo",
]

_MAX_SIM_USERS = 24


@dataclass(frozen=True)
class PlacementState:
    """Cache contents of every active user at data-unit granularity.

    ``masks[n][i]`` is the bitmask of users holding unit ``i`` of file ``n``;
    ``histograms[n][b]`` counts the units of file ``n`` held by exactly the
    user set ``b``. User ``u``'s cached count for file ``n`` equals
    ``round(q[tier(u), n] * V[n] * scale)`` (round half to even).
    """

    instance: SystemInstance
    layout: TierLayout
    scale: int
    units: np.ndarray
    masks: tuple[np.ndarray, ...]
    histograms: np.ndarray

    @property
    def n_users(self) -> int:
        return self.layout.total


def place(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    scale: int,
    seed,
) -> PlacementState:
    """Draw a random placement; deterministic given ``seed``."""
    k = layout.total
    if k > _MAX_SIM_USERS:
        raise ScenarioError(
            f"simulation supports at most {_MAX_SIM_USERS} active users, got {k}"
        )
    scale = int(scale)
    if scale < 1:
        raise ScenarioError(f"scale must be a positive integer, got {scale}")
    small = [
        (n, float(v)) for n, v in enumerate(instance.file_sizes) if scale * v < 1.0
    ]
    if small:
        n, v = small[0]
        raise ScenarioError(
            f"scale too small: file {n} has size {v}, need scale*V >= 1"
        )
    mat = loads._q_matrix(instance, q)
    report = check_feasible(instance, CachingParameter(mat))
    if not report.ok:
        raise ScenarioError(f"infeasible caching parameter: {report}")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    units = np.rint(instance.file_sizes * scale).astype(np.int64)
    tiers = layout.user_tiers()
    masks = []
    for n in range(instance.n_files):
        mask = np.zeros(int(units[n]), dtype=np.int64)
        for u in range(k):
            count = int(np.rint(mat[tiers[u], n] * float(instance.file_sizes[n]) * scale))
            if count:
                picked = rng.permutation(int(units[n]))[:count]
                mask[picked] |= np.int64(1 << u)
        masks.append(mask)
    histograms = np.zeros((instance.n_files, 1 << k), dtype=np.int64)
    for n in range(instance.n_files):
        histograms[n] = np.bincount(masks[n], minlength=1 << k)
    return PlacementState(
        instance=instance,
        layout=layout,
        scale=scale,
        units=units,
        masks=tuple(masks),
        histograms=histograms,
    )


@dataclass(frozen=True)
class DeliveryMeasurement:
    """Message lengths of one delivery round.

    ``subset_lengths[s-1]`` is the length (in data units) of the message
    for user subset with bitmask ``s``; ``load`` is the descaled total.
    """

    demand: tuple[int, ...]
    subset_lengths: np.ndarray
    total_units: int
    load: float


def deliver(state: PlacementState, demand) -> DeliveryMeasurement:
    """Measure the broadcast length Algorithm-style for one demand."""
    demand_arr = loads.validate_demand(state.instance, state.layout, demand)
    k = state.n_users
    n_subsets = 1 << k
    all_masks = np.arange(1, n_subsets, dtype=np.int64)
    best = np.zeros(n_subsets - 1, dtype=np.int64)
    for j in range(k):
        bit = np.int64(1 << j)
        has = (all_masks & bit) != 0
        rest = all_masks[has] ^ bit
        vals = state.histograms[int(demand_arr[j])][rest]
        best[has] = np.maximum(best[has], vals)
    total = int(best.sum())
    return DeliveryMeasurement(
        demand=tuple(int(d) for d in demand_arr),
        subset_lengths=best,
        total_units=total,
        load=total / state.scale,
    )


def monte_carlo(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    scale: int,
    trials: int,
    seed,
    mode: str = "fixed",
    demand=None,
) -> tuple[float, float]:
    """Sample mean and standard error of the descaled delivery load.

    ``mode="fixed"`` replays the given demand every trial; ``"popularity"``
    draws each trial's demand i.i.d. from the instance popularity. Each
    trial re-draws the placement with its own substream ``(seed, trial)``,
    so the reduction is order-independent.
    """
    if trials < 2:
        raise ScenarioError(f"need at least 2 trials, got {trials}")
    if mode not in ("fixed", "popularity"):
        raise ScenarioError(f"mode must be 'fixed' or 'popularity', got {mode!r}")
    if mode == "fixed":
        if demand is None:
            raise ScenarioError("fixed mode needs a demand vector")
        fixed = loads.validate_demand(instance, layout, demand)
    k = layout.total
    mean = 0.0
    m2 = 0.0
    for trial in range(trials):
        rng = np.random.default_rng((_seed_key(seed), trial))
        if mode == "popularity":
            demand_t = rng.choice(instance.n_files, size=k, p=instance.popularity)
        else:
            demand_t = fixed
        state = place(instance, layout, q, scale, rng)
        value = deliver(state, demand_t).load
        delta = value - mean
        mean += delta / (trial + 1)
        m2 += delta * (value - mean)
    variance = m2 / (trials - 1)
    stderr = math.sqrt(max(variance, 0.0) / trials)
    return mean, stderr


def _seed_key(seed):
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return tuple(seed)
