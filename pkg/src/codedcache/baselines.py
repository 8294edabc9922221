"""Closed-form reference placements.

Three decentralized placements that need no optimization, used as starting
points and as comparison curves:

* ``uniform_min_cache_max_file``: every tier caches the fraction dictated
  by the smallest cache and the largest file, ``min(M) / (N * max(V))``,
  so the placement is identical across tiers and files.
* ``tier_uniform_max_file``: each tier spends its own budget as if every
  file had the largest size, ``q[t] = M[t] / (N * max(V))``.
* ``file_uniform_min_cache``: every tier caches the same fraction of each
  file's own size, ``min(M) / sum(V)``, filling the smallest cache exactly.

All values are clipped into [0, 1]; every placement satisfies every tier's
budget by construction. ``BASELINES`` maps the scheme identifiers used on
the command line to these constructors.
"""

from __future__ import annotations

import numpy as np

from .loads import DEFAULT_TERM_BUDGET, average_load, worst_case_load
from .model import CachingParameter, SystemInstance, TierLayout

__all__ = [
    "uniform_min_cache_max_file",
    "tier_uniform_max_file",
    "file_uniform_min_cache",
    "BASELINES",
    "baseline_parameters",
    "best_baseline",
    "BaselineChoice",
]


def uniform_min_cache_max_file(instance: SystemInstance) -> CachingParameter:
    """One fraction everywhere: ``min(M) / (N * max(V))``."""
    q = float(instance.cache_sizes.min()) / (
        instance.n_files * float(instance.file_sizes.max())
    )
    q = min(q, 1.0)
    return CachingParameter(np.full((instance.n_tiers, instance.n_files), q))


def tier_uniform_max_file(instance: SystemInstance) -> CachingParameter:
    """Per-tier fraction ``M[t] / (N * max(V))``, uniform over files."""
    per_tier = instance.cache_sizes / (
        instance.n_files * float(instance.file_sizes.max())
    )
    per_tier = np.clip(per_tier, 0.0, 1.0)
    return CachingParameter(
        np.repeat(per_tier[:, None], instance.n_files, axis=1)
    )


def file_uniform_min_cache(instance: SystemInstance) -> CachingParameter:
    """One fraction of every file's own size: ``min(M) / sum(V)``."""
    q = float(instance.cache_sizes.min()) / instance.total_volume
    q = min(q, 1.0)
    return CachingParameter(np.full((instance.n_tiers, instance.n_files), q))


#: Scheme identifier -> constructor, in reporting order.
BASELINES = {
    "uniform-alidec": uniform_min_cache_max_file,
    "tier-uniform": tier_uniform_max_file,
    "file-uniform": file_uniform_min_cache,
}


def baseline_parameters(instance: SystemInstance) -> dict[str, CachingParameter]:
    return {name: build(instance) for name, build in BASELINES.items()}


class BaselineChoice:
    """A named baseline with its exact load for a given layout."""

    def __init__(self, name: str, q: CachingParameter, load: float):
        self.name = name
        self.q = q
        self.load = load


def best_baseline(
    instance: SystemInstance,
    layout: TierLayout,
    objective: str = "wst",
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> BaselineChoice:
    """The reference placement with the smallest exact load; ties keep
    the first name in ``BASELINES`` order."""
    evaluate = worst_case_load if objective == "wst" else average_load
    best: BaselineChoice | None = None
    for name, build in BASELINES.items():
        q = build(instance)
        load = evaluate(instance, layout, q, term_budget=term_budget)
        if best is None or load < best.load:
            best = BaselineChoice(name, q, load)
    return best
