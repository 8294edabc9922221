"""Exact and smoothed delivery-load evaluation.

Placement leaves every tier-``t`` user holding a random ``q[t, n]`` fraction
of each file ``n``. Delivery sends one coded message per nonempty subset of
the active users; zero padding makes its length the maximum, over the
subset's members, of the part of the member's demand that exactly the other
subset members hold. The worst-case load maximizes the resulting sum over
demand vectors, the average load weights it by popularity (repeated demands
are counted, not deduplicated).

Enumerating demand vectors directly costs ``N**K``. Users within a tier are
exchangeable (they share one row of ``q``), so the load of a demand vector
only depends on the per-tier multiset of requested files. The evaluators
below enumerate one representative per multiset class and weight it by its
multinomial multiplicity, which is exact, not an approximation.

Smoothed variants replace each max with a log-sum-exp at smoothing level
``c``: upper bounds that are differentiable in ``q`` and within a known
additive gap of the exact loads (see ``smooth.smoothing_gap_bound``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import CachingParameter, ScenarioError, SystemInstance, TierLayout

__all__ = [
    "BudgetExceededError",
    "SmoothingConfig",
    "DEFAULT_TERM_BUDGET",
    "subset_term",
    "demand_load",
    "worst_case_load",
    "worst_case_demand",
    "average_load",
    "smoothed_worst_case",
    "smoothed_average",
    "smoothed_worst_case_with_grad",
    "smoothed_average_with_grad",
    "enumeration_cost",
    "DemandClasses",
    "TermTables",
    "subset_entries",
]

#: Default ceiling on subset-term evaluations for one exact/smoothed sweep.
DEFAULT_TERM_BUDGET = 5_000_000

# Fixed chunk length keeps accumulation order, and hence output bytes,
# independent of memory pressure.
_CHUNK_ROWS = 4096

# exp() overflows beyond ~709; scaled terms are kept under this.
_OVERFLOW_GUARD = 700.0


class BudgetExceededError(RuntimeError):
    """Raised when a sweep would exceed its enumeration budget."""


@dataclass(frozen=True)
class SmoothingConfig:
    """Log-sum-exp smoothing level ``c >= 1``.

    Larger ``c`` tightens the smoothed upper bounds at the price of sharper
    gradients. ``effective_c`` caps the level so that ``c * term`` stays
    below the exp() overflow threshold for the given instance; all smoothed
    evaluations use the effective value.
    """

    c: float = 1.0

    def __post_init__(self) -> None:
        if not (self.c >= 1.0 and math.isfinite(self.c)):
            raise ScenarioError(f"smoothing level must be >= 1, got {self.c}")

    def effective_c(self, instance: SystemInstance) -> float:
        cap = _OVERFLOW_GUARD / float(instance.file_sizes.max())
        return float(min(self.c, cap))


def _q_matrix(instance: SystemInstance, q) -> np.ndarray:
    mat = q.q if isinstance(q, CachingParameter) else np.atleast_2d(np.asarray(q, float))
    if mat.shape != (instance.n_tiers, instance.n_files):
        raise ScenarioError(
            f"q has shape {mat.shape}, expected ({instance.n_tiers}, {instance.n_files})"
        )
    if np.any(mat < -1e-12) or np.any(mat > 1 + 1e-12):
        raise ScenarioError("caching fractions must lie in [0, 1]")
    return np.clip(mat, 0.0, 1.0)


def _check_layout(instance: SystemInstance, layout: TierLayout) -> None:
    if layout.n_tiers != instance.n_tiers:
        raise ScenarioError(
            f"layout has {layout.n_tiers} tiers, instance has {instance.n_tiers}"
        )


def enumeration_cost(instance: SystemInstance, layout: TierLayout) -> int:
    """Subset-term evaluations one exact or smoothed sweep will perform."""
    _check_layout(instance, layout)
    n = instance.n_files
    classes = 1
    for k in layout.counts:
        classes *= math.comb(n + k - 1, k)
    total = layout.total
    return classes * total * (1 << (total - 1))


def _check_budget(instance, layout, term_budget: int) -> None:
    cost = enumeration_cost(instance, layout)
    if cost > term_budget:
        raise BudgetExceededError(
            f"sweep needs {cost} subset-term evaluations, budget is {term_budget}; "
            "shrink the instance or raise the budget explicitly"
        )


# ---------------------------------------------------------------------------
# Subset structure: one entry per nonempty subset of the active users.


@dataclass(frozen=True)
class SubsetEntry:
    """A nonempty subset of user positions with per-member term keys.

    ``comp_keys[i]`` counts, per tier, the members of the subset other than
    ``members[i]``; together with the leader's file it determines the term.
    """

    mask: int
    members: tuple[int, ...]
    comp_keys: tuple[tuple[int, ...], ...]


@lru_cache(maxsize=32)
def subset_entries(layout: TierLayout) -> tuple[SubsetEntry, ...]:
    tiers = layout.user_tiers()
    total = layout.total
    entries = []
    for mask in range(1, 1 << total):
        members = tuple(u for u in range(total) if mask >> u & 1)
        base = [0] * layout.n_tiers
        for u in members:
            base[tiers[u]] += 1
        keys = []
        for u in members:
            comp = list(base)
            comp[tiers[u]] -= 1
            keys.append(tuple(comp))
        entries.append(SubsetEntry(mask, members, tuple(keys)))
    return tuple(entries)


class TermTables:
    """Per-file term vectors for a fixed caching parameter.

    For a composition ``a`` (per-tier count of the subset members besides
    the leader), the term of a leader demanding file ``f`` is

        ``g_a[f] = V[f] * prod_t q[t,f]**a[t] * (1-q[t,f])**(K[t]-a[t])``:

    the probability that exactly the other members hold a given unit of the
    file, scaled by the file size. Tables are built lazily per composition
    and shared across demand classes.
    """

    def __init__(
        self, instance: SystemInstance, layout: TierLayout, q, complement=None
    ) -> None:
        _check_layout(instance, layout)
        self.instance = instance
        self.layout = layout
        self.q = _q_matrix(instance, q)
        if complement is None:
            self._x = 1.0 - self.q
        else:
            # Lifted evaluations may replace 1-q by an explicit complement;
            # dg() assumes the true complement and must not be used then.
            self._x = np.asarray(complement, dtype=float)
            if self._x.shape != self.q.shape or np.any(self._x < 0):
                raise ScenarioError("complement must be nonnegative, same shape as q")
        self._g: dict[tuple[int, ...], np.ndarray] = {}
        self._dg: dict[tuple[int, ...], np.ndarray] = {}

    def g(self, comp: tuple[int, ...]) -> np.ndarray:
        out = self._g.get(comp)
        if out is None:
            out = self.instance.file_sizes.copy()
            for t, a in enumerate(comp):
                k = self.layout.counts[t]
                if a:
                    out *= self.q[t] ** a
                if k - a:
                    out *= self._x[t] ** (k - a)
            out.setflags(write=False)
            self._g[comp] = out
        return out

    def dg(self, comp: tuple[int, ...]) -> np.ndarray:
        """Derivative of ``g(comp)`` in every ``q[t, f]``; shape (T, N)."""
        out = self._dg.get(comp)
        if out is None:
            factors = []
            for t, a in enumerate(comp):
                k = self.layout.counts[t]
                factors.append(self.q[t] ** a * self._x[t] ** (k - a))
            out = np.zeros((self.layout.n_tiers, self.instance.n_files))
            for t, a in enumerate(comp):
                k = self.layout.counts[t]
                if k == 0:
                    continue
                d = np.zeros(self.instance.n_files)
                if a:
                    d += a * self.q[t] ** (a - 1) * self._x[t] ** (k - a)
                if k - a:
                    d -= (k - a) * self.q[t] ** a * self._x[t] ** (k - a - 1)
                rest = self.instance.file_sizes.copy()
                for s, f in enumerate(factors):
                    if s != t:
                        rest *= f
                out[t] = rest * d
            out.setflags(write=False)
            self._dg[comp] = out
        return out


# ---------------------------------------------------------------------------
# Demand classes: per-tier multisets with multiplicities.


class DemandClasses:
    """Per-tier file multisets, their multiplicities and popularity weights.

    Class ``i`` decodes, tier by tier in mixed radix, to one representative
    demand vector. ``multiplicity`` counts the demand vectors in the class;
    ``pop_weight`` is the product of the members' popularities, so that
    ``multiplicity * pop_weight`` sums to one over all classes.
    """

    def __init__(self, instance: SystemInstance, layout: TierLayout) -> None:
        _check_layout(instance, layout)
        self.instance = instance
        self.layout = layout
        n = instance.n_files
        self._files: list[np.ndarray] = []
        self._mult: list[np.ndarray] = []
        self._pop: list[np.ndarray] = []
        for k in layout.counts:
            rows = list(itertools.combinations_with_replacement(range(n), k))
            files = np.array(rows, dtype=np.int64).reshape(len(rows), k)
            mult = np.empty(len(rows))
            for i, row in enumerate(rows):
                m = math.factorial(k)
                for f in set(row):
                    m //= math.factorial(row.count(f))
                mult[i] = float(m)
            pop = (
                np.prod(instance.popularity[files], axis=1)
                if k
                else np.ones(len(rows))
            )
            self._files.append(files)
            self._mult.append(mult)
            self._pop.append(pop)
        self._sizes = [f.shape[0] for f in self._files]
        self.n_classes = int(np.prod(self._sizes))

    def chunk(self, start: int, stop: int):
        """Rows ``start:stop``: (files (R, K), multiplicity (R,), weight (R,))."""
        idx = np.arange(start, stop, dtype=np.int64)
        files = np.empty((idx.size, self.layout.total), dtype=np.int64)
        mult = np.ones(idx.size)
        pop = np.ones(idx.size)
        rem = idx
        for t in range(self.layout.n_tiers - 1, -1, -1):
            sel = rem % self._sizes[t]
            rem = rem // self._sizes[t]
            lo, hi = self.layout.offsets[t], self.layout.offsets[t + 1]
            files[:, lo:hi] = self._files[t][sel]
            mult *= self._mult[t][sel]
            pop *= self._pop[t][sel]
        return files, mult, pop

    def iter_chunks(self, rows: int = _CHUNK_ROWS):
        for start in range(0, self.n_classes, rows):
            yield self.chunk(start, min(start + rows, self.n_classes))


# ---------------------------------------------------------------------------
# Reference term and single-demand load.


def validate_demand(instance: SystemInstance, layout: TierLayout, demand) -> np.ndarray:
    d = np.asarray(demand, dtype=np.int64)
    if d.shape != (layout.total,):
        raise ScenarioError(
            f"demand must list one file per active user, got shape {d.shape}"
        )
    if np.any(d < 0) or np.any(d >= instance.n_files):
        raise ScenarioError(f"demanded file index out of range [0, {instance.n_files})")
    return d


def subset_term(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    demand,
    subset,
    leader: int,
) -> float:
    """Term of ``leader`` within ``subset`` for one demand vector.

    File size of the leader's demand, times the probability that exactly the
    other subset members (and nobody else, the leader included) hold a given
    unit of that file under independent placement.
    """
    mat = _q_matrix(instance, q)
    d = validate_demand(instance, layout, demand)
    members = sorted(set(int(u) for u in subset))
    if leader not in members:
        raise ScenarioError(f"leader {leader} is not in subset {members}")
    tiers = layout.user_tiers()
    f = int(d[leader])
    value = float(instance.file_sizes[f])
    others = set(members) - {leader}
    for u in range(layout.total):
        if u in others:
            value *= mat[tiers[u], f]
        else:
            value *= 1.0 - mat[tiers[u], f]
    return value


def demand_load(instance: SystemInstance, layout: TierLayout, q, demand) -> float:
    """Delivery load of one specific demand vector."""
    tables = TermTables(instance, layout, q)
    d = validate_demand(instance, layout, demand)
    total = 0.0
    for entry in subset_entries(layout):
        best = -math.inf
        for pos, key in zip(entry.members, entry.comp_keys):
            best = max(best, float(tables.g(key)[d[pos]]))
        total += best
    return total


# ---------------------------------------------------------------------------
# Full sweeps.


def _entry_max(tables: TermTables, entry: SubsetEntry, files: np.ndarray) -> np.ndarray:
    out = tables.g(entry.comp_keys[0])[files[:, entry.members[0]]]
    if len(entry.members) == 1:
        return out
    out = out.copy()
    for pos, key in zip(entry.members[1:], entry.comp_keys[1:]):
        np.maximum(out, tables.g(key)[files[:, pos]], out=out)
    return out


def _entry_lse(
    tables: TermTables, entry: SubsetEntry, files: np.ndarray, c: float
) -> np.ndarray:
    terms = np.stack(
        [tables.g(k)[files[:, p]] for p, k in zip(entry.members, entry.comp_keys)]
    )
    peak = terms.max(axis=0)
    return peak + np.log(np.exp(c * (terms - peak)).sum(axis=0)) / c


def worst_case_load(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> float:
    """Maximum delivery load over all demand vectors."""
    _check_budget(instance, layout, term_budget)
    tables = TermTables(instance, layout, q)
    entries = subset_entries(layout)
    classes = DemandClasses(instance, layout)
    best = -math.inf
    for files, _, _ in classes.iter_chunks():
        acc = np.zeros(files.shape[0])
        for entry in entries:
            acc += _entry_max(tables, entry, files)
        best = max(best, float(acc.max()))
    return best


def worst_case_demand(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> tuple[float, np.ndarray]:
    """Worst-case load together with a demand vector attaining it.

    Ties return the first maximizer in enumeration order, so the result is
    deterministic for a given instance and layout.
    """
    _check_budget(instance, layout, term_budget)
    tables = TermTables(instance, layout, q)
    entries = subset_entries(layout)
    classes = DemandClasses(instance, layout)
    best = -math.inf
    best_demand = np.zeros(layout.total, dtype=np.int64)
    for start in range(0, classes.n_classes, _CHUNK_ROWS):
        files, _, _ = classes.chunk(start, min(start + _CHUNK_ROWS, classes.n_classes))
        acc = np.zeros(files.shape[0])
        for entry in entries:
            acc += _entry_max(tables, entry, files)
        i = int(acc.argmax())
        if acc[i] > best:
            best = float(acc[i])
            best_demand = files[i].copy()
    return best, best_demand


def average_load(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> float:
    """Popularity-weighted mean delivery load over demand vectors."""
    _check_budget(instance, layout, term_budget)
    tables = TermTables(instance, layout, q)
    entries = subset_entries(layout)
    classes = DemandClasses(instance, layout)
    total = 0.0
    for files, mult, pop in classes.iter_chunks():
        acc = np.zeros(files.shape[0])
        for entry in entries:
            acc += _entry_max(tables, entry, files)
        total += float(np.dot(mult * pop, acc))
    return total


def smoothed_average(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    smoothing: SmoothingConfig | None = None,
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> float:
    """Average load with the per-subset max replaced by log-sum-exp."""
    value, _ = _smoothed_average(
        instance, layout, q, smoothing, want_grad=False, term_budget=term_budget
    )
    return value


def smoothed_average_with_grad(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    smoothing: SmoothingConfig | None = None,
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> tuple[float, np.ndarray]:
    """Smoothed average load and its gradient in ``q``; shape (T, N)."""
    value, grad = _smoothed_average(
        instance, layout, q, smoothing, want_grad=True, term_budget=term_budget
    )
    return value, grad


def smoothed_worst_case(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    smoothing: SmoothingConfig | None = None,
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> float:
    """Worst-case load with both maxima replaced by log-sum-exp.

    The outer log-sum-exp runs over all ``N**K`` demand vectors (via class
    multiplicities), the inner one over each subset's members, so the result
    upper-bounds the exact worst-case load.
    """
    value, _ = _smoothed_worst(
        instance, layout, q, smoothing, want_grad=False, term_budget=term_budget
    )
    return value


def smoothed_worst_case_with_grad(
    instance: SystemInstance,
    layout: TierLayout,
    q,
    smoothing: SmoothingConfig | None = None,
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> tuple[float, np.ndarray]:
    """Smoothed worst-case load and its gradient in ``q``; shape (T, N)."""
    value, grad = _smoothed_worst(
        instance, layout, q, smoothing, want_grad=True, term_budget=term_budget
    )
    return value, grad


def _entry_grad_accumulate(
    tables: TermTables,
    entry: SubsetEntry,
    files: np.ndarray,
    c: float,
    class_weight: np.ndarray,
    grad: np.ndarray,
) -> np.ndarray:
    """Add the entry's weighted softmax gradient; returns the entry's LSE."""
    terms = np.stack(
        [tables.g(k)[files[:, p]] for p, k in zip(entry.members, entry.comp_keys)]
    )
    peak = terms.max(axis=0)
    expo = np.exp(c * (terms - peak))
    denom = expo.sum(axis=0)
    soft = expo / denom
    for i, (pos, key) in enumerate(zip(entry.members, entry.comp_keys)):
        coeff = class_weight * soft[i]
        col = files[:, pos]
        dg = tables.dg(key)
        for t in range(grad.shape[0]):
            if tables.layout.counts[t]:
                np.add.at(grad[t], col, coeff * dg[t][col])
    return peak + np.log(denom) / c


def _smoothed_average(
    instance, layout, q, smoothing, *, want_grad: bool, term_budget: int
):
    _check_budget(instance, layout, term_budget)
    cfg = smoothing or SmoothingConfig()
    c = cfg.effective_c(instance)
    tables = TermTables(instance, layout, q)
    entries = subset_entries(layout)
    classes = DemandClasses(instance, layout)
    total = 0.0
    grad = np.zeros((instance.n_tiers, instance.n_files)) if want_grad else None
    for files, mult, pop in classes.iter_chunks():
        w = mult * pop
        acc = np.zeros(files.shape[0])
        for entry in entries:
            if want_grad:
                acc += _entry_grad_accumulate(tables, entry, files, c, w, grad)
            else:
                acc += _entry_lse(tables, entry, files, c)
        total += float(np.dot(w, acc))
    return total, grad


def _smoothed_worst(
    instance, layout, q, smoothing, *, want_grad: bool, term_budget: int
):
    _check_budget(instance, layout, term_budget)
    cfg = smoothing or SmoothingConfig()
    c = cfg.effective_c(instance)
    tables = TermTables(instance, layout, q)
    entries = subset_entries(layout)
    classes = DemandClasses(instance, layout)

    # First sweep: streaming log-sum-exp of c*A + log(multiplicity).
    peak = -math.inf
    accum = 0.0
    for files, mult, _ in classes.iter_chunks():
        acc = np.zeros(files.shape[0])
        for entry in entries:
            acc += _entry_lse(tables, entry, files, c)
        x = c * acc + np.log(mult)
        m = float(x.max())
        s = float(np.exp(x - m).sum())
        if m > peak:
            accum = accum * math.exp(peak - m) + s
            peak = m
        else:
            accum += s * math.exp(m - peak)
    value = (peak + math.log(accum)) / c
    if not want_grad:
        return value, None

    # Second sweep: classes weighted by their share of the outer softmax.
    grad = np.zeros((instance.n_tiers, instance.n_files))
    for files, mult, _ in classes.iter_chunks():
        acc = np.zeros(files.shape[0])
        for entry in entries:
            acc += _entry_lse(tables, entry, files, c)
        w = np.exp(c * acc + np.log(mult) - peak) / accum
        for entry in entries:
            _entry_grad_accumulate(tables, entry, files, c, w, grad)
    return value, grad
