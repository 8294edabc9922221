"""Low-complexity solvers: projected gradient descent on the smoothed load.

Replacing the maxima in the exact load with scaled log-sum-exp gives a
differentiable surrogate that upper-bounds the load and exceeds it by at
most ``increment_bound``. This module minimizes that surrogate with a
multi-start projected gradient method; every start is deterministic given
``(seed, start-index)`` and the best final point wins, ties going to the
lowest start index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import loads
from .loads import DEFAULT_TERM_BUDGET, SmoothingConfig
from .model import CachingParameter, ScenarioError, SystemInstance, TierLayout

__all__ = [
    "ProjectedGradConfig",
    "SmoothTrace",
    "project_feasible",
    "minimize_smoothed",
    "increment_bound",
]

#: Exact load is recomputed every this many iterations for the trace.
CHECKPOINT_EVERY = 10

_BISECT_STEPS = 100
_MIN_STEP = 1e-14


@dataclass(frozen=True)
class ProjectedGradConfig:
    """Parameters of the multi-start projected gradient solver."""

    c: float = 1.0
    step_init: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    starts: int = 8
    tol: float = 1e-8
    max_iter: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.c < 1:
            raise ScenarioError(f"smoothing parameter c must be >= 1, got {self.c}")
        if self.step_init <= 0 or not (0 < self.shrink < 1) or self.armijo <= 0:
            raise ScenarioError("backtracking parameters must be positive, shrink in (0,1)")
        if self.starts < 1:
            raise ScenarioError("need at least one start")
        if self.tol <= 0 or self.max_iter < 1:
            raise ScenarioError("tolerance must be positive and max_iter >= 1")


def _project_tier(row: np.ndarray, sizes: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection of one tier's row onto its box-and-budget set."""
    y = np.clip(row, 0.0, 1.0)
    if float(y @ sizes) <= cap:
        return y
    # Budget active: q(lam) = clip(row - lam*sizes, 0, 1) with the used
    # volume strictly decreasing in lam; bisect on the multiplier.
    positive = row > 0
    hi = float((row[positive] / sizes[positive]).max())
    lo = 0.0
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        used = float(np.clip(row - mid * sizes, 0.0, 1.0) @ sizes)
        if used > cap:
            lo = mid
        else:
            hi = mid
    return np.clip(row - hi * sizes, 0.0, 1.0)


def project_feasible(q_hat, instance: SystemInstance) -> CachingParameter:
    """Euclidean projection onto the feasible caching parameters.

    The feasible set is ``0 <= q <= 1`` with per-tier budget
    ``sum_n q[t,n] V[n] <= M[t]``; tiers decouple, so each row is projected
    independently by bisection on its budget multiplier.
    """
    mat = np.atleast_2d(np.asarray(q_hat, dtype=float))
    if mat.shape != (instance.n_tiers, instance.n_files):
        raise ScenarioError(
            f"expected a {instance.n_tiers}x{instance.n_files} array, got {mat.shape}"
        )
    out = np.empty_like(mat)
    for t in range(instance.n_tiers):
        out[t] = _project_tier(mat[t], instance.file_sizes, float(instance.cache_sizes[t]))
    return CachingParameter(out)


@dataclass(frozen=True)
class SmoothTrace:
    """Multi-start optimization record.

    ``rows`` holds ``(start, iteration, smoothed objective, exact load)``
    tuples; the exact load is evaluated only at checkpoints (first, every
    tenth, and final iteration) and is ``nan`` elsewhere.
    """

    rows: tuple[tuple[int, int, float, float], ...]
    best_start: int
    objective: float
    exact_load: float


def _objective_fns(which: str):
    if which == "wst":
        return loads.smoothed_worst_case, loads.smoothed_worst_case_with_grad
    if which == "avg":
        return loads.smoothed_average, loads.smoothed_average_with_grad
    raise ScenarioError(f"objective must be 'wst' or 'avg', got {which!r}")


def minimize_smoothed(
    instance: SystemInstance,
    layout: TierLayout,
    config: ProjectedGradConfig | None = None,
    which: str = "wst",
    *,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> tuple[CachingParameter, SmoothTrace]:
    """Minimize the smoothed load by multi-start projected gradient descent.

    Each start projects a uniform random point into the feasible set and
    runs gradient steps with Armijo backtracking along the projection arc;
    the per-start objective trace is nonincreasing. Returns the caching
    parameter whose final smoothed objective is smallest.
    """
    if config is None:
        config = ProjectedGradConfig()
    fn, fn_grad = _objective_fns(which)
    smoothing = SmoothingConfig(config.c)
    exact_fn = loads.worst_case_load if which == "wst" else loads.average_load

    rows: list[tuple[int, int, float, float]] = []
    best: tuple[float, int, CachingParameter] | None = None
    for s in range(config.starts):
        rng = np.random.default_rng((config.seed, s))
        draw = rng.uniform(0.0, 1.0, size=(instance.n_tiers, instance.n_files))
        q = project_feasible(draw, instance).q.copy()
        value, grad = fn_grad(
            instance, layout, q, smoothing, term_budget=term_budget
        )

        def checkpoint(it: int, val: float, point: np.ndarray, force: bool) -> None:
            if force or it % CHECKPOINT_EVERY == 0:
                exact = exact_fn(
                    instance, layout, CachingParameter(point), term_budget=term_budget
                )
            else:
                exact = math.nan
            rows.append((s, it, val, exact))

        checkpoint(0, value, q, force=True)
        for it in range(1, config.max_iter + 1):
            step = config.step_init
            moved = False
            while step >= _MIN_STEP:
                cand = project_feasible(q - step * grad, instance).q
                cand_value = fn(
                    instance, layout, cand, smoothing, term_budget=term_budget
                )
                gain = float(grad.ravel() @ (q - cand).ravel())
                if cand_value <= value - config.armijo * gain:
                    moved = True
                    break
                step *= config.shrink
            if not moved:
                break
            drop = value - cand_value
            q = cand
            value = cand_value
            stalled = drop <= config.tol * max(abs(value), 1e-12)
            last = stalled or it == config.max_iter
            checkpoint(it, value, q, force=last)
            if stalled:
                break
            value, grad = fn_grad(
                instance, layout, q, smoothing, term_budget=term_budget
            )
        if best is None or value < best[0]:
            best = (value, s, CachingParameter(q))

    objective, best_start, q_best = best
    exact = exact_fn(instance, layout, q_best, term_budget=term_budget)
    trace = SmoothTrace(
        rows=tuple(rows),
        best_start=best_start,
        objective=objective,
        exact_load=exact,
    )
    return q_best, trace


def increment_bound(K: int, N: int, c: float, which: str = "wst") -> float:
    """Largest possible excess of the smoothed load over the exact load.

    Equals ``(1/c) (sum_i C(K,i) ln i + K ln N)`` for the worst case and
    drops the ``K ln N`` term for the average case. Binomials switch to the
    log domain once exact integers stop fitting in floats.
    """
    if which not in ("wst", "avg"):
        raise ScenarioError(f"objective must be 'wst' or 'avg', got {which!r}")
    if K < 1 or N < 1 or c < 1:
        raise ScenarioError("need K >= 1, N >= 1, c >= 1")
    total = 0.0
    if K <= 300:
        for i in range(2, K + 1):
            total += math.comb(K, i) * math.log(i)
    else:
        for i in range(2, K + 1):
            log_term = (
                math.lgamma(K + 1)
                - math.lgamma(i + 1)
                - math.lgamma(K - i + 1)
                + math.log(math.log(i))
            )
            try:
                total += math.exp(log_term)
            except OverflowError:
                return math.inf
    if which == "wst":
        total += K * math.log(N)
    return total / c
