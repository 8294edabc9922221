"""Successive convex approximation over geometric programs.

The exact load minimization is lifted into posynomial form: a complement
variable ``x[t,n]`` stands for ``1 - q[t,n]``, an auxiliary ``w`` upper
bounds every subset term of every demand class, and (for the worst case) a
scalar ``u`` upper bounds each class's total. Every constraint is then
posynomial except the coupling ``q + x >= 1``, whose posynomial denominator
is replaced by its arithmetic-geometric mean condensation at the current
iterate (tight there, a monomial everywhere). Each round solves the
resulting geometric program and re-condenses at its solution.

The iteration is monotone by construction: candidate points are accepted
only if the exact load does not increase, so the reported trace never rises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import loads
from .gp import (
    GpError,
    GpModel,
    Monomial,
    Posynomial,
    condense_ratio,
    solve_gp,
)
from .loads import DemandClasses, average_load, subset_entries, worst_case_load
from .model import CachingParameter, ScenarioError, SystemInstance, TierLayout

__all__ = [
    "LIFT_FLOOR",
    "LiftedPoint",
    "ScaReport",
    "lift",
    "solve_sca",
    "solve_sca_worst_case",
    "solve_sca_average",
]

#: Smallest value a lifted coordinate is allowed to take. Keeps every
#: variable strictly positive so logarithms stay finite.
LIFT_FLOOR = 1e-9

_WORST = "wst"
_AVERAGE = "avg"


def _check_which(which: str) -> str:
    if which not in (_WORST, _AVERAGE):
        raise ScenarioError(f"objective must be 'wst' or 'avg', got {which!r}")
    return which


@dataclass(frozen=True)
class LiftedPoint:
    """A caching parameter with its auxiliary lifted coordinates.

    ``w[i, e]`` upper bounds (here: equals) the largest term of subset entry
    ``e`` in demand class ``i``; ``u`` is the largest per-class total. The
    ``value`` equals the exact load of ``q`` up to the clipping floor.
    """

    which: str
    q: np.ndarray
    x: np.ndarray
    w: np.ndarray
    u: float
    value: float


def lift(
    q,
    instance: SystemInstance,
    layout: TierLayout,
    which: str = _WORST,
    *,
    floor: float = LIFT_FLOOR,
    term_budget: int = loads.DEFAULT_TERM_BUDGET,
) -> LiftedPoint:
    """Lift ``q`` into the auxiliary coordinates of the posynomial model."""
    _check_which(which)
    mat = loads._q_matrix(instance, q)
    qc = np.clip(mat, floor, 1.0)
    x = np.maximum(1.0 - qc, floor)
    loads._check_budget(instance, layout, term_budget)

    tables = loads.TermTables(instance, layout, qc, complement=x)
    entries = subset_entries(layout)
    classes = DemandClasses(instance, layout)
    w = np.empty((classes.n_classes, len(entries)))
    u = -math.inf
    value_avg = 0.0
    row = 0
    for files, mult, pop in classes.iter_chunks():
        totals = np.zeros(files.shape[0])
        for e_idx, entry in enumerate(entries):
            best = tables.g(entry.comp_keys[0])[files[:, entry.members[0]]].copy()
            for pos, key in zip(entry.members[1:], entry.comp_keys[1:]):
                np.maximum(best, tables.g(key)[files[:, pos]], out=best)
            w[row : row + files.shape[0], e_idx] = best
            totals += best
        u = max(u, float(totals.max()))
        value_avg += float(np.dot(mult * pop, totals))
        row += files.shape[0]
    value = u if which == _WORST else value_avg
    return LiftedPoint(which=which, q=qc, x=x, w=w, u=u, value=value)


@dataclass(frozen=True)
class ScaReport:
    """Outcome of a successive approximation run.

    ``trace[k]`` is the exact load of the accepted iterate after ``k``
    rounds (``trace[0]`` is the starting point); it is nonincreasing.
    ``status`` is ``converged`` (relative change below tolerance, or no
    further improvement possible), ``iteration-cap``, or ``solver-failure``
    (the inner solver raised; the last accepted iterate is still returned,
    with the reason in ``detail``). ``kkt_residual`` is the stationarity
    residual of the last completed inner solve, ``nan`` when no round ran.
    """

    which: str
    q: CachingParameter
    trace: tuple[float, ...]
    status: str
    iterations: int
    kkt_residual: float = math.nan
    detail: str = ""

    @property
    def load(self) -> float:
        return self.trace[-1]

    def trace_rows(self):
        """(iteration, objective) pairs, ready for delimited output."""
        return list(enumerate(self.trace))


def _exact_load(instance, layout, q, which, term_budget):
    if which == _WORST:
        return worst_case_load(instance, layout, q, term_budget=term_budget)
    return average_load(instance, layout, q, term_budget=term_budget)


def _qname(t: int, n: int) -> str:
    return f"q[{t},{n}]"


def _xname(t: int, n: int) -> str:
    return f"x[{t},{n}]"


def _wname(i: int, e: int) -> str:
    return f"w[{i},{e}]"


class _ModelBuilder:
    """Constraint blocks that do not change across rounds, built once."""

    def __init__(self, instance, layout, which, term_budget):
        self.instance = instance
        self.layout = layout
        self.which = which
        self.active = [t for t in range(layout.n_tiers) if layout.counts[t]]
        for t in self.active:
            if not instance.cache_sizes[t] > 0:
                raise ScenarioError(
                    f"tier {t} has zero cache capacity; its caching fractions are "
                    "forced to zero and cannot enter the positive-variable model"
                )
        loads._check_budget(instance, layout, term_budget)
        self.entries = subset_entries(layout)
        self.classes = DemandClasses(instance, layout)
        files, mult, pop = self.classes.chunk(0, self.classes.n_classes)
        self.files = files
        self.class_weight = mult * pop
        if which == _AVERAGE:
            self.kept = [i for i in range(files.shape[0]) if self.class_weight[i] > 0]
        else:
            self.kept = list(range(files.shape[0]))
        self.static = self._static_constraints()
        self.objective_posy = self._objective()

    def _static_constraints(self):
        inst, layout = self.instance, self.layout
        cons: list[Posynomial | Monomial] = []
        # Cache budgets: sum_n q[t,n] V[n] / M[t] <= 1.
        for t in self.active:
            cap = float(inst.cache_sizes[t])
            cons.append(
                Posynomial(
                    tuple(
                        Monomial(float(inst.file_sizes[n]) / cap, {_qname(t, n): 1.0})
                        for n in range(inst.n_files)
                    )
                )
            )
        # Box: q[t,n] <= 1 and x[t,n] <= 1. The complement bound keeps x
        # from drifting upward when no subset term mentions it (for example
        # files whose demand classes all have zero popularity weight).
        for t in self.active:
            for n in range(inst.n_files):
                cons.append(Monomial(1.0, {_qname(t, n): 1.0}))
                cons.append(Monomial(1.0, {_xname(t, n): 1.0}))
        # Subset terms: V * prod q^a * prod x^(K-a) <= w, per class and leader.
        for i in self.kept:
            demand = self.files[i]
            for e_idx, entry in enumerate(self.entries):
                wvar = _wname(i, e_idx)
                for pos, key in zip(entry.members, entry.comp_keys):
                    f = int(demand[pos])
                    exps: dict[str, float] = {wvar: -1.0}
                    for t, a in enumerate(key):
                        k = self.layout.counts[t]
                        if a:
                            exps[_qname(t, f)] = float(a)
                        if k - a:
                            exps[_xname(t, f)] = float(k - a)
                    cons.append(Monomial(float(inst.file_sizes[f]), exps))
        # Per-class totals under u (worst case only).
        if self.which == _WORST:
            for i in self.kept:
                cons.append(
                    Posynomial(
                        tuple(
                            Monomial(1.0, {_wname(i, e): 1.0, "u": -1.0})
                            for e in range(len(self.entries))
                        )
                    )
                )
        return tuple(cons)

    def _objective(self):
        if self.which == _WORST:
            return Monomial(1.0, {"u": 1.0})
        terms = []
        for i in self.kept:
            wt = float(self.class_weight[i])
            for e in range(len(self.entries)):
                terms.append(Monomial(wt, {_wname(i, e): 1.0}))
        return Posynomial(tuple(terms))

    def coupling_constraints(self, anchor: dict[str, float]):
        """Condensed ``1 / (q + x) <= 1`` rows, tight at the anchor."""
        cons = []
        for t in self.active:
            for n in range(self.instance.n_files):
                posy = Posynomial(
                    (
                        Monomial(1.0, {_qname(t, n): 1.0}),
                        Monomial(1.0, {_xname(t, n): 1.0}),
                    )
                )
                cons.append(condense_ratio(posy, anchor))
        return tuple(cons)

    def model(self, anchor: dict[str, float]) -> GpModel:
        return GpModel(
            objective=self.objective_posy,
            constraints=self.static + self.coupling_constraints(anchor),
        )

    def start_point(self, lifted: LiftedPoint, inflate: float = 1e-8):
        """Strictly feasible warm start built from a lifted point.

        Pulls ``q`` off its box and budget boundaries, opens the coupling
        ``q + x > 1`` slightly, and inflates ``w`` and ``u`` so that every
        constraint holds with a positive margin.
        """
        inst = self.instance
        # The q floor sits above 2*inflate so that x = 1 - q + 2*inflate
        # stays strictly below its unit box.
        q = np.clip(lifted.q, 4.0 * inflate, 1.0 - 1e-7)
        for t in self.active:
            cap = float(inst.cache_sizes[t])
            used = float(q[t] @ inst.file_sizes)
            if used >= cap * (1.0 - inflate):
                q[t] *= cap * (1.0 - 2.0 * inflate) / used
        x = np.maximum(1.0 - q, LIFT_FLOOR) + 2.0 * inflate

        tables = loads.TermTables(inst, self.layout, q, complement=x)
        point: dict[str, float] = {}
        for t in self.active:
            for n in range(inst.n_files):
                point[_qname(t, n)] = float(q[t, n])
                point[_xname(t, n)] = float(x[t, n])
        u = 0.0
        for i in self.kept:
            demand = self.files[i]
            total = 0.0
            for e_idx, entry in enumerate(self.entries):
                best = max(
                    float(tables.g(key)[demand[pos]])
                    for pos, key in zip(entry.members, entry.comp_keys)
                )
                wv = max(best, LIFT_FLOOR) * (1.0 + inflate)
                point[_wname(i, e_idx)] = wv
                total += wv
            u = max(u, total)
        if self.which == _WORST:
            point["u"] = u * (1.0 + inflate)
        return point

    def extract_q(self, solution_point: dict[str, float], fallback: np.ndarray):
        q = fallback.copy()
        for t in self.active:
            for n in range(self.instance.n_files):
                q[t, n] = solution_point[_qname(t, n)]
        q = np.clip(q, 0.0, 1.0)
        # The barrier keeps budgets strictly satisfied; clean up float dust.
        for t in self.active:
            cap = float(self.instance.cache_sizes[t])
            used = float(q[t] @ self.instance.file_sizes)
            if used > cap:
                q[t] *= cap / used
        return q


def solve_sca(
    instance: SystemInstance,
    layout: TierLayout,
    which: str = _WORST,
    init=None,
    *,
    tol: float = 1e-6,
    max_iter: int = 50,
    gp_tol: float = 1e-8,
    term_budget: int = loads.DEFAULT_TERM_BUDGET,
) -> tuple[CachingParameter, ScaReport]:
    """Minimize the exact load by successive geometric programming.

    ``init`` seeds the iteration; by default the per-tier uniform reference
    placement is used. Alternative starts (multi-start) are supported by
    calling this again with other ``init`` values and keeping the best
    report. Rounds stop when the relative load change falls below ``tol``,
    when a round cannot improve the load (already stationary), or after
    ``max_iter`` rounds.
    """
    _check_which(which)
    if init is None:
        from .baselines import tier_uniform_max_file

        init = tier_uniform_max_file(instance)
    q = loads._q_matrix(instance, init)
    builder = _ModelBuilder(instance, layout, which, term_budget)

    load = _exact_load(instance, layout, q, which, term_budget)
    trace = [load]
    status = "iteration-cap"
    detail = ""
    kkt = math.nan
    rounds = 0
    for _ in range(max_iter):
        lifted = lift(q, instance, layout, which, term_budget=term_budget)
        start = builder.start_point(lifted)
        anchor = start
        model = builder.model(anchor)
        try:
            solution = solve_gp(model, start=start, tol=gp_tol)
        except GpError as exc:
            status = "solver-failure"
            detail = str(exc)
            break
        rounds += 1
        kkt = solution.kkt_residual
        q_new = builder.extract_q(solution.point, q)
        load_new = _exact_load(instance, layout, q_new, which, term_budget)
        if load_new > load:
            # The condensed model cannot improve the exact load any more.
            status = "converged"
            break
        q = q_new
        trace.append(load_new)
        if abs(load - load_new) <= tol * max(abs(load), 1e-12):
            load = load_new
            status = "converged"
            break
        load = load_new
    report = ScaReport(
        which=which,
        q=CachingParameter(q),
        trace=tuple(trace),
        status=status,
        iterations=rounds,
        kkt_residual=kkt,
        detail=detail,
    )
    return report.q, report


def solve_sca_worst_case(
    instance: SystemInstance,
    layout: TierLayout,
    init=None,
    tol: float = 1e-6,
    max_iter: int = 50,
    **kwargs,
) -> tuple[CachingParameter, ScaReport]:
    """Stationary point of the worst-case load minimization."""
    return solve_sca(
        instance, layout, _WORST, init, tol=tol, max_iter=max_iter, **kwargs
    )


def solve_sca_average(
    instance: SystemInstance,
    layout: TierLayout,
    init=None,
    tol: float = 1e-6,
    max_iter: int = 50,
    **kwargs,
) -> tuple[CachingParameter, ScaReport]:
    """Stationary point of the popularity-averaged load minimization."""
    return solve_sca(
        instance, layout, _AVERAGE, init, tol=tol, max_iter=max_iter, **kwargs
    )
