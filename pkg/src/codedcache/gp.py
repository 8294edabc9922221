"""Geometric programming in posynomial form.

A monomial is ``c * prod_i x_i**a_i`` with ``c > 0`` over positive
variables; a posynomial is a sum of monomials. A geometric program
minimizes a posynomial subject to posynomial constraints ``g(x) <= 1``.
Substituting ``x = exp(y)`` makes every constraint a log-sum-exp function of
``y``, hence convex.

``solve_gp`` is a self-contained log-barrier interior-point method with
damped Newton centering. Phase one certifies strict feasibility by solving
the same program with a multiplicative slack variable (itself a geometric
program with an obvious interior point); phase two follows the central path
until the duality gap is below tolerance. Failures are reported distinctly:
``GpInfeasibleError`` when phase one proves there is no interior point, a
``"stalled"`` status when Newton cannot make progress.

``condense_monomial`` is the arithmetic-geometric mean condensation used by
successive approximation schemes: the best monomial lower bound on a
posynomial that is tight at a given anchor point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

__all__ = [
    "GpError",
    "GpInfeasibleError",
    "Monomial",
    "Posynomial",
    "GpModel",
    "GpSolution",
    "solve_gp",
    "condense_monomial",
    "monomial_ratio",
    "format_model",
]


class GpError(RuntimeError):
    """Raised for malformed models or solver breakdowns."""


class GpInfeasibleError(GpError):
    """Phase one certified that the program has no interior point."""


@dataclass(frozen=True)
class Monomial:
    """``coefficient * prod var**power`` with a positive coefficient."""

    coefficient: float
    exponents: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.coefficient > 0 and math.isfinite(self.coefficient)):
            raise GpError(f"monomial coefficient must be positive, got {self.coefficient}")
        cleaned = {v: float(e) for v, e in self.exponents.items() if e != 0.0}
        object.__setattr__(self, "exponents", cleaned)

    def evaluate(self, point: dict[str, float]) -> float:
        value = math.log(self.coefficient)
        for var, e in self.exponents.items():
            value += e * math.log(point[var])
        return math.exp(value)


@dataclass(frozen=True)
class Posynomial:
    """A nonempty sum of monomials."""

    terms: tuple[Monomial, ...]

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        if not terms:
            raise GpError("a posynomial needs at least one term")
        object.__setattr__(self, "terms", terms)

    def evaluate(self, point: dict[str, float]) -> float:
        return sum(t.evaluate(point) for t in self.terms)

    def variables(self):
        for t in self.terms:
            yield from t.exponents


def as_posynomial(p: Posynomial | Monomial) -> Posynomial:
    return p if isinstance(p, Posynomial) else Posynomial((p,))


def monomial_ratio(numerator: Monomial, denominator: Monomial) -> Monomial:
    """``numerator / denominator``, which is again a monomial."""
    exps = dict(numerator.exponents)
    for var, e in denominator.exponents.items():
        exps[var] = exps.get(var, 0.0) - e
    return Monomial(numerator.coefficient / denominator.coefficient, exps)


def condense_monomial(posy: Posynomial | Monomial, anchor: dict[str, float]) -> Monomial:
    """Best monomial lower bound on ``posy`` that is tight at ``anchor``.

    Weights each term by its share of the posynomial's value at the anchor
    and applies the weighted arithmetic-geometric mean inequality.
    """
    posy = as_posynomial(posy)
    values = [t.evaluate(anchor) for t in posy.terms]
    total = sum(values)
    if not total > 0:
        raise GpError("condensation anchor must give the posynomial a positive value")
    log_coeff = 0.0
    exps: dict[str, float] = {}
    for term, val in zip(posy.terms, values):
        share = val / total
        if share == 0.0:
            continue
        log_coeff += share * (math.log(term.coefficient) - math.log(share))
        for var, e in term.exponents.items():
            exps[var] = exps.get(var, 0.0) + share * e
    return Monomial(math.exp(log_coeff), exps)


def condense_ratio(
    denominator: Posynomial | Monomial,
    anchor: dict[str, float],
    numerator: Monomial | None = None,
) -> Monomial:
    """Monomial constraint ``numerator / denominator <= 1`` after condensing.

    The denominator is replaced by its tight-at-anchor monomial lower bound,
    so the returned constraint implies the original ratio constraint and
    agrees with it at the anchor.
    """
    if numerator is None:
        numerator = Monomial(1.0)
    return monomial_ratio(numerator, condense_monomial(denominator, anchor))


@dataclass(frozen=True)
class GpModel:
    """Minimize ``objective`` subject to each constraint ``<= 1``."""

    objective: Posynomial | Monomial
    constraints: tuple[Posynomial | Monomial, ...] = ()
    variables: tuple[str, ...] | None = None

    def variable_order(self) -> tuple[str, ...]:
        if self.variables is not None:
            return self.variables
        seen: dict[str, None] = {}
        for v in as_posynomial(self.objective).variables():
            seen.setdefault(v)
        for con in self.constraints:
            for v in as_posynomial(con).variables():
                seen.setdefault(v)
        return tuple(seen)


@dataclass
class GpSolution:
    point: dict[str, float]
    objective: float
    status: str
    kkt_residual: float
    iterations: int


def format_model(model: GpModel, max_lines: int = 200) -> str:
    """Readable dump: one posynomial per line, terms in declaration order."""

    def fmt_posy(p) -> str:
        parts = []
        for t in as_posynomial(p).terms:
            bits = [f"{t.coefficient:.6g}"]
            bits += [
                f"{v}^{e:g}" if e != 1 else v
                for v, e in sorted(t.exponents.items())
            ]
            parts.append(" * ".join(bits))
        return " + ".join(parts)

    lines = [f"minimize {fmt_posy(model.objective)}"]
    for i, con in enumerate(model.constraints):
        lines.append(f"s.t. [{i}] {fmt_posy(con)} <= 1")
        if len(lines) >= max_lines:
            lines.append(f"... ({len(model.constraints) - i - 1} more constraints)")
            break
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Compilation to log-domain arrays.


class _Compiled:
    """Log-domain view of a model: objective and constraints as LSE data.

    Single-term constraints are affine in ``y`` and batched into one sparse
    matrix; multi-term constraints keep their own small sparse blocks.
    """

    def __init__(self, model: GpModel):
        order = model.variable_order()
        self.order = order
        self.index = {v: i for i, v in enumerate(order)}
        self.n = len(order)
        if model.variables is not None:
            for con in (model.objective, *model.constraints):
                for v in as_posynomial(con).variables():
                    if v not in self.index:
                        raise GpError(f"constraint uses undeclared variable {v!r}")

        self.obj_A, self.obj_b = self._posy_arrays(model.objective)
        mono_rows, mono_offsets = [], []
        self.posys: list[tuple[scipy.sparse.csr_matrix, np.ndarray]] = []
        for con in model.constraints:
            A, b = self._posy_arrays(con)
            if A.shape[0] == 1:
                mono_rows.append(A)
                mono_offsets.append(b[0])
            else:
                self.posys.append((A, b))
        if mono_rows:
            self.mono_A = scipy.sparse.vstack(mono_rows, format="csr")
            self.mono_b = np.array(mono_offsets)
        else:
            self.mono_A = scipy.sparse.csr_matrix((0, self.n))
            self.mono_b = np.zeros(0)
        self.m = self.mono_b.size + len(self.posys)

    def _posy_arrays(self, p) -> tuple[scipy.sparse.csr_matrix, np.ndarray]:
        terms = as_posynomial(p).terms
        rows, cols, vals = [], [], []
        b = np.empty(len(terms))
        for k, t in enumerate(terms):
            b[k] = math.log(t.coefficient)
            for v, e in t.exponents.items():
                rows.append(k)
                cols.append(self.index[v])
                vals.append(e)
        A = scipy.sparse.csr_matrix(
            (vals, (rows, cols)), shape=(len(terms), self.n)
        )
        return A, b

    @staticmethod
    def _lse(A, b, y):
        z = A @ y + b
        peak = float(z.max())
        e = np.exp(z - peak)
        s = float(e.sum())
        return peak + math.log(s), e / s

    def constraint_values(self, y: np.ndarray) -> np.ndarray:
        out = np.empty(self.m)
        k = self.mono_b.size
        out[:k] = self.mono_A @ y + self.mono_b
        for i, (A, b) in enumerate(self.posys):
            out[k + i], _ = self._lse(A, b, y)
        return out

    def objective_value(self, y: np.ndarray) -> float:
        val, _ = self._lse(self.obj_A, self.obj_b, y)
        return val

    def merit(self, y: np.ndarray, t: float):
        """Value, gradient and Hessian of ``t*f0(y) - sum log(-g_i(y))``.

        Returns ``(inf, None, None)`` outside the interior.
        """
        g = self.constraint_values(y)
        if np.any(g >= 0):
            return math.inf, None, None
        f0, sigma0 = self._lse(self.obj_A, self.obj_b, y)
        value = t * f0 - float(np.log(-g).sum())

        grad = np.zeros(self.n)
        sparse_h = scipy.sparse.csr_matrix((self.n, self.n))
        rank1_vecs: list[np.ndarray] = []
        rank1_coefs: list[float] = []

        # Objective.
        v0 = np.asarray(self.obj_A.T @ sigma0).ravel()
        grad += t * v0
        if self.obj_A.shape[0] > 1:
            sparse_h = sparse_h + t * (
                self.obj_A.T @ self.obj_A.multiply(sigma0[:, None])
            )
            rank1_vecs.append(v0)
            rank1_coefs.append(-t)

        # Batched single-term constraints: affine, curvature from the barrier.
        k = self.mono_b.size
        if k:
            gm = g[:k]
            w1 = 1.0 / (-gm)
            grad += np.asarray(self.mono_A.T @ w1).ravel()
            sparse_h = sparse_h + self.mono_A.T @ self.mono_A.multiply(
                (w1**2)[:, None]
            )

        # Multi-term constraints.
        for i, (A, b) in enumerate(self.posys):
            gi = g[k + i]
            _, sigma = self._lse(A, b, y)
            vi = np.asarray(A.T @ sigma).ravel()
            w1 = 1.0 / (-gi)
            grad += w1 * vi
            sparse_h = sparse_h + w1 * (A.T @ A.multiply(sigma[:, None]))
            rank1_vecs.append(vi)
            rank1_coefs.append(w1**2 - w1)

        hess = np.asarray(sparse_h.todense())
        if rank1_vecs:
            V = np.stack(rank1_vecs, axis=1)
            hess += (V * np.asarray(rank1_coefs)) @ V.T
        return value, grad, hess

    def merit_value(self, y: np.ndarray, t: float) -> float:
        g = self.constraint_values(y)
        if np.any(g >= 0):
            return math.inf
        return t * self.objective_value(y) - float(np.log(-g).sum())

    def kkt_residual(self, y: np.ndarray, t: float) -> float:
        g = self.constraint_values(y)
        _, sigma0 = self._lse(self.obj_A, self.obj_b, y)
        r = np.asarray(self.obj_A.T @ sigma0).ravel()
        lam = 1.0 / (t * (-g))
        k = self.mono_b.size
        if k:
            r += np.asarray(self.mono_A.T @ lam[:k]).ravel()
        for i, (A, b) in enumerate(self.posys):
            _, sigma = self._lse(A, b, y)
            r += lam[k + i] * np.asarray(A.T @ sigma).ravel()
        gap = self.m / t if self.m else 0.0
        return max(float(np.abs(r).max()) if r.size else 0.0, gap)


# ---------------------------------------------------------------------------
# Barrier engine.

_MU = 20.0
_ARMIJO = 1e-4
_SHRINK = 0.5
_MIN_STEP = 1e-14
_MAX_CENTER_STEPS = 60
# Largest change of any log-variable in one Newton step. Keeps rides along
# nearly-unbounded rays (for example in phase one) at recoverable scale.
_MAX_LOG_STEP = 100.0


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray | None:
    ridge = 0.0
    base = max(1.0, float(np.abs(hess).max()))
    for _ in range(12):
        try:
            h = hess if ridge == 0.0 else hess + ridge * np.eye(hess.shape[0])
            c, low = scipy.linalg.cho_factor(h, check_finite=False)
            return scipy.linalg.cho_solve((c, low), -grad, check_finite=False)
        except scipy.linalg.LinAlgError:
            ridge = max(ridge * 10.0, base * 1e-12)
    return None


def _center(compiled: _Compiled, y: np.ndarray, t: float, inner_tol: float, stop_when=None):
    """Damped Newton on the barrier merit.

    Returns ``(y, state, steps)`` with state one of ``converged``,
    ``stopped`` (the early-exit callback fired), or ``stalled``.
    """
    steps = 0
    for _ in range(_MAX_CENTER_STEPS):
        value, grad, hess = compiled.merit(y, t)
        if grad is None:
            raise GpError("centering started outside the interior")
        d = _newton_direction(hess, grad)
        if d is None:
            d = -grad / max(1.0, float(np.abs(grad).max()))
        decrement = float(-grad @ d)
        if decrement <= 2 * inner_tol:
            return y, "converged", steps
        dmax = float(np.abs(d).max())
        alpha = min(1.0, _MAX_LOG_STEP / dmax) if dmax > 0 else 1.0
        slope = float(grad @ d)
        while True:
            candidate = compiled.merit_value(y + alpha * d, t)
            if candidate <= value + _ARMIJO * alpha * slope:
                break
            alpha *= _SHRINK
            if alpha < _MIN_STEP:
                return y, "stalled", steps
        y = y + alpha * d
        steps += 1
        if stop_when is not None and stop_when(y):
            return y, "stopped", steps
    return y, "stalled", steps


def _solve_interior(
    compiled: _Compiled,
    y0: np.ndarray,
    tol: float,
    stop_when=None,
) -> tuple[np.ndarray, str, int, float]:
    y = y0
    total_steps = 0
    if stop_when is not None and stop_when(y):
        return y, "optimal", 0, 1.0
    t = 1.0
    status = "optimal"
    while True:
        y, state, steps = _center(compiled, y, t, inner_tol=1e-10, stop_when=stop_when)
        total_steps += steps
        if state == "stopped":
            return y, "optimal", total_steps, t
        if state == "stalled":
            status = "stalled"
            break
        if compiled.m / t < tol:
            break
        t *= _MU
    return y, status, total_steps, t


def solve_gp(
    model: GpModel,
    start: dict[str, float] | None = None,
    tol: float = 1e-8,
    feas_margin: float = 1e-10,
) -> GpSolution:
    """Solve a geometric program.

    ``start``, when given and strictly feasible (every constraint below
    ``1 - feas_margin``), seeds phase two directly; otherwise phase one runs
    first and raises :class:`GpInfeasibleError` when no interior point
    exists.
    """
    compiled = _Compiled(model)
    if _SLACK in compiled.index:
        raise GpError(f"variable name {_SLACK!r} is reserved")
    if compiled.m == 0 and compiled.obj_A.shape[0] == 1 and compiled.obj_A.nnz:
        raise GpError("a monomial objective without constraints is unbounded below")

    y0 = None
    if compiled.m == 0 and start is None:
        y0 = np.zeros(compiled.n)
    if start is not None:
        missing = [v for v in compiled.order if v not in start]
        if missing:
            raise GpError(f"start point misses variables {missing[:5]}")
        arr = np.array([start[v] for v in compiled.order], dtype=float)
        if np.any(arr <= 0):
            raise GpError("start point must be strictly positive")
        y = np.log(arr)
        if np.all(compiled.constraint_values(y) <= math.log1p(-feas_margin)):
            y0 = y

    if y0 is None:
        y0 = _phase_one(model, compiled, start, tol, feas_margin)

    y, status, steps, t_final = _solve_interior(compiled, y0, tol)
    point = {v: float(x) for v, x in zip(compiled.order, np.exp(y))}
    return GpSolution(
        point=point,
        objective=float(np.exp(compiled.objective_value(y))),
        status=status,
        kkt_residual=float(compiled.kkt_residual(y, t_final)),
        iterations=steps,
    )


_SLACK = "__slack__"


def _phase_one(
    model: GpModel,
    compiled: _Compiled,
    start: dict[str, float] | None,
    tol: float,
    feas_margin: float,
) -> np.ndarray:
    """Find a strictly feasible point or raise ``GpInfeasibleError``.

    Minimizes a multiplicative slack ``z`` subject to ``g_i * z**-1 <= 1``;
    the original program has an interior point exactly when the optimum is
    below one.
    """
    relaxed = []
    for con in model.constraints:
        posy = as_posynomial(con)
        relaxed.append(
            Posynomial(
                tuple(
                    Monomial(t.coefficient, {**t.exponents, _SLACK: -1.0})
                    for t in posy.terms
                )
            )
        )
    aux_model = GpModel(
        objective=Monomial(1.0, {_SLACK: 1.0}),
        constraints=tuple(relaxed),
        variables=(*compiled.order, _SLACK),
    )
    aux = _Compiled(aux_model)

    if start is not None:
        base = np.log(np.array([start[v] for v in compiled.order], dtype=float))
    else:
        base = np.zeros(compiled.n)
    worst = float(compiled.constraint_values(base).max())
    y0 = np.append(base, worst + 1.0)

    margin = math.log1p(-feas_margin)

    def interior_found(y: np.ndarray) -> bool:
        return bool(np.all(compiled.constraint_values(y[:-1]) <= 2 * margin))

    y, status, _, _ = _solve_interior(
        aux, y0, tol=min(tol, 1e-8), stop_when=interior_found
    )
    if interior_found(y):
        return y[:-1]
    slack = math.exp(y[-1])
    if status == "stalled":
        raise GpError(f"phase one stalled with slack {slack:.3e}")
    raise GpInfeasibleError(
        f"no interior point: minimal constraint slack is {slack:.6g} (needs < 1)"
    )
