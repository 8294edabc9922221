"""Command line experiment runner: presets, sweeps, CSV emission.

Subcommands
-----------
evaluate          closed-form placements at one scenario point
optimize-smooth   projected-gradient solver at one scenario point
optimize-sca      condensation solver at one scenario point
converse          lower bound at one scenario point
simulate          Monte Carlo delivery measurement at one scenario point
sweep             full sweep: one CSV row per (value, scheme or bound)
random-activity   sweep averaged over random per-user activity

Every subcommand emits the same CSV schema, columns ``sweep_value, scheme,
exact, smoothed, simulated_mean, simulated_stderr, converse, wall_time``,
either to ``--out`` or to stdout, so any output can feed the plotting
package. Cells that do not apply stay empty; the converse bound appears both
as its own ``converse`` row and in the ``converse`` column of every scheme
row of the same sweep point. The ``wall_time`` column is only filled under
``--timing`` because timings would break byte-identical reruns.

Exit codes: 0 success, 2 config error, 3 evaluation budget error.
"""

import argparse
import itertools
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .baselines import BASELINES
from .converse import ActiveSet, converse_average, converse_worst_case
from .loads import (
    DEFAULT_TERM_BUDGET,
    BudgetExceededError,
    SmoothingConfig,
    average_load,
    smoothed_average,
    smoothed_worst_case,
    worst_case_demand,
    worst_case_load,
)
from .model import (
    CachingParameter,
    ScenarioError,
    SystemInstance,
    TierLayout,
    build_arithmetic_scenario,
)
from .presets import PRESET_NAMES, get_preset
from .sca import solve_sca
from .simulator import monte_carlo
from .smooth import ProjectedGradConfig, increment_bound, minimize_smoothed

__all__ = ["SweepSpec", "run_sweep", "run_random_activity", "main", "CSV_COLUMNS"]

CSV_COLUMNS = (
    "sweep_value",
    "scheme",
    "exact",
    "smoothed",
    "simulated_mean",
    "simulated_stderr",
    "converse",
    "wall_time",
)

#: Scheme ids that run an optimizer rather than a closed-form placement.
OPTIMIZER_SCHEMES = ("smooth", "sca")

_SWEEP_VARIABLES = ("N", "T", "dV", "dM", "M0", "gamma", "point")

#: Above this many activity realizations the runner samples instead of
#: enumerating every per-tier active-count combination.
ACTIVITY_ENUMERATION_CAP = 4096
ACTIVITY_SAMPLES = 512

#: ``--large`` raises the evaluation budget along with the problem size.
LARGE_TERM_BUDGET = 200_000_000

_SCENARIO_KEYS = {
    "n_files",
    "first_size",
    "size_step",
    "n_tiers",
    "first_cache",
    "cache_step",
    "gamma",
    "users_per_tier",
    "active_per_tier",
}
_CONFIG_KEYS = {
    "name",
    "title",
    "large",
    "objective",
    "sweep",
    "scenario",
    "schemes",
    "converse",
    "activity",
    "c",
    "starts",
    "max_iter",
    "trials",
    "scale",
    "seed",
    "term_budget",
    "out",
}


class ConfigError(ValueError):
    """A config file, preset choice, or flag combination is unusable."""


@dataclass(frozen=True)
class SweepSpec:
    """Fully resolved description of one runner invocation."""

    name: str
    objective: str
    variable: str
    values: tuple
    scenario: dict
    schemes: tuple
    converse: bool
    c: float = 40.0
    starts: int = 8
    max_iter: int = 200
    trials: int = 0
    scale: int = 1000
    seed: int = 0
    activity: object = None
    out: str = ""
    large: bool = False
    term_budget: int = DEFAULT_TERM_BUDGET
    workers: int = 1
    timing: bool = False

    def __post_init__(self) -> None:
        if self.objective not in ("wst", "avg"):
            raise ConfigError(
                f"objective must be 'wst' or 'avg', got {self.objective!r}"
            )
        if self.variable not in _SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable must be one of {_SWEEP_VARIABLES}, "
                f"got {self.variable!r}"
            )
        if not self.values:
            raise ConfigError("the sweep needs at least one value")
        if not self.schemes and not self.converse:
            raise ConfigError("nothing to run: no schemes and no bound requested")
        known = OPTIMIZER_SCHEMES + tuple(BASELINES)
        for scheme in self.schemes:
            if scheme not in known:
                raise ConfigError(
                    f"unknown scheme {scheme!r}; choose from {', '.join(known)}"
                )
        if self.c < 1:
            raise ConfigError(f"smoothing level must be >= 1, got {self.c}")
        if self.starts < 1 or self.max_iter < 1:
            raise ConfigError("starts and max_iter must be positive")
        if self.trials < 0 or (self.trials == 1):
            raise ConfigError("trials must be 0 (no simulation) or >= 2")
        if self.scale < 1:
            raise ConfigError(f"simulation scale must be >= 1, got {self.scale}")


# ---------------------------------------------------------------------------
# Config loading and resolution.


def _load_config(args) -> dict:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.preset:
        try:
            return get_preset(args.preset, large=args.large)
        except ScenarioError as exc:
            raise ConfigError(str(exc)) from exc
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                cfg = yaml.safe_load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {args.config} is not valid YAML: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("the config file must hold a mapping")
        cfg.setdefault("name", os.path.splitext(os.path.basename(args.config))[0])
        cfg["large"] = bool(args.large)
        return cfg
    raise ConfigError("a scenario is required: pass --config <path> or --preset <name>")


def _check_keys(cfg: dict) -> None:
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    scenario = cfg.get("scenario")
    if not isinstance(scenario, dict):
        raise ConfigError("the config needs a 'scenario' mapping")
    bad = set(scenario) - _SCENARIO_KEYS
    if bad:
        raise ConfigError(f"unknown scenario fields: {', '.join(sorted(bad))}")


def _build_spec(args, default_schemes=None, force_schemes=None) -> SweepSpec:
    """Merge config file or preset with flag overrides into a SweepSpec."""
    cfg = _load_config(args)
    _check_keys(cfg)
    sweep = cfg.get("sweep") or {"variable": "point", "values": [0]}
    if not isinstance(sweep, dict) or "values" not in sweep:
        raise ConfigError("'sweep' must be a mapping with 'variable' and 'values'")
    values = sweep.get("values")
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError("sweep values must be a nonempty list")
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"sweep values must be numbers, got {v!r}")

    schemes = cfg.get("schemes")
    if schemes is None:
        schemes = list(default_schemes if default_schemes is not None else BASELINES)
    if getattr(args, "schemes", None):
        schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if force_schemes is not None:
        schemes = list(force_schemes)
    large = bool(args.large)
    if large and "sca" in schemes:
        schemes = [s for s in schemes if s != "sca"]
        print(
            "note: full-scale runs use the smoothed solver only; "
            "dropping scheme 'sca'",
            file=sys.stderr,
        )

    def pick(flag, key, default):
        flag_value = getattr(args, flag, None)
        if flag_value is not None:
            return flag_value
        return cfg.get(key, default)

    budget = pick("budget", "term_budget", DEFAULT_TERM_BUDGET)
    if large:
        budget = max(int(budget), LARGE_TERM_BUDGET)
    activity = getattr(args, "activity", None)
    if activity is None:
        activity = cfg.get("activity")
    try:
        return SweepSpec(
            name=str(cfg.get("name", "custom")),
            objective=str(cfg.get("objective", "wst")),
            variable=str(sweep.get("variable", "point")),
            values=tuple(values),
            scenario=dict(cfg["scenario"]),
            schemes=tuple(schemes),
            converse=bool(pick("no_converse_flag", "converse", True)),
            c=float(pick("c", "c", 40.0)),
            starts=int(pick("starts", "starts", 8)),
            max_iter=int(pick("max_iter", "max_iter", 200)),
            trials=int(pick("trials", "trials", 0)),
            scale=int(pick("scale", "scale", 1000)),
            seed=int(pick("seed", "seed", 0)),
            activity=activity,
            out=str(args.out or cfg.get("out", "") or ""),
            large=large,
            term_budget=int(budget),
            workers=max(1, int(getattr(args, "workers", None) or 1)),
            timing=bool(getattr(args, "timing", False)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc


def _resolve_field(field_spec, value, key):
    """A scenario field is a scalar or a {base, per_sweep} linear coupling."""
    if isinstance(field_spec, dict):
        extra = set(field_spec) - {"base", "per_sweep"}
        if extra:
            raise ConfigError(
                f"scenario field {key!r} accepts only 'base' and 'per_sweep', "
                f"got {', '.join(sorted(extra))}"
            )
        base = float(field_spec.get("base", 0.0))
        slope = float(field_spec.get("per_sweep", 0.0))
        return base + slope * float(value)
    if isinstance(field_spec, bool) or not isinstance(field_spec, (int, float)):
        raise ConfigError(f"scenario field {key!r} must be a number, got {field_spec!r}")
    return float(field_spec)


def _as_count(x: float, key: str) -> int:
    rounded = round(x)
    if abs(x - rounded) > 1e-9 or rounded < 1:
        raise ScenarioError(f"{key} must resolve to a positive integer, got {x}")
    return int(rounded)


def build_point(scenario: dict, value) -> tuple[SystemInstance, TierLayout]:
    """Instance and active-user layout for one sweep value."""

    def get(key, default=None):
        spec = scenario.get(key, default)
        if spec is None:
            raise ConfigError(f"scenario field {key!r} is required")
        return _resolve_field(spec, value, key)

    n_files = _as_count(get("n_files"), "n_files")
    n_tiers = _as_count(get("n_tiers", 1), "n_tiers")
    users = scenario.get("users_per_tier", 1)
    if isinstance(users, (list, tuple)):
        counts = tuple(int(u) for u in users)
    else:
        counts = (int(users),) * n_tiers
    instance = build_arithmetic_scenario(
        n_files=n_files,
        first_size=get("first_size"),
        size_step=get("size_step", 0.0),
        n_tiers=n_tiers,
        first_cache=get("first_cache"),
        cache_step=get("cache_step", 0.0),
        tier_user_counts=counts,
        gamma=get("gamma", 0.0),
    )
    active = scenario.get("active_per_tier")
    if active is None:
        layout = instance.full_layout()
    else:
        if not isinstance(active, (list, tuple)):
            active = (int(active),) * instance.n_tiers
        if len(active) != instance.n_tiers:
            raise ScenarioError(
                f"{len(active)} active counts for {instance.n_tiers} tiers"
            )
        layout = TierLayout(tuple(int(a) for a in active))
        for a, l in zip(layout.counts, instance.tier_user_counts):
            if a > l:
                raise ScenarioError(
                    f"more active users than subscribers in a tier: {a} > {l}"
                )
    return instance, layout


# ---------------------------------------------------------------------------
# Per-point evaluation.


@dataclass
class Row:
    """One CSV row; None cells are emitted empty."""

    sweep_value: object
    scheme: str
    exact: float | None = None
    smoothed: float | None = None
    simulated_mean: float | None = None
    simulated_stderr: float | None = None
    converse: float | None = None
    wall_time: float | None = None

    def cells(self) -> list:
        return [
            _fmt(self.sweep_value),
            self.scheme,
            _fmt(self.exact),
            _fmt(self.smoothed),
            _fmt(self.simulated_mean),
            _fmt(self.simulated_stderr),
            _fmt(self.converse),
            _fmt(self.wall_time),
        ]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _exact_fn(objective):
    return worst_case_load if objective == "wst" else average_load


def _smoothed_fn(objective):
    return smoothed_worst_case if objective == "wst" else smoothed_average


def scheme_parameter(
    scheme: str, instance, layout, spec: SweepSpec
) -> tuple[CachingParameter, str]:
    """Caching parameter of one scheme, plus a short provenance note."""
    if scheme in BASELINES:
        return BASELINES[scheme](instance), ""
    if scheme == "smooth":
        config = ProjectedGradConfig(
            c=spec.c, starts=spec.starts, max_iter=spec.max_iter, seed=spec.seed
        )
        q, trace = minimize_smoothed(
            instance, layout, config, which=spec.objective, term_budget=spec.term_budget
        )
        return q, f"best start {trace.best_start}"
    if scheme == "sca":
        q, report = solve_sca(
            instance, layout, which=spec.objective, term_budget=spec.term_budget
        )
        note = f"status {report.status}, {report.iterations} iterations"
        if report.status == "solver-failure":
            note += f" ({report.detail})"
        return q, note
    raise ConfigError(f"unknown scheme {scheme!r}")


def _converse_value(instance, counts, objective) -> float:
    if sum(counts) == 0:
        return 0.0
    active = ActiveSet(instance, tuple(counts))
    if objective == "wst":
        return converse_worst_case(instance, active).value
    return converse_average(instance, active).value


def _simulate(instance, layout, q, spec: SweepSpec, seed_key) -> tuple[float, float]:
    if spec.objective == "wst":
        _, demand = worst_case_demand(
            instance, layout, q, term_budget=spec.term_budget
        )
        return monte_carlo(
            instance, layout, q, spec.scale, spec.trials, seed_key,
            mode="fixed", demand=demand,
        )
    return monte_carlo(
        instance, layout, q, spec.scale, spec.trials, seed_key, mode="popularity"
    )


def _point_rows(spec: SweepSpec, index: int) -> tuple[list, list]:
    """All rows of one sweep point; returns (rows, stderr notes)."""
    value = spec.values[index]
    notes = []
    try:
        instance, layout = build_point(spec.scenario, value)
    except ScenarioError as exc:
        notes.append(f"sweep value {value}: infeasible point ({exc})")
        return [Row(value, "infeasible")], notes

    exact_fn = _exact_fn(spec.objective)
    smoothed_fn = _smoothed_fn(spec.objective)
    smoothing = SmoothingConfig(spec.c)
    conv = None
    if spec.converse:
        conv = _converse_value(instance, layout.counts, spec.objective)

    rows = []
    for si, scheme in enumerate(spec.schemes):
        started = time.perf_counter()
        q, note = scheme_parameter(scheme, instance, layout, spec)
        if note:
            notes.append(f"sweep value {value}: {scheme}: {note}")
        exact = exact_fn(instance, layout, q, term_budget=spec.term_budget)
        smoothed = smoothed_fn(
            instance, layout, q, smoothing, term_budget=spec.term_budget
        )
        sim_mean = sim_err = None
        if spec.trials >= 2:
            sim_mean, sim_err = _simulate(
                instance, layout, q, spec, (spec.seed, index, si)
            )
        elapsed = time.perf_counter() - started
        rows.append(
            Row(
                value,
                scheme,
                exact=exact,
                smoothed=smoothed,
                simulated_mean=sim_mean,
                simulated_stderr=sim_err,
                converse=conv,
                wall_time=elapsed if spec.timing else None,
            )
        )
    if spec.converse:
        rows.append(Row(value, "converse", converse=conv))
    return rows, notes


def _activity_probs(spec: SweepSpec, n_tiers: int) -> np.ndarray:
    if spec.activity is None:
        raise ConfigError(
            "random-activity needs an activity probability; set 'activity' in "
            "the config or pass --activity"
        )
    probs = np.broadcast_to(
        np.asarray(spec.activity, dtype=float), (n_tiers,)
    ).copy()
    if np.any(probs < 0) or np.any(probs > 1):
        raise ConfigError(f"activity probabilities must lie in [0, 1], got {probs}")
    return probs


def _activity_realizations(spec, probs, subscribers, index):
    """Weighted per-tier active-count vectors under independent activity.

    The load depends on the active users only through their per-tier counts,
    so enumerating counts with binomial weights equals enumerating all
    2**L on/off patterns. Past the enumeration cap, realizations are sampled.
    """
    space = 1
    for l in subscribers:
        space *= l + 1
    if space <= ACTIVITY_ENUMERATION_CAP:
        combos = []
        for counts in itertools.product(*(range(l + 1) for l in subscribers)):
            weight = 1.0
            for n, l, p in zip(counts, subscribers, probs):
                weight *= math.comb(l, n) * p**n * (1.0 - p) ** (l - n)
            combos.append((counts, weight))
        return combos
    rng = np.random.default_rng((spec.seed, 104729, index))
    draws = {}
    for _ in range(ACTIVITY_SAMPLES):
        counts = tuple(
            int(rng.binomial(l, p)) for l, p in zip(subscribers, probs)
        )
        draws[counts] = draws.get(counts, 0) + 1
    return [(c, n / ACTIVITY_SAMPLES) for c, n in sorted(draws.items())]


def _activity_point_rows(spec: SweepSpec, index: int) -> tuple[list, list]:
    """Rows of one sweep point averaged over random user activity."""
    value = spec.values[index]
    notes = []
    try:
        instance, design_layout = build_point(spec.scenario, value)
    except ScenarioError as exc:
        notes.append(f"sweep value {value}: infeasible point ({exc})")
        return [Row(value, "infeasible")], notes

    probs = _activity_probs(spec, instance.n_tiers)
    realizations = _activity_realizations(
        spec, probs, instance.tier_user_counts, index
    )
    exact_fn = _exact_fn(spec.objective)
    smoothed_fn = _smoothed_fn(spec.objective)
    smoothing = SmoothingConfig(spec.c)

    conv = None
    if spec.converse:
        conv = sum(
            w * _converse_value(instance, counts, spec.objective)
            for counts, w in realizations
        )

    rows = []
    for si, scheme in enumerate(spec.schemes):
        started = time.perf_counter()
        q, note = scheme_parameter(scheme, instance, design_layout, spec)
        if note:
            notes.append(f"sweep value {value}: {scheme}: {note}")
        exact = smoothed = 0.0
        sim_mean = sim_err = None
        if spec.trials >= 2:
            sim_mean, sim_var = 0.0, 0.0
        for ri, (counts, weight) in enumerate(realizations):
            if sum(counts) == 0 or weight == 0.0:
                continue
            layout = TierLayout(counts)
            exact += weight * exact_fn(
                instance, layout, q, term_budget=spec.term_budget
            )
            smoothed += weight * smoothed_fn(
                instance, layout, q, smoothing, term_budget=spec.term_budget
            )
            if spec.trials >= 2:
                mean_r, err_r = _simulate(
                    instance, layout, q, spec, (spec.seed, index, si, ri)
                )
                sim_mean += weight * mean_r
                sim_var += (weight * err_r) ** 2
        if spec.trials >= 2:
            sim_err = math.sqrt(sim_var)
        elapsed = time.perf_counter() - started
        rows.append(
            Row(
                value,
                scheme,
                exact=exact,
                smoothed=smoothed,
                simulated_mean=sim_mean,
                simulated_stderr=sim_err,
                converse=conv,
                wall_time=elapsed if spec.timing else None,
            )
        )
    if spec.converse:
        rows.append(Row(value, "converse", converse=conv))
    return rows, notes


# ---------------------------------------------------------------------------
# Runners.


def _worker(task):
    spec, index, activity = task
    fn = _activity_point_rows if activity else _point_rows
    return fn(spec, index)


def _run_points(spec: SweepSpec, activity: bool) -> list:
    tasks = [(spec, i, activity) for i in range(len(spec.values))]
    if spec.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_worker, tasks))
    else:
        results = [_worker(t) for t in tasks]
    rows = []
    for point_rows, notes in results:
        for line in notes:
            print(line, file=sys.stderr)
        rows.extend(point_rows)
    rows.sort(key=lambda r: (float(r.sweep_value), r.scheme))
    return rows


def _write_csv(rows: list, out: str) -> None:
    text = ",".join(CSV_COLUMNS) + "\n"
    for row in rows:
        text += ",".join(row.cells()) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def run_sweep(spec: SweepSpec) -> list:
    """Evaluate every scheme and bound over the sweep; returns the rows."""
    rows = _run_points(spec, activity=False)
    _write_csv(rows, spec.out)
    return rows


def run_random_activity(spec: SweepSpec) -> list:
    """Sweep whose loads are averaged over random per-user activity."""
    rows = _run_points(spec, activity=True)
    _write_csv(rows, spec.out)
    return rows


# ---------------------------------------------------------------------------
# Entry point.


def _add_common_flags(sub):
    sub.add_argument("--config", help="YAML scenario file")
    sub.add_argument("--preset", help=f"named preset: {', '.join(PRESET_NAMES)}")
    sub.add_argument("--seed", type=int, default=None, help="base random seed")
    sub.add_argument("--c", type=float, default=None, help="smoothing level")
    sub.add_argument("--starts", type=int, default=None, help="gradient restarts")
    sub.add_argument("--trials", type=int, default=None, help="simulation trials")
    sub.add_argument("--scale", type=int, default=None, help="units per size unit")
    sub.add_argument("--out", default=None, help="CSV output path (default stdout)")
    sub.add_argument(
        "--large", action="store_true", help="full-scale preset, smoothed solver only"
    )
    sub.add_argument("--schemes", default=None, help="comma-separated scheme ids")
    sub.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    sub.add_argument("--budget", type=int, default=None, help="term evaluation cap")
    sub.add_argument(
        "--workers", type=int, default=None, help="parallel sweep points (default 1)"
    )
    sub.add_argument(
        "--timing", action="store_true", help="fill wall_time (breaks byte reruns)"
    )
    sub.add_argument(
        "--no-converse",
        dest="no_converse_flag",
        action="store_false",
        default=None,
        help="skip the lower bound",
    )


def _single_point(spec: SweepSpec) -> SweepSpec:
    """Non-sweep subcommands run the first sweep value only."""
    return replace(spec, values=spec.values[:1])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="codedcache",
        description="Coded caching load evaluation, optimization, and sweeps.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("evaluate", "closed-form placements at one scenario point"),
        ("optimize-smooth", "projected-gradient solver at one scenario point"),
        ("optimize-sca", "condensation solver at one scenario point"),
        ("converse", "lower bound at one scenario point"),
        ("simulate", "Monte Carlo delivery measurement at one scenario point"),
        ("sweep", "full sweep over the configured variable"),
        ("random-activity", "sweep averaged over random per-user activity"),
    ):
        sub = commands.add_parser(name, help=text)
        _add_common_flags(sub)
        if name == "random-activity":
            sub.add_argument(
                "--activity", type=float, default=None, help="per-user activity"
            )

    args = parser.parse_args(argv)
    try:
        rows = _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"budget error: {exc} (raise --budget to proceed)", file=sys.stderr)
        return 3
    return 0


def _dispatch(args) -> list:
    command = args.command
    if command == "sweep":
        return run_sweep(_build_spec(args, default_schemes=None))
    if command == "random-activity":
        spec = _build_spec(args, default_schemes=None)
        return run_random_activity(spec)
    if command == "evaluate":
        spec = _single_point(_build_spec(args, default_schemes=tuple(BASELINES)))
        if not args.schemes:
            kept = tuple(s for s in spec.schemes if s not in OPTIMIZER_SCHEMES)
            spec = replace(spec, schemes=kept)
        rows = _run_points(spec, activity=False)
        _write_csv(rows, spec.out)
        return rows
    if command == "optimize-smooth":
        spec = _single_point(_build_spec(args, force_schemes=("smooth",)))
        rows = _run_points(spec, activity=False)
        _report_gap(spec, rows)
        _write_csv(rows, spec.out)
        return rows
    if command == "optimize-sca":
        if args.large:
            raise ConfigError("full-scale runs use the smoothed solver only")
        spec = _single_point(_build_spec(args, force_schemes=("sca",)))
        rows = _run_points(spec, activity=False)
        _write_csv(rows, spec.out)
        return rows
    if command == "converse":
        spec = _single_point(_build_spec(args, force_schemes=()))
        spec = replace(spec, converse=True)
        rows = _run_points(spec, activity=False)
        _write_csv(rows, spec.out)
        return rows
    if command == "simulate":
        spec = _single_point(_build_spec(args, default_schemes=tuple(BASELINES)))
        if spec.trials < 2:
            spec = replace(spec, trials=200)
        rows = _run_points(spec, activity=False)
        _write_csv(rows, spec.out)
        return rows
    raise ConfigError(f"unknown command {command!r}")


def _report_gap(spec: SweepSpec, rows: list) -> None:
    """Print the smoothing gap guarantee next to the found objective."""
    for row in rows:
        if row.scheme != "smooth" or row.exact is None:
            continue
        try:
            instance, layout = build_point(spec.scenario, row.sweep_value)
        except (ScenarioError, ConfigError):
            continue
        effective = SmoothingConfig(spec.c).effective_c(instance)
        bound = increment_bound(
            layout.total, instance.n_files, effective, spec.objective
        )
        print(
            f"smooth: exact {row.exact:.6g}, smoothed {row.smoothed:.6g}, "
            f"guaranteed gap to the best smoothed point <= {bound:.6g}",
            file=sys.stderr,
        )


if __name__ == "__main__":
    sys.exit(main())
