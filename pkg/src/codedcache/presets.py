"""Named experiment presets for the command line runner.

Each preset is a plain dict using the same schema as a YAML config file, so
a preset can be copied into a file and edited. Scenario fields are scalars,
or ``{"base": b, "per_sweep": a}`` couplings resolved per sweep point as
``b + a * value``. Two scales exist for most presets:

* desk scale (default): N <= 6 files and at most 4 active users, so every
  scheme, bound, and simulation finishes in seconds;
* full scale (``--large``): the original sweep sizes, restricted to the
  low-complexity smoothed solver because the condensation solver does not
  scale past a handful of active users.

Preset names follow the figure numbering of the experiment suite they
reproduce (fig2a .. fig8b). Desk variants keep each sweep's arithmetic
structure: couplings between swept and fixed quantities are rescaled, never
dropped.

Two sweeps (fig4b, fig8b) tie the first cache size to the cache step through
the fixed rule ``318.75 - 1.5 * dM``. With four tiers this keeps the mean
cache size constant at one quarter of the total file volume (1275) while the
spread between tiers grows; the rule is kept verbatim from the experiment
definition, not derived here. The desk variants use ``5.25 - 1.5 * dM``,
which is the same rule for a total volume of 21.
"""

import copy

from .model import ScenarioError

__all__ = ["PRESET_NAMES", "get_preset"]

_DEFAULT_SCHEMES = ["smooth", "uniform-alidec", "tier-uniform", "file-uniform"]

# Four single-user tiers: the most common layout across the sweeps.
_FOUR_SINGLE_TIERS = {"n_tiers": 4, "users_per_tier": 1}


def _coupled(base, per_sweep):
    return {"base": float(base), "per_sweep": float(per_sweep)}


_DESK = {
    # Worst-case load versus the number of files.
    "fig2a": {
        "title": "worst-case load versus number of files",
        "objective": "wst",
        "sweep": {"variable": "N", "values": [3, 4, 5, 6]},
        "scenario": {
            "n_files": _coupled(0, 1),
            "first_size": 10.0,
            "size_step": -1.0,
            "first_cache": 5.5,
            "cache_step": 5.5,
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Worst-case load versus the number of tiers (one user per tier).
    "fig2b": {
        "title": "worst-case load versus number of tiers",
        "objective": "wst",
        "sweep": {"variable": "T", "values": [1, 2, 3, 4]},
        "scenario": {
            "n_files": 4,
            "first_size": 13.0,
            "size_step": -4.0,
            "n_tiers": _coupled(0, 1),
            "users_per_tier": 1,
            "first_cache": 5.0,
            "cache_step": 1.0,
        },
    },
    # Worst-case load versus a cache scale knob M0: caches are (1*M0, ...,
    # 1*M0 + 3*2*M0), preserving the 1:2 ratio of first cache to step.
    "fig3a": {
        "title": "worst-case load versus cache scale",
        "objective": "wst",
        "sweep": {"variable": "M0", "values": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]},
        "scenario": {
            "n_files": 6,
            "first_size": 1.0,
            "size_step": 1.0,
            "first_cache": _coupled(0, 1),
            "cache_step": _coupled(0, 2),
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Worst-case load versus cache scale with two subscriber tiers of which
    # only about half are active; meant for the random-activity runner with
    # per-user activity 0.5.
    "fig3b": {
        "title": "worst-case load versus cache scale, random activity",
        "objective": "wst",
        "activity": 0.5,
        "sweep": {"variable": "M0", "values": [0.25, 0.5, 1.0, 1.5, 2.0]},
        "scenario": {
            "n_files": 6,
            "first_size": 10.0,
            "size_step": -1.0,
            "n_tiers": 2,
            "users_per_tier": [4, 2],
            "active_per_tier": [2, 1],
            "first_cache": _coupled(0, 5),
            "cache_step": _coupled(0, 15),
        },
    },
    # Worst-case load versus the file size step; the first size moves with
    # the step so the total volume stays constant (21 here).
    "fig4a": {
        "title": "worst-case load versus file size step",
        "objective": "wst",
        "sweep": {"variable": "dV", "values": [-1.0, -0.5, 0.0, 0.5, 1.0]},
        "scenario": {
            "n_files": 6,
            "first_size": _coupled(3.5, -2.5),
            "size_step": _coupled(0, 1),
            "first_cache": 2.5,
            "cache_step": 2.0,
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Worst-case load versus the cache size step; the first cache follows
    # the fixed rule 5.25 - 1.5*dM (mean cache = total volume / 4).
    "fig4b": {
        "title": "worst-case load versus cache size step",
        "objective": "wst",
        "sweep": {"variable": "dM", "values": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]},
        "scenario": {
            "n_files": 6,
            "first_size": 1.0,
            "size_step": 1.0,
            "first_cache": _coupled(5.25, -1.5),
            "cache_step": _coupled(0, 1),
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Average load versus the number of files under a Zipf popularity.
    "fig5a": {
        "title": "average load versus number of files",
        "objective": "avg",
        "sweep": {"variable": "N", "values": [2, 3, 4, 5, 6]},
        "scenario": {
            "n_files": _coupled(0, 1),
            "first_size": 20.0,
            "size_step": -1.0,
            "first_cache": 5.5,
            "cache_step": 5.5,
            "gamma": 1.2,
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Average load versus the number of tiers.
    "fig5b": {
        "title": "average load versus number of tiers",
        "objective": "avg",
        "sweep": {"variable": "T", "values": [1, 2, 3, 4]},
        "scenario": {
            "n_files": 4,
            "first_size": 23.0,
            "size_step": -4.0,
            "n_tiers": _coupled(0, 1),
            "users_per_tier": 1,
            "first_cache": 5.0,
            "cache_step": 1.0,
            "gamma": 1.2,
        },
    },
    # Average load versus the Zipf exponent.
    "fig6": {
        "title": "average load versus popularity skew",
        "objective": "avg",
        "sweep": {"variable": "gamma", "values": [0.0, 0.4, 0.8, 1.2, 1.6, 2.0]},
        "scenario": {
            "n_files": 6,
            "first_size": 6.0,
            "size_step": -1.0,
            "first_cache": 7.5,
            "cache_step": 1.5,
            "gamma": _coupled(0, 1),
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Average load versus a cache scale knob (5:1 first-cache-to-step ratio).
    "fig7a": {
        "title": "average load versus cache scale",
        "objective": "avg",
        "sweep": {"variable": "M0", "values": [0.25, 0.5, 1.0, 1.5, 2.0, 2.5]},
        "scenario": {
            "n_files": 6,
            "first_size": 6.0,
            "size_step": -1.0,
            "first_cache": _coupled(0, 5),
            "cache_step": _coupled(0, 1),
            "gamma": 1.0,
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Average load versus cache scale with random user activity 0.5.
    "fig7b": {
        "title": "average load versus cache scale, random activity",
        "objective": "avg",
        "activity": 0.5,
        "sweep": {"variable": "M0", "values": [0.25, 0.5, 1.0, 1.5, 2.0]},
        "scenario": {
            "n_files": 6,
            "first_size": 10.0,
            "size_step": -1.0,
            "n_tiers": 2,
            "users_per_tier": [4, 2],
            "active_per_tier": [2, 1],
            "first_cache": _coupled(0, 5),
            "cache_step": _coupled(0, 15),
            "gamma": 1.5,
        },
    },
    # Average load versus the file size step at constant total volume.
    "fig8a": {
        "title": "average load versus file size step",
        "objective": "avg",
        "sweep": {"variable": "dV", "values": [-1.0, -0.5, 0.0, 0.5, 1.0]},
        "scenario": {
            "n_files": 6,
            "first_size": _coupled(3.5, -2.5),
            "size_step": _coupled(0, 1),
            "first_cache": 2.5,
            "cache_step": 2.0,
            "gamma": 1.2,
            **_FOUR_SINGLE_TIERS,
        },
    },
    # Average load versus the cache size step, first cache 5.25 - 1.5*dM.
    "fig8b": {
        "title": "average load versus cache size step",
        "objective": "avg",
        "sweep": {"variable": "dM", "values": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]},
        "scenario": {
            "n_files": 6,
            "first_size": 6.0,
            "size_step": -1.0,
            "first_cache": _coupled(5.25, -1.5),
            "cache_step": _coupled(0, 1),
            "gamma": 1.2,
            **_FOUR_SINGLE_TIERS,
        },
    },
}

# Full-scale scenario overrides. Entries replace the desk "sweep" and
# "scenario" blocks wholesale; presets without an entry (fig2b, fig5b) are
# small in their original form already, so the desk values are the full
# values. Runner knobs (starts, max_iter) are trimmed because one gradient
# evaluation costs seconds at N = 50.
_LARGE = {
    "fig2a": {
        "sweep": {"variable": "N", "values": [3, 4, 5, 6, 7, 8, 9, 10]},
        "scenario": {
            "n_files": _coupled(0, 1),
            "first_size": 10.0,
            "size_step": -1.0,
            "first_cache": 5.5,
            "cache_step": 5.5,
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig3a": {
        "sweep": {"variable": "M0", "values": [0.25, 0.75, 1.25, 1.75, 2.25]},
        "scenario": {
            "n_files": 50,
            "first_size": 1.0,
            "size_step": 1.0,
            "first_cache": _coupled(0, 80),
            "cache_step": _coupled(0, 160),
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig3b": {
        "sweep": {"variable": "M0", "values": [0.25, 0.5, 1.0, 1.5, 2.0, 2.5]},
        "scenario": {
            "n_files": 10,
            "first_size": 10.0,
            "size_step": -1.0,
            "n_tiers": 2,
            "users_per_tier": [4, 2],
            "active_per_tier": [2, 1],
            "first_cache": _coupled(0, 5),
            "cache_step": _coupled(0, 15),
        },
    },
    "fig4a": {
        "sweep": {"variable": "dV", "values": [-1.0, -0.5, 0.0, 0.5, 1.0]},
        "scenario": {
            "n_files": 50,
            "first_size": _coupled(25.5, -24.5),
            "size_step": _coupled(0, 1),
            "first_cache": 140.0,
            "cache_step": 120.0,
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig4b": {
        "sweep": {"variable": "dM", "values": [0.0, 40.0, 80.0, 120.0, 160.0, 200.0]},
        "scenario": {
            "n_files": 50,
            "first_size": 1.0,
            "size_step": 1.0,
            "first_cache": _coupled(318.75, -1.5),
            "cache_step": _coupled(0, 1),
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig5a": {
        "sweep": {"variable": "N", "values": [2, 5, 10, 15, 20]},
        "scenario": {
            "n_files": _coupled(0, 1),
            "first_size": 20.0,
            "size_step": -1.0,
            "first_cache": 5.5,
            "cache_step": 5.5,
            "gamma": 1.2,
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig6": {
        "sweep": {"variable": "gamma", "values": [0.0, 0.4, 0.8, 1.2, 1.6, 2.0]},
        "scenario": {
            "n_files": 50,
            "first_size": 50.0,
            "size_step": -1.0,
            "first_cache": 450.0,
            "cache_step": 90.0,
            "gamma": _coupled(0, 1),
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig7a": {
        "sweep": {"variable": "M0", "values": [2.5, 5.0, 7.5, 10.0, 12.5, 15.0]},
        "scenario": {
            "n_files": 50,
            "first_size": 50.0,
            "size_step": -1.0,
            "first_cache": _coupled(0, 50),
            "cache_step": _coupled(0, 10),
            "gamma": 1.0,
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig7b": {
        "sweep": {"variable": "M0", "values": [0.25, 0.5, 1.0, 1.5, 2.0, 2.5]},
        "scenario": {
            "n_files": 10,
            "first_size": 10.0,
            "size_step": -1.0,
            "n_tiers": 2,
            "users_per_tier": [4, 2],
            "active_per_tier": [2, 1],
            "first_cache": _coupled(0, 5),
            "cache_step": _coupled(0, 15),
            "gamma": 1.5,
        },
    },
    "fig8a": {
        "sweep": {"variable": "dV", "values": [-1.0, -0.5, 0.0, 0.5, 1.0]},
        "scenario": {
            "n_files": 50,
            "first_size": _coupled(25.5, -24.5),
            "size_step": _coupled(0, 1),
            "first_cache": 140.0,
            "cache_step": 120.0,
            "gamma": 1.2,
            **_FOUR_SINGLE_TIERS,
        },
    },
    "fig8b": {
        "sweep": {"variable": "dM", "values": [0.0, 40.0, 80.0, 120.0, 160.0, 200.0]},
        "scenario": {
            "n_files": 50,
            "first_size": 50.0,
            "size_step": -1.0,
            "first_cache": _coupled(318.75, -1.5),
            "cache_step": _coupled(0, 1),
            "gamma": 1.2,
            **_FOUR_SINGLE_TIERS,
        },
    },
}

# Gradient evaluations at N = 50 cost seconds; fewer restarts and a lower
# iteration cap keep a full-scale sweep under an hour.
_LARGE_RUNNER = {"starts": 2, "max_iter": 80}

PRESET_NAMES = tuple(sorted(_DESK))


def get_preset(name: str, large: bool = False) -> dict:
    """Deep copy of a preset config dict, at desk or full scale."""
    if name not in _DESK:
        known = ", ".join(PRESET_NAMES)
        raise ScenarioError(f"unknown preset {name!r}; choose one of {known}")
    cfg = copy.deepcopy(_DESK[name])
    cfg.setdefault("schemes", list(_DEFAULT_SCHEMES))
    cfg.setdefault("converse", True)
    if large:
        cfg.update(copy.deepcopy(_LARGE.get(name, {})))
        for key, value in _LARGE_RUNNER.items():
            cfg.setdefault(key, value)
    cfg["name"] = name
    cfg["large"] = bool(large)
    return cfg
