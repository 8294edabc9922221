"""Decentralized coded caching with arbitrary file and cache sizes.

Exact and smoothed load evaluation, geometric-program based successive convex
approximation, low-complexity smoothed optimization, information-theoretic
lower bounds, and a Monte Carlo delivery simulator.
"""

from .model import (
    CachingParameter,
    FeasibilityReport,
    ScenarioError,
    SystemInstance,
    TierLayout,
    build_arithmetic_scenario,
    check_feasible,
    expected_active_layout,
    zipf_popularity,
)

__version__ = "0.1.0"

__all__ = [
    "CachingParameter",
    "FeasibilityReport",
    "ScenarioError",
    "SystemInstance",
    "TierLayout",
    "build_arithmetic_scenario",
    "check_feasible",
    "expected_active_layout",
    "zipf_popularity",
    "__version__",
]
