"""Regret lower bounds for combinatorial semi-bandits with smooth rewards.

Gini-weighted smoothness measures, hard I-disjoint instance construction,
problem-dependent and problem-independent bounds, and a small simulator for
comparing baseline strategies against them.
"""
from .bounds import BoundReport, dependent_bound, exp_quadratic_scan, independent_bound, sum_copies_bound
from .instance import (
    ConstructionError,
    DisjointInstance,
    GapUnreachable,
    HorizonTooShort,
    build_dependent_instance,
    build_independent_instance,
)
from .rewards import MODEL_NAMES, make_model
from .sim import compare_to_bound, run_episode, run_episodes
from .smoothness import SubsetSpec, gini_l1, gini_l2, gini_modified, maximize_over_subsets
from .verify import verify

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ConstructionError",
    "DisjointInstance",
    "GapUnreachable",
    "HorizonTooShort",
    "MODEL_NAMES",
    "SubsetSpec",
    "build_dependent_instance",
    "build_independent_instance",
    "compare_to_bound",
    "dependent_bound",
    "exp_quadratic_scan",
    "gini_l1",
    "gini_l2",
    "gini_modified",
    "independent_bound",
    "make_model",
    "maximize_over_subsets",
    "run_episode",
    "run_episodes",
    "sum_copies_bound",
    "verify",
]
