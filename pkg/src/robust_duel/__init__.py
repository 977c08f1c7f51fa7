"""Corruption-robust contextual dueling bandits: policies, adversaries and a benchmark harness."""

from .adversary import Adversary
from .environment import ActionSetSpec, EnvModel, build_env
from .estimator import WeightedPreferenceMLE, compute_weight, solve_weighted_mle
from .harness import (AggregateResult, AttackConfig, PolicyConfig, RunConfig, RunResult,
                      aggregate, compare, run_episode, sweep_budget)
from .link import LinkSpec
from .policy import RCDB, RCDBS, CoLSTIM, MaxInP, MaxPairUCB, make_policy

__all__ = [
    "ActionSetSpec", "Adversary", "AggregateResult", "AttackConfig", "CoLSTIM", "EnvModel",
    "LinkSpec", "MaxInP", "MaxPairUCB", "PolicyConfig", "RCDB", "RCDBS", "RunConfig",
    "RunResult", "WeightedPreferenceMLE", "aggregate", "build_env", "compare",
    "compute_weight", "make_policy", "run_episode", "solve_weighted_mle", "sweep_budget",
]

__version__ = "0.1.0"
