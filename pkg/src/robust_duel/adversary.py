"""Budgeted label-flipping adversaries.

All adversaries are strong: they see the selected pair and the realized label
before deciding whether to flip. The budget counts actual flips only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import EnvModel
from .exceptions import BudgetViolation, ConfigError

ATTACK_KINDS = ("none", "greedy", "random", "adversarial", "misleading")


@dataclass
class Adversary:
    kind: str = "none"
    budget: int = 0
    p: float = 0.5
    target: int | None = None
    used: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        if int(self.budget) != self.budget or self.budget < 0:
            raise ConfigError("attack budget must be a nonnegative integer")
        self.budget = int(self.budget)
        if self.kind == "random" and not 0 < self.p < 1:
            raise ConfigError("random attack needs 0 < p < 1")

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def bind(self, env: EnvModel) -> "Adversary":
        """Resolve the misleading target against ``env`` (default: second-best arm)."""
        if self.kind == "misleading":
            if self.target is None:
                self.target = env.second_best()
            elif not 0 <= self.target < env.n_actions:
                raise ConfigError(f"attack target {self.target} out of range")
            elif env.rewards[self.target] >= env.rewards[env.best]:
                raise ConfigError(f"attack target {self.target} is an optimal action")
        return self

    def _wants_flip(self, round_, a, b, true_label, env, rng) -> bool:
        if self.kind == "greedy":
            return round_ <= self.budget
        if self.kind == "random":
            return bool(rng.random() < self.p)
        if self.kind == "adversarial":
            prob = env.preference_prob(a, b)
            if prob == 0.5:
                return False
            return true_label == int(prob > 0.5)
        if self.kind == "misleading":
            if a == b:
                return False
            if self.target == a:
                return true_label == 0
            if self.target == b:
                return true_label == 1
        return False

    def corrupt(self, round_: int, a: int, b: int, true_label: int, env: EnvModel,
                rng: np.random.Generator) -> tuple[int, int]:
        """Return ``(observed_label, flipped)`` for a 1-based round."""
        if self.used > self.budget:
            raise BudgetViolation(f"used {self.used} > budget {self.budget}")
        if self.kind == "none" or self.used == self.budget:
            return true_label, 0
        if not self._wants_flip(round_, a, b, true_label, env, rng):
            return true_label, 0
        self.used += 1
        if self.used > self.budget:
            raise BudgetViolation(f"flip would exceed budget {self.budget}")
        return 1 - true_label, 1


def corrupt(state: Adversary, round_: int, a: int, b: int, true_label: int,
            env: EnvModel, rng: np.random.Generator) -> tuple[int, int]:
    return state.corrupt(round_, a, b, true_label, env, rng)
