"""Static-context linear preference environment.

Features are the actions themselves (``phi(x, a) = a``), the reward of action
``a`` is ``<theta_star, a>`` and ``P(a beats b) = link(r(a) - r(b))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigError, InvalidTheta, DomainExceedsLinearRegion
from .link import LinkSpec

ACTION_KINDS = ("hypercube", "basis", "explicit")
MAX_HYPERCUBE_DIM = 20
_NORM_SLACK = 1e-12


@dataclass(frozen=True)
class ActionSetSpec:
    kind: str = "hypercube"
    actions: tuple | None = None

    def build(self, d: int) -> np.ndarray:
        if self.kind == "hypercube":
            if d > MAX_HYPERCUBE_DIM:
                raise ConfigError(f"hypercube action set limited to d <= {MAX_HYPERCUBE_DIM}")
            corners = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
            return corners / math.sqrt(d)
        if self.kind == "basis":
            return np.eye(d)
        if self.kind == "explicit":
            if self.actions is None:
                raise ConfigError("explicit action set needs 'actions'")
            acts = check_array(np.asarray(self.actions, dtype=float), ensure_min_samples=2)
            if acts.shape[1] != d:
                raise ConfigError(f"explicit actions have dimension {acts.shape[1]}, expected {d}")
            return acts
        raise ConfigError(f"unknown action set kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class EnvModel:
    theta_star: np.ndarray
    actions: np.ndarray
    link: LinkSpec
    B: float
    rewards: np.ndarray = field(init=False, repr=False)
    best: int = field(init=False)

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float)
        actions = check_array(self.actions, ensure_min_samples=2)
        if theta.shape != (actions.shape[1],):
            raise ConfigError(f"theta_star has shape {theta.shape}, actions have d={actions.shape[1]}")
        if not np.all(np.isfinite(theta)):
            raise InvalidTheta("theta_star must be finite")
        if np.linalg.norm(theta) > self.B * (1 + _NORM_SLACK):
            raise InvalidTheta(f"||theta_star|| = {np.linalg.norm(theta):.6g} exceeds B = {self.B:g}")
        if np.any(np.linalg.norm(actions, axis=1) > 1 + _NORM_SLACK):
            raise ConfigError("every action feature must have Euclidean norm <= 1")
        rewards = actions @ theta
        widest = rewards.max() - rewards.min()
        if widest > self.link.valid_radius:
            raise DomainExceedsLinearRegion(
                f"reward gaps reach {widest:g}, link is valid only up to {self.link.valid_radius:g}"
            )
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "rewards", rewards)
        # argmax returns the lowest index among ties
        object.__setattr__(self, "best", int(np.argmax(rewards)))

    @property
    def d(self) -> int:
        return self.actions.shape[1]

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]

    @property
    def max_instant_regret(self) -> float:
        return 2.0 * float(self.rewards.max() - self.rewards.min())

    def _check(self, *idx):
        for i in idx:
            if not 0 <= i < self.n_actions:
                raise IndexError(f"action index {i} out of range [0, {self.n_actions})")

    def preference_prob(self, a: int, b: int) -> float:
        """Probability that ``a`` beats ``b``."""
        self._check(a, b)
        return float(self.link.value(self.rewards[a] - self.rewards[b]))

    def sample_label(self, a: int, b: int, rng: np.random.Generator) -> int:
        """Draw ``1`` when ``a`` wins. Consumes exactly one uniform draw."""
        p = self.preference_prob(a, b)
        return int(rng.random() < p)

    def instant_regret(self, a: int, b: int) -> float:
        self._check(a, b)
        r = self.rewards
        return float(2.0 * r[self.best] - r[a] - r[b])

    def second_best(self) -> int:
        """Best strictly suboptimal action (lowest index among ties)."""
        r = self.rewards
        top = r.max()
        sub = np.flatnonzero(r < top - 1e-12 * max(1.0, abs(top)))
        if sub.size == 0:
            raise ConfigError("every action is optimal; no suboptimal action exists")
        return int(sub[np.argmax(r[sub])])


def draw_theta(d: int, rng: np.random.Generator, norm: float = 2.0) -> np.ndarray:
    """Uniform coordinates on [-0.5, 0.5], rescaled to the given Euclidean norm."""
    raw = rng.uniform(-0.5, 0.5, size=d)
    return raw * (norm / np.linalg.norm(raw))


def build_env(spec: ActionSetSpec, theta_mode, link: LinkSpec, B: float,
              rng: np.random.Generator | None = None, d: int | None = None) -> EnvModel:
    """Build an environment.

    ``theta_mode`` is either the string ``"random_norm2"`` (needs ``rng`` and
    ``d``) or an explicit parameter vector.
    """
    if isinstance(theta_mode, str):
        if theta_mode != "random_norm2":
            raise ConfigError(f"unknown theta mode {theta_mode!r}")
        if rng is None or d is None:
            raise ConfigError("random_norm2 needs an rng and a dimension")
        theta = draw_theta(d, rng)
    else:
        theta = np.asarray(theta_mode, dtype=float)
        d = theta.shape[0] if d is None else d
    return EnvModel(theta, spec.build(d), link, B)


def true_preference_prob(env: EnvModel, a: int, b: int) -> float:
    return env.preference_prob(a, b)


def sample_label(env: EnvModel, a: int, b: int, rng: np.random.Generator) -> int:
    return env.sample_label(a, b, rng)


def instant_regret(env: EnvModel, a: int, b: int) -> float:
    return env.instant_regret(a, b)
