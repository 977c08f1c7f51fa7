"""Episode runner, multi-seed aggregation and corruption-budget sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone

from .adversary import Adversary
from .environment import ActionSetSpec, EnvModel, build_env, draw_theta
from .exceptions import ConfigError, EmptyInput, EpisodeFailure, NoConvergence, NotPositiveDefinite
from .link import LinkSpec
from .policy import DEFAULT_BONUS_SCALE, DuelingPolicy, make_policy


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "greedy"
    budget: int = 45
    p: float = 0.5
    target: int | None = None

    def make(self) -> Adversary:
        return Adversary(self.kind, self.budget, self.p, self.target)


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    name: str
    c_bar: int | None = None
    bonus_scale: float = DEFAULT_BONUS_SCALE
    overrides: dict = field(default_factory=dict)

    def make(self, B: float, delta: float, budget: int) -> DuelingPolicy:
        """Instantiate the policy; ``c_bar`` defaults to the true budget (known-budget mode)."""
        params = dict(B=B, delta=delta, bonus_scale=self.bonus_scale)
        params["c_bar"] = budget if self.c_bar is None else self.c_bar
        params.update(self.overrides)
        return make_policy(self.kind, **params)


@dataclass(frozen=True)
class RunConfig:
    d: int = 5
    T: int = 2000
    B: float = 2.0
    link: LinkSpec = LinkSpec("sigmoid")
    action_set: ActionSetSpec = ActionSetSpec("hypercube")
    theta_mode: str = "random_norm2"
    theta_values: tuple | None = None
    redraw_theta: bool = True
    policies: tuple = (PolicyConfig("rcdb", "rcdb"),)
    attack: AttackConfig = AttackConfig()
    runs: int = 10
    base_seed: int = 0
    delta: float = 0.05

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be at least 1")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.d < 1:
            raise ConfigError("d must be at least 1")
        if self.attack.budget > self.T:
            raise ConfigError("attack budget cannot exceed T")
        if self.theta_mode not in ("random_norm2", "explicit"):
            raise ConfigError(f"unknown theta mode {self.theta_mode!r}")
        if self.theta_mode == "explicit" and self.theta_values is None:
            raise ConfigError("explicit theta needs values")

    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.runs)]

    def make_env(self, seed: int) -> EnvModel:
        if self.theta_mode == "explicit":
            return build_env(self.action_set, np.asarray(self.theta_values, float), self.link,
                             self.B, d=self.d)
        theta_seed = seed if self.redraw_theta else self.base_seed
        theta_rng = np.random.default_rng(np.random.SeedSequence([theta_seed, 0]))
        return EnvModel(draw_theta(self.d, theta_rng), self.action_set.build(self.d),
                        self.link, self.B)

    def make_policy(self, pc: PolicyConfig) -> DuelingPolicy:
        return pc.make(self.B, self.delta, self.attack.budget)


@dataclass
class RunResult:
    """Per-round traces of one episode; every array has length ``T``."""

    instant_regret: np.ndarray
    cum_regret: np.ndarray
    flips_used: np.ndarray
    weight: np.ndarray
    est_error: np.ndarray
    euclid_error: np.ndarray
    radius: np.ndarray
    pairs: np.ndarray
    true_labels: np.ndarray
    observed: np.ndarray
    theta_star: np.ndarray

    @property
    def T(self) -> int:
        return len(self.instant_regret)

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])


def run_episode(cfg: RunConfig, policy: DuelingPolicy, seed: int, callback=None) -> RunResult:
    """Play ``cfg.T`` rounds of ``policy`` (cloned, so the template stays unfitted).

    Label sampling and adversary randomness use separate streams derived from
    ``seed``. ``callback(t, policy, info)`` is invoked after each round's
    update, where ``info`` holds the pre-update quantities of round ``t``.
    """
    T = cfg.T
    env = cfg.make_env(seed)
    label_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    adv_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    adversary = cfg.attack.make().bind(env)
    try:
        pol = clone(policy).fit(env.actions, link=env.link, T=T)
    except (NoConvergence, NotPositiveDefinite) as exc:
        raise EpisodeFailure(0, exc) from exc
    exposes_sigma = hasattr(pol, "sigma_")

    inst = np.empty(T)
    flips = np.empty(T, dtype=int)
    weights = np.empty(T)
    est = np.full(T, np.nan)
    euclid = np.empty(T)
    radius = np.full(T, np.nan)
    pairs = np.empty((T, 2), dtype=int)
    labels = np.empty(T, dtype=int)
    observed = np.empty(T, dtype=int)

    for t in range(1, T + 1):
        i = t - 1
        try:
            err = pol.theta_ - env.theta_star
            euclid[i] = np.linalg.norm(err)
            if exposes_sigma:
                est[i] = math.sqrt(max(float(err @ pol.sigma_ @ err), 0.0))
                radius[i] = pol.radius()
            info = {"sigma": pol.sigma_, "sigma_factor": pol.sigma_factor_,
                    "theta": pol.theta_}
            a, b = pol.select()
            label = env.sample_label(a, b, label_rng)
            obs, _ = adversary.corrupt(t, a, b, label, env, adv_rng)
            pol.update(a, b, obs)
        except (NoConvergence, NotPositiveDefinite) as exc:
            raise EpisodeFailure(t, exc) from exc
        if callback is not None:
            info.update(a=a, b=b, label=label, observed=obs)
            callback(t, pol, info)
        inst[i] = env.instant_regret(a, b)
        flips[i] = adversary.used
        weights[i] = pol.last_weight_
        pairs[i] = a, b
        labels[i] = label
        observed[i] = obs

    return RunResult(inst, np.cumsum(inst), flips, weights, est, euclid, radius, pairs,
                     labels, observed, env.theta_star.copy())


@dataclass
class AggregateResult:
    mean: np.ndarray
    std: np.ndarray
    instant_mean: np.ndarray
    flips_mean: np.ndarray
    weight_mean: np.ndarray
    runs: int

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_std(self) -> float:
        return float(self.std[-1])


def aggregate(results: list[RunResult]) -> AggregateResult:
    """Pointwise mean and sample std (``n - 1`` denominator, 0 for one run)."""
    if not results:
        raise EmptyInput("nothing to aggregate")
    if len({r.T for r in results}) != 1:
        raise ValueError("all runs must share the same horizon")
    cum = np.vstack([r.cum_regret for r in results])
    std = cum.std(axis=0, ddof=1) if len(results) > 1 else np.zeros(cum.shape[1])
    return AggregateResult(
        mean=cum.mean(axis=0),
        std=std,
        instant_mean=np.mean([r.instant_regret for r in results], axis=0),
        flips_mean=np.mean([r.flips_used for r in results], axis=0),
        weight_mean=np.mean([r.weight for r in results], axis=0),
        runs=len(results),
    )


def run_policy(cfg: RunConfig, pc: PolicyConfig, n_jobs: int = 1) -> list[RunResult]:
    policy = cfg.make_policy(pc)
    if n_jobs == 1:
        return [run_episode(cfg, policy, s) for s in cfg.seeds()]
    return Parallel(n_jobs=n_jobs)(delayed(run_episode)(cfg, policy, s) for s in cfg.seeds())


def compare(cfg: RunConfig, n_jobs: int = 1) -> dict[str, AggregateResult]:
    """Aggregate every configured policy over the same seed list, in config order."""
    return {pc.name: aggregate(run_policy(cfg, pc, n_jobs)) for pc in cfg.policies}


@dataclass
class SweepRow:
    c: int
    final: dict  # policy name -> (mean, std)


def sweep_budget(cfg: RunConfig, budgets, n_jobs: int = 1) -> list[SweepRow]:
    """Final cumulative regret per budget; policies retune to each budget unless
    their ``c_bar`` was pinned explicitly."""
    budgets = list(budgets)
    if not budgets:
        raise EmptyInput("budget list is empty")
    rows = []
    for c in budgets:
        if c < 0 or c > cfg.T:
            raise ConfigError(f"budget {c} outside [0, T={cfg.T}]")
        sub = replace(cfg, attack=replace(cfg.attack, budget=c))
        agg = compare(sub, n_jobs)
        rows.append(SweepRow(c, {name: (a.final_mean, a.final_std) for name, a in agg.items()}))
    return rows
