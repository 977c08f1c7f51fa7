import math

import numpy as np
import pytest

from robust_duel.exceptions import ConfigError, WrongLink
from robust_duel.harness import AttackConfig, PolicyConfig, RunConfig, run_episode
from robust_duel.link import PIECEWISE_LINEAR, SIGMOID
from robust_duel.linalg import cholesky, is_psd_difference
from robust_duel.policy import (RCDB, RCDBS, CoLSTIM, MaxInP, MaxPairUCB, argmax_pair,
                                baseline_select, beta_rcdb, beta_rcdbs, beta_tilde_rcdbs,
                                make_policy, rcdb_alpha, rcdb_select, rcdb_update,
                                symmetric_scores)

from oracles import brute_force_pair, pgd_weighted_logistic

E2 = np.eye(2)
THREE = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
KAPPA_B2 = 1.0 / (2 + math.exp(4) + math.exp(-4))
# direct high-precision evaluation of sqrt(lam)B + alpha C + sqrt(d log((1+2T/lam)/delta)/kappa)
# for d=5, T=2000, B=2, delta=0.05, C=45, lam=1/4, alpha=sqrt(5)/(45 sqrt(kappa))
BETA_D5_T2000_C45 = 77.72822982117465


def with_state(policy, actions, theta, sigma, bonus, link=SIGMOID):
    policy.fit(actions, link=link, T=10)
    policy.theta_ = np.asarray(theta, dtype=float)
    policy.sigma_ = np.asarray(sigma, dtype=float)
    policy.sigma_factor_ = cholesky(policy.sigma_)
    policy.bonus_ = bonus
    return policy


def explicit_score(theta, sigma_inv, beta, actions):
    def score(a, b):
        diff = actions[a] - actions[b]
        return float((actions[a] + actions[b]) @ theta + beta * math.sqrt(diff @ sigma_inv @ diff))
    return score


class TestRadii:
    def test_simple_substitution(self):
        d, T, delta = 3, 100, 0.1
        got = beta_rcdb(T, d, lam=1.0, B=1.0, alpha=math.inf, c=0, kappa=1.0, delta=delta)
        assert got == pytest.approx(1 + math.sqrt(d * math.log((1 + 2 * T) / delta)))

    def test_reference_setting_value(self):
        alpha = rcdb_alpha(5, 45, KAPPA_B2)
        got = beta_rcdb(2000, 5, 0.25, 2.0, alpha, 45, KAPPA_B2, 0.05)
        assert got == pytest.approx(BETA_D5_T2000_C45, rel=1e-12)
        pol = RCDB(B=2.0, delta=0.05, c_bar=45).fit(np.eye(5), T=2000)
        assert pol.beta_ == pytest.approx(BETA_D5_T2000_C45, rel=1e-12)
        assert pol.lam_ == 0.25 and pol.kappa_ == pytest.approx(KAPPA_B2)

    def test_depends_on_threshold_only(self):
        # the realized corruption never enters; only c_bar does
        cfg = RunConfig(d=2, T=20, runs=1, attack=AttackConfig("greedy", 15),
                        policies=(PolicyConfig("rcdb", "r", c_bar=5),))
        pol = cfg.make_policy(cfg.policies[0]).fit(E2, T=20)
        assert pol.c_bar == 5
        alpha = rcdb_alpha(2, 5, pol.kappa_)
        assert pol.beta_ == beta_rcdb(20, 2, pol.lam_, 2.0, alpha, 5, pol.kappa_, 0.05)

    def test_zero_budget_sentinel(self):
        pol = RCDB(c_bar=0).fit(E2, T=50)
        assert math.isinf(pol.alpha_)
        assert pol.beta_ == beta_rcdb(50, 2, pol.lam_, 2.0, math.inf, 0, pol.kappa_, 0.05)

    def test_rcdbs_radii_monotone(self):
        kwargs = dict(d=5, lam=2.5, B=2.0, alpha=(math.sqrt(5) + math.sqrt(2.5) * 2) / 45, c=45,
                      delta=0.05)
        b = [beta_rcdbs(t, kappa=KAPPA_B2, **kwargs) for t in range(1, 500)]
        bt = [beta_tilde_rcdbs(t, **kwargs) for t in range(1, 500)]
        assert np.all(np.diff(b) >= 0) and np.all(np.diff(bt) >= 0)
        t = 7
        expected = 9 * (math.sqrt(2.5) * 2 + 2 / math.sqrt(2.5) * 5 * math.log(
            (12.5 + 2 * t) / (12.5 * 0.05)) + kwargs["alpha"] * 45)
        assert beta_tilde_rcdbs(t, **kwargs) == pytest.approx(expected)

    def test_overrides(self):
        pol = RCDB(lam=0.5, alpha=0.1, beta=3.0, bonus_scale=2.0).fit(E2, T=5)
        assert (pol.lam_, pol.alpha_, pol.beta_, pol.bonus_) == (0.5, 0.1, 3.0, 6.0)


class TestSelect:
    def test_pure_exploration(self):
        pol = with_state(RCDB(), E2, [0.0, 0.0], E2, 1.0)
        assert rcdb_select(pol) == (0, 1)

    def test_pure_exploitation(self):
        pol = with_state(RCDB(), E2, [1.0, 0.0], E2, 0.0)
        assert pol.select() == (0, 0)

    def test_enumeration(self):
        sigma = np.diag([2.0, 1.0])
        pol = with_state(RCDB(), THREE, [0.5, 0.0], sigma, 1.0)
        expected, _ = brute_force_pair(explicit_score([0.5, 0.0], np.linalg.inv(sigma), 1.0,
                                                      THREE), 3)
        assert pol.select() == expected

    def test_random_instances(self, rng):
        for _ in range(50):
            acts = rng.uniform(-1, 1, size=(6, 3)) / math.sqrt(3)
            theta = rng.normal(size=3)
            m = rng.normal(size=(3, 3))
            sigma = m @ m.T + 0.1 * np.eye(3)
            beta = rng.uniform(0, 3)
            scores = symmetric_scores(theta, cholesky(sigma), beta, acts)
            np.testing.assert_allclose(scores, scores.T, atol=1e-12)
            expected, best = brute_force_pair(explicit_score(theta, np.linalg.inv(sigma), beta,
                                                             acts), 6)
            got = argmax_pair(scores)
            assert got[0] <= got[1]
            assert scores[got] == pytest.approx(best, abs=1e-9)

    def test_ties_lexicographic(self):
        assert argmax_pair(np.zeros((3, 3))) == (0, 0)
        s = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]], dtype=float)
        assert argmax_pair(s) == (0, 1)


class TestUpdate:
    def test_first_round_weight(self):
        pol = RCDB(lam=1.0, alpha=0.3).fit(THREE, T=5)
        rcdb_update(pol, 0, 1, 1)
        assert pol.last_weight_ == pytest.approx(min(1.0, 0.3 / 2.0))
        expected = np.eye(2) + pol.last_weight_ * pol.kappa_ * np.outer([2.0, 0], [2.0, 0])
        np.testing.assert_allclose(pol.sigma_, expected)

    def test_infinite_alpha_gives_unit_weights(self):
        pol = RCDB(c_bar=0).fit(THREE, T=5)
        for a, b, o in [(0, 1, 1), (2, 1, 0), (0, 2, 1)]:
            pol.update(a, b, o)
            assert pol.last_weight_ == 1.0

    def test_two_rounds_match_oracle(self):
        pol = RCDB(lam=0.5, alpha=0.4, kappa=0.1).fit(THREE, T=5)
        script = [(0, 2, 1), (1, 2, 0)]
        sigma = 0.5 * np.eye(2)
        phis, ws = [], []
        for a, b, o in script:
            phi = THREE[a] - THREE[b]
            w = min(1.0, 0.4 / math.sqrt(phi @ np.linalg.inv(sigma) @ phi))
            phis.append(phi)
            ws.append(w)
            sigma = sigma + w * 0.1 * np.outer(phi, phi)
            pol.update(a, b, o)
        expected = pgd_weighted_logistic(np.array(phis), np.array([1.0, 0.0]), np.array(ws), 0.5)
        np.testing.assert_allclose(pol.theta_, expected, atol=1e-6)
        np.testing.assert_allclose(pol.sigma_, sigma)


class TestRCDBS:
    def test_requires_sigmoid(self):
        with pytest.raises(WrongLink):
            RCDBS(B=0.2).fit(E2, link=PIECEWISE_LINEAR, T=5)

    def test_round_one_equals_rcdb_geometry(self):
        pol = RCDBS().fit(THREE, T=5)
        np.testing.assert_array_equal(pol.lambda_mat_, pol.sigma_)
        ref = with_state(RCDB(), THREE, pol.theta_, pol.sigma_, pol.bonus_)
        assert pol.select() == ref.select()

    def test_local_slope(self):
        pol = RCDBS(lam=1.0, beta=0.5).fit(E2, T=5)
        pol.theta_ = np.array([1.0, 0.0])
        gap, v = pol.local_slope(np.array([1.0, 0.0]))
        expected = math.exp(-1.5) / (1 + math.exp(-1.5)) ** 2
        assert gap == pytest.approx(1.5)
        assert v == pytest.approx(max(pol.kappa_, expected))
        assert v == pytest.approx(0.149146, abs=1e-6)

    def test_zero_gap(self):
        pol = RCDBS(lam=1.0, beta=0.5).fit(E2, T=5)
        gap, v = pol.local_slope(np.zeros(2))
        assert gap == 0.0 and v == 0.25

    def test_invariants_along_episode(self):
        cfg = RunConfig(d=3, T=150, runs=1, attack=AttackConfig("greedy", 12),
                        policies=(PolicyConfig("rcdbs", "s"),))
        radii = []

        def check(t, pol, info):
            assert is_psd_difference(pol.lambda_mat_, pol.sigma_)
            assert pol.kappa_ <= pol.last_v_ <= 0.25
            radii.append((pol.beta_, pol.beta_tilde_))

        run_episode(cfg, cfg.make_policy(cfg.policies[0]), seed=3, callback=check)
        radii = np.array(radii)
        assert np.all(np.diff(radii, axis=0) >= 0)


class TestBaselines:
    def test_cold_start(self):
        acts = np.array([[1.0, 0.0], [0.5, 0.0], [-1.0, 0.0]])
        mi = with_state(MaxInP(), acts, [0.0, 0.0], E2, 1.0)
        assert baseline_select("maxinp", mi) == (0, 2)
        co = with_state(CoLSTIM(), acts, [0.0, 0.0], E2, 1.0)
        assert baseline_select("colstim", co) == (0, 2)

    def test_no_bonus_exploits(self):
        acts = np.array([[1.0, 0.0], [0.5, 0.0], [-1.0, 0.0]])
        for cls in (MaxInP, CoLSTIM, MaxPairUCB):
            pol = with_state(cls(), acts, [1.0, 0.0], E2, 0.0)
            assert pol.select() == (0, 0)

    def test_enumeration_oracles(self, rng):
        for _ in range(40):
            acts = rng.uniform(-1, 1, size=(3, 2)) / math.sqrt(2)
            theta = rng.normal(size=2)
            m = rng.normal(size=(2, 2))
            sigma = m @ m.T + 0.2 * np.eye(2)
            inv = np.linalg.inv(sigma)
            gamma = rng.uniform(0.01, 2)

            def unc(a, b):
                diff = acts[a] - acts[b]
                return math.sqrt(diff @ inv @ diff)

            r = acts @ theta
            promising = [a for a in range(3)
                         if not any(r[b] - r[a] > gamma * unc(a, b) for b in range(3))]
            (pa, pb), _ = brute_force_pair(
                lambda a, b: unc(a, b) if a in promising and b in promising else -math.inf, 3)
            mi = with_state(MaxInP(), acts, theta, sigma, gamma)
            assert mi.select() == (pa, pb)
            np.testing.assert_array_equal(mi.promising(), promising)

            first = int(np.argmax(r))
            second = max(range(3), key=lambda b: (r[b] + gamma * unc(first, b), -b))
            co = with_state(CoLSTIM(), acts, theta, sigma, gamma)
            assert co.select() == (first, second)

            expected, _ = brute_force_pair(explicit_score(theta, inv, gamma, acts), 3)
            mp = with_state(MaxPairUCB(), acts, theta, sigma, gamma)
            assert mp.select() == expected

    def test_baselines_ignore_budget(self):
        for cls in (MaxPairUCB, MaxInP, CoLSTIM):
            pol = cls(c_bar=45).fit(np.eye(5) / 2, T=100)
            assert math.isinf(pol.alpha_)
            assert pol.beta_ == RCDB(c_bar=0).fit(np.eye(5) / 2, T=100).beta_

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            make_policy("thompson")
        with pytest.raises(ConfigError):
            baseline_select("rcdb", RCDB())


def test_sklearn_params_and_clone():
    from sklearn.base import clone
    pol = RCDB(B=1.5, c_bar=7, bonus_scale=0.5)
    params = pol.get_params()
    assert params["B"] == 1.5 and params["c_bar"] == 7
    fitted = pol.fit(E2, T=3)
    copy = clone(fitted)
    assert not hasattr(copy, "theta_")
    assert copy.get_params() == params


def test_unweighted_twin_trajectories_coincide():
    cfg = RunConfig(d=3, T=120, runs=1, attack=AttackConfig("greedy", 11))
    weighted = run_episode(cfg, RCDB(c_bar=11, alpha=math.inf), seed=5)
    twin = run_episode(cfg, MaxPairUCB(c_bar=11), seed=5)
    np.testing.assert_array_equal(weighted.pairs, twin.pairs)
    np.testing.assert_array_equal(weighted.cum_regret, twin.cum_regret)
