"""Uncertainty-weighted regularized MLE for pairwise preferences.

The estimate solves ``lam * theta + sum_i w_i (link(phi_i . theta) - o_i) phi_i = 0``,
the stationary condition of the strongly convex objective

    lam/2 ||theta||^2 + sum_i w_i [Psi(phi_i . theta) - o_i phi_i . theta]

with ``Psi' = link``. Damped Newton converges globally because the Hessian
``lam I + sum_i w_i link'(z_i) phi_i phi_i^T`` is SPD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import NoConvergence
from .link import LinkSpec, SIGMOID
from .linalg import CholFactor, cholesky, elliptical_norm, rank_one_add, solve

MAX_HALVINGS = 30


@dataclass(frozen=True)
class DuelRecord:
    phi_diff: np.ndarray
    observed: int
    weight: float = 1.0
    v_weight: float | None = None


@dataclass(frozen=True)
class MleParams:
    lam: float = 1.0
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


def mle_objective(theta, phi, obs, w, lam, link: LinkSpec = SIGMOID) -> float:
    z = phi @ theta
    return 0.5 * lam * float(theta @ theta) + float(w @ (link.antiderivative(z) - obs * z))


def mle_gradient(theta, phi, obs, w, lam, link: LinkSpec = SIGMOID) -> np.ndarray:
    z = phi @ theta
    return lam * theta + phi.T @ (w * (link.value(z) - obs))


def newton_mle(phi, obs, w, lam, link: LinkSpec = SIGMOID, warm_start=None,
               tol: float = 1e-10, max_iter: int = 100) -> tuple[np.ndarray, int]:
    """Damped Newton on the weighted objective. Returns ``(theta, n_iter)``.

    ``phi`` is (n, d); ``obs`` and ``w`` are (n,). ``n = 0`` gives ``theta = 0``.
    """
    d = phi.shape[1]
    theta = np.zeros(d) if warm_start is None else np.array(warm_start, dtype=float)
    eye = lam * np.eye(d)

    z = phi @ theta
    grad = lam * theta + phi.T @ (w * (link.value(z) - obs))
    gnorm = math.sqrt(grad @ grad)
    obj = 0.5 * lam * (theta @ theta) + w @ (link.antiderivative(z) - obs * z)
    for it in range(max_iter + 1):
        if gnorm <= tol:
            return theta, it
        if it == max_iter:
            break
        curv = w * link.derivative(z)
        hess = eye + (phi.T * curv) @ phi
        step = np.linalg.solve(hess, grad)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = theta - t * step
            zc = phi @ cand
            gc = lam * cand + phi.T @ (w * (link.value(zc) - obs))
            gc_norm = math.sqrt(gc @ gc)
            oc = 0.5 * lam * (cand @ cand) + w @ (link.antiderivative(zc) - obs * zc)
            # near the optimum the objective change drowns in rounding; a smaller
            # gradient is then the better progress signal
            if oc <= obj or gc_norm < gnorm:
                break
            t *= 0.5
        theta, z, grad, gnorm, obj = cand, zc, gc, gc_norm, oc
    raise NoConvergence(f"gradient norm {gnorm:.3e} > tol {tol:g} after {max_iter} Newton steps")


def _stack(history):
    if not history:
        return None
    phi = np.array([r.phi_diff for r in history], dtype=float)
    obs = np.array([r.observed for r in history], dtype=float)
    w = np.array([r.weight for r in history], dtype=float)
    return phi, obs, w


def solve_weighted_mle(history, params: MleParams, link: LinkSpec = SIGMOID, warm_start=None,
                       d: int | None = None) -> np.ndarray:
    """Weighted MLE over a list of ``DuelRecord``."""
    stacked = _stack(history)
    if stacked is None:
        if warm_start is not None:
            return np.zeros(len(warm_start))
        if d is None:
            raise ValueError("empty history needs a dimension or a warm start")
        return np.zeros(d)
    phi, obs, w = stacked
    if np.any(w <= 0):
        raise ValueError("history weights must be positive")
    theta, _ = newton_mle(phi, obs, w, params.lam, link, warm_start, params.tol, params.max_iter)
    return theta


def compute_weight(phi_diff, sigma_factor: CholFactor, alpha: float) -> float:
    """``min(1, alpha / ||phi_diff||_{Sigma^{-1}})``; ``alpha = inf`` disables weighting."""
    if math.isinf(alpha):
        return 1.0
    if not alpha > 0:
        raise ValueError("alpha must be positive or +inf")
    norm = float(elliptical_norm(sigma_factor, phi_diff))
    if norm == 0.0:
        return 1.0
    return min(1.0, alpha / norm)


def update_sigma(sigma, phi_diff, w: float, kappa: float) -> np.ndarray:
    if not (0 < w <= 1 and kappa > 0):
        raise ValueError("need 0 < w <= 1 and kappa > 0")
    return rank_one_add(sigma, phi_diff, w * kappa)


def update_lambda_mat(lam_mat, phi_diff, w: float, v: float) -> np.ndarray:
    if not (0 < w <= 1 and v > 0):
        raise ValueError("need 0 < w <= 1 and v > 0")
    return rank_one_add(lam_mat, phi_diff, w * v)


class WeightedPreferenceMLE(ClassifierMixin, BaseEstimator):
    """Batch estimator wrapping the weighted MLE.

    ``X`` holds feature differences ``phi(a) - phi(b)``, ``y`` the observed
    labels (1 when the first item won) and ``sample_weight`` the uncertainty
    weights.

    >>> est = WeightedPreferenceMLE(lam=1.0).fit([[1.0, 0.0]], [1])
    >>> round(float(est.coef_[0]), 4)
    0.4011
    """

    def __init__(self, lam=1.0, link="sigmoid", tol=1e-10, max_iter=100):
        self.lam = lam
        self.link = link
        self.tol = tol
        self.max_iter = max_iter

    def _link(self) -> LinkSpec:
        return self.link if isinstance(self.link, LinkSpec) else LinkSpec(self.link)

    def fit(self, X, y, sample_weight=None, warm_start=None):
        X, y = check_X_y(X, y, dtype=float)
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if w.shape != y.shape or np.any(w <= 0):
            raise ValueError("sample_weight must be positive and match y")
        MleParams(self.lam, self.tol, self.max_iter)
        self.coef_, self.n_iter_ = newton_mle(X, y, w, self.lam, self._link(), warm_start,
                                              self.tol, self.max_iter)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X, dtype=float) @ self.coef_

    def predict_proba(self, X):
        p = np.asarray(self._link().value(self.decision_function(X)), dtype=float)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)
