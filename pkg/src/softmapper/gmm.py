"""One-dimensional Gaussian mixtures: density, likelihood, responsibilities, EM.

Parameters are kept in two forms. :class:`GmmParams` holds weights, means
and standard deviations; :class:`FreeParams` holds the unconstrained
coordinates used by gradient descent (weight logits and log standard
deviations), so that any real vector maps back to a valid mixture.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class GmmParams:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.means = np.asarray(self.means, dtype=float).ravel()
        self.stds = np.asarray(self.stds, dtype=float).ravel()
        k = self.weights.size
        if k < 1 or self.means.size != k or self.stds.size != k:
            raise ValueError("weights, means and stds must be non-empty and of equal length")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must be positive and sum to 1, got {self.weights}")
        if np.any(self.stds <= 0) or not np.all(np.isfinite(self.stds)):
            raise ValueError(f"stds must be positive, got {self.stds}")
        if not np.all(np.isfinite(self.means)):
            raise ValueError("means must be finite")

    @property
    def K(self) -> int:
        return self.weights.size

    @property
    def variances(self) -> np.ndarray:
        return self.stds ** 2

    def permuted(self, order) -> "GmmParams":
        order = np.asarray(order)
        return GmmParams(self.weights[order], self.means[order], self.stds[order])

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "means": self.means.tolist(),
                "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "GmmParams":
        return cls(data["weights"], data["means"], data["stds"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "GmmParams":
        return cls.from_dict(json.loads(text))


@dataclass
class FreeParams:
    xi: np.ndarray
    means: np.ndarray
    log_stds: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float).ravel()
        self.means = np.asarray(self.means, dtype=float).ravel()
        self.log_stds = np.asarray(self.log_stds, dtype=float).ravel()

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.xi, self.means, self.log_stds])

    @classmethod
    def from_vector(cls, vec) -> "FreeParams":
        vec = np.asarray(vec, dtype=float)
        k = vec.size // 3
        return cls(vec[:k], vec[k:2 * k], vec[2 * k:])


def to_free(theta: GmmParams) -> FreeParams:
    return FreeParams(np.log(theta.weights), theta.means.copy(), np.log(theta.stds))


def from_free(phi: FreeParams) -> GmmParams:
    xi = phi.xi - phi.xi.max()
    w = np.exp(xi)
    w /= w.sum()
    # softmax can underflow a weight to exactly 0 for extreme logits
    w = np.maximum(w, np.finfo(float).tiny)
    w /= w.sum()
    return GmmParams(w, phi.means.copy(), np.exp(phi.log_stds))


def component_density(y, mean: float, std: float):
    if std <= 0:
        raise ValueError(f"std must be positive, got {std}")
    z = (np.asarray(y, dtype=float) - mean) / std
    return np.exp(-0.5 * z * z) / (std * np.sqrt(2.0 * np.pi))


def log_component_densities(y, theta: GmmParams) -> np.ndarray:
    """n x K matrix of log N(y_i | mu_k, sigma_k^2)."""
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    z = (y - theta.means) / theta.stds
    return -0.5 * z * z - np.log(theta.stds) - LOG_SQRT_2PI


def log_joint(y, theta: GmmParams) -> np.ndarray:
    """n x K matrix of log pi_k + log N(y_i | mu_k, sigma_k^2)."""
    return log_component_densities(y, theta) + np.log(theta.weights)


def pointwise_log_likelihood(y, theta: GmmParams) -> np.ndarray:
    return logsumexp(log_joint(y, theta), axis=1)


def log_likelihood(y, theta: GmmParams) -> float:
    return float(pointwise_log_likelihood(y, theta).sum())


def responsibilities(y, theta: GmmParams) -> np.ndarray:
    lj = log_joint(y, theta)
    q = np.exp(lj - logsumexp(lj, axis=1, keepdims=True))
    # renormalise so rows sum to 1 to rounding
    return q / q.sum(axis=1, keepdims=True)


def std_floor(y) -> float:
    y = np.asarray(y, dtype=float)
    rng = float(y.max() - y.min()) if y.size else 0.0
    return 1e-4 * rng if rng > 0 else 1e-12


@dataclass
class EmResult:
    params: GmmParams
    log_likelihoods: list
    n_iter: int
    converged: bool


def em_fit(y, K: int, seed=None, max_iter: int = 200, tol: float = 1e-6, return_trace: bool = False):
    """Fit a K-component mixture to ``y`` by expectation-maximisation.

    Means start at the quantiles ``(2k+1)/(2K)`` of the data, weights are
    equal and every std starts at the sample std, so the fit is fully
    deterministic. ``seed`` is accepted for call-site symmetry with the
    samplers and has no effect. Stds are floored at ``std_floor(y)``.
    Iteration stops once the log-likelihood improves by less than ``tol``.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if K < 1:
        raise ValueError("K must be at least 1")
    if n < K:
        raise ValueError(f"need at least K={K} values, got {n}")
    floor = std_floor(y)

    if K == 1:
        params = GmmParams([1.0], [y.mean()], [max(y.std(), floor)])
        ll = log_likelihood(y, params)
        result = EmResult(params, [ll], 0, True)
        return result if return_trace else result.params

    means = np.quantile(y, (2 * np.arange(K) + 1) / (2 * K))
    stds = np.full(K, max(y.std(), floor))
    params = GmmParams(np.full(K, 1.0 / K), means, stds)
    trace = [log_likelihood(y, params)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        q = responsibilities(y, params)
        nk = q.sum(axis=0)
        # an empty component keeps its previous location
        nk_safe = np.where(nk > 0, nk, 1.0)
        mu = np.where(nk > 0, (q * y[:, None]).sum(axis=0) / nk_safe, params.means)
        var = (q * (y[:, None] - mu) ** 2).sum(axis=0) / nk_safe
        sd = np.maximum(np.sqrt(var), floor)
        w = np.maximum(nk / n, np.finfo(float).tiny)
        params = GmmParams(w / w.sum(), mu, sd)
        trace.append(log_likelihood(y, params))
        if trace[-1] - trace[-2] < tol:
            converged = True
            break
    result = EmResult(params, trace, it, converged)
    return result if return_trace else result.params
