"""Cross-entropy optimization over box-bounded parameter vectors.

Each iteration draws candidates from a Gaussian mixture, clamps them into
the box, evaluates the cost function, and refits the mixture to the elite
fraction with the lowest costs. The sampling distribution collapses toward
a point; the optimizer stops when its largest covariance eigenvalue drops
below a threshold and returns the best sample ever seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_EM_MAX_ITERS = 100
_EM_REL_TOL = 1e-9


@dataclass(frozen=True)
class CemConfig:
    samples: int = 40
    elite_frac: float = 0.1
    max_iters: int = 30
    var_floor: float = 1e-6
    converge_eig: float = 1e-3
    seed: int = 0
    components: int = 1

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError(f"need at least 2 samples per iteration, got {self.samples}")
        n_elite = math.ceil(self.elite_frac * self.samples)
        if not 1 <= n_elite < self.samples:
            raise ValueError(f"elite fraction {self.elite_frac} with {self.samples} samples "
                             f"gives an invalid elite count {n_elite}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.var_floor <= 0.0:
            raise ValueError("variance floor must be positive")
        if self.components < 1:
            raise ValueError("need at least one mixture component")

    @property
    def n_elite(self) -> int:
        return math.ceil(self.elite_frac * self.samples)


@dataclass(frozen=True, eq=False)
class GmmParams:
    """Sampling mixture: means (K, d), covariances (K, d, d), weights (K,)."""

    means: np.ndarray
    covariances: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covariances, dtype=float)
        if covs.ndim == 2:
            covs = covs[None]
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        k, d = means.shape
        if covs.shape != (k, d, d):
            raise ValueError(f"covariance shape {covs.shape} != {(k, d, d)}")
        if weights.shape != (k,):
            raise ValueError(f"weights shape {weights.shape} != {(k,)}")
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        for c in covs:
            np.linalg.cholesky(c)  # raises LinAlgError when not SPD
        for arr, name in ((means, "means"), (covs, "covariances"), (weights, "weights")):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def max_cov_eigenvalue(self) -> float:
        return max(float(np.linalg.eigvalsh(c)[-1]) for c in self.covariances)


def initial_params(lower, upper, components: int = 1) -> GmmParams:
    """Box-covering start: means at the midpoint (spread along the diagonal
    for several components), one axis-aligned standard deviation of half the
    box width per coordinate."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("bounds must be 1-D arrays of equal length")
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    d = lower.size
    span = upper - lower
    cov = np.diag((0.5 * span) ** 2 + 1e-12)
    if components == 1:
        means = (0.5 * (lower + upper))[None]
    else:
        fracs = (np.arange(components) + 1.0) / (components + 1.0)
        means = lower[None] + fracs[:, None] * span[None]
    covs = np.repeat(cov[None], components, axis=0)
    weights = np.full(components, 1.0 / components)
    return GmmParams(means, covs, weights)


def sample(gmm: GmmParams, n: int, bounds, rng: np.random.Generator) -> np.ndarray:
    """Draw n vectors (component choice by weight, then the component's
    Gaussian) and clamp each entry into the box."""
    lower, upper = bounds
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = gmm.dim
    z = rng.standard_normal((n, d))
    if gmm.k == 1:
        chol = np.linalg.cholesky(gmm.covariances[0])
        raw = gmm.means[0] + z @ chol.T
    else:
        comp = rng.choice(gmm.k, size=n, p=gmm.weights)
        raw = np.empty((n, d))
        for k in range(gmm.k):
            rows = comp == k
            if rows.any():
                chol = np.linalg.cholesky(gmm.covariances[k])
                raw[rows] = gmm.means[k] + z[rows] @ chol.T
    return np.clip(raw, lower, upper)


def _canonical_elite_order(samples: np.ndarray, costs: np.ndarray) -> list[int]:
    # ties broken by sample content so the fit is invariant under shuffling
    # of (sample, cost) pairs
    return sorted(range(len(costs)), key=lambda i: (costs[i], samples[i].tobytes()))


def _fit_single(elite: np.ndarray, var_floor: float) -> GmmParams:
    mu = elite.mean(axis=0)
    centered = elite - mu
    cov = centered.T @ centered / elite.shape[0]
    cov += var_floor * np.eye(elite.shape[1])
    return GmmParams(mu[None], cov[None], np.ones(1))


def _log_gauss(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(cov)
    alpha = np.linalg.solve(chol, (x - mean).T)
    quad = (alpha ** 2).sum(axis=0)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    return -0.5 * (quad + logdet + x.shape[1] * math.log(2.0 * math.pi))


def _fit_mixture(elite: np.ndarray, init: GmmParams, var_floor: float) -> GmmParams:
    n, d = elite.shape
    means = init.means.copy()
    covs = init.covariances.copy()
    weights = init.weights.copy()
    k = init.k
    prev_ll = -np.inf
    for _ in range(_EM_MAX_ITERS):
        logp = np.stack([_log_gauss(elite, means[i], covs[i]) for i in range(k)], axis=1)
        logp += np.log(np.maximum(weights, 1e-300))
        mx = logp.max(axis=1, keepdims=True)
        lse = mx[:, 0] + np.log(np.exp(logp - mx).sum(axis=1))
        ll = float(lse.sum())
        resp = np.exp(logp - lse[:, None])
        nk = resp.sum(axis=0) + 1e-12
        weights = nk / nk.sum()
        means = (resp.T @ elite) / nk[:, None]
        for i in range(k):
            centered = elite - means[i]
            covs[i] = (resp[:, i, None] * centered).T @ centered / nk[i]
            covs[i] += var_floor * np.eye(d)
        if ll - prev_ll < _EM_REL_TOL * max(1.0, abs(ll)):
            break
        prev_ll = ll
    return GmmParams(means, covs, weights)


def update(samples_arr: np.ndarray, costs, config: CemConfig,
           previous: GmmParams | None = None) -> GmmParams:
    """Refit the sampling mixture to the lowest-cost elite subset.

    With one component this is the elite mean and covariance plus the
    variance floor; with several it is expectation-maximization started
    from the previous mixture.
    """
    samples_arr = np.ascontiguousarray(samples_arr, dtype=float)
    costs = np.asarray(costs, dtype=float)
    if len(costs) != len(samples_arr):
        raise ValueError("samples and costs disagree in length")
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite (apply penalties before the update)")
    n_elite = math.ceil(config.elite_frac * len(costs))
    if n_elite < 2:
        raise ValueError(f"elite set of {n_elite} is too small to fit a covariance")
    order = _canonical_elite_order(samples_arr, costs)
    elite = samples_arr[order[:n_elite]]
    if config.components == 1:
        return _fit_single(elite, config.var_floor)
    if previous is None:
        raise ValueError("mixture update with several components needs the previous fit")
    return _fit_mixture(elite, previous, config.var_floor)


def optimize(cost_fn, init: GmmParams, config: CemConfig, bounds,
             rng: np.random.Generator | None = None):
    """Iterate sample, evaluate, refit until the mixture collapses.

    Returns (best vector, best cost, history) where history rows are
    (iteration, best cost so far, mean cost, max covariance eigenvalue).
    The best-ever sample is returned, not the final mean.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(config.seed))
    gmm = init
    best_z = None
    best_cost = math.inf
    history: list[tuple[int, float, float, float]] = []
    for it in range(config.max_iters):
        drawn = sample(gmm, config.samples, bounds, rng)
        costs = np.array([float(cost_fn(z)) for z in drawn])
        idx = int(np.argmin(costs))
        if costs[idx] < best_cost:
            best_cost = float(costs[idx])
            best_z = drawn[idx].copy()
        gmm = update(drawn, costs, config, previous=gmm)
        max_eig = gmm.max_cov_eigenvalue()
        history.append((it, best_cost, float(costs.mean()), max_eig))
        if max_eig < config.converge_eig:
            break
    return best_z, best_cost, history
