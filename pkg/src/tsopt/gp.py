"""Exact GP regression with an ARD squared-exponential kernel."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.stats import qmc

from .spectral import SEKernelParams, kernel_matrix

log = logging.getLogger(__name__)

JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

LENGTHSCALE_BOX = (0.05, 5.0)
AMPLITUDE_BOX = (0.1, 10.0)


@dataclass(frozen=True)
class Dataset:
    """Observations mapped to the unit box ``[-1, 1]^d`` with standardized outputs."""

    X: np.ndarray
    y: np.ndarray
    raw_bounds: np.ndarray
    y_mean: float = 0.0
    y_std: float = 1.0

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        bounds = np.asarray(self.raw_bounds, dtype=float).reshape(-1, 2)
        if X.shape[0] != y.size:
            raise ValueError(f"{X.shape[0]} inputs but {y.size} outputs")
        if X.shape[1] != bounds.shape[0]:
            raise ValueError("bounds do not match input dimension")
        if np.any(np.abs(X) > 1.0 + 1e-12):
            raise ValueError("normalized inputs must lie in [-1, 1]")
        for name, arr in (("X", X), ("y", y), ("raw_bounds", bounds)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_raw(cls, X_raw, y_raw, bounds) -> Dataset:
        bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
        y_raw = np.asarray(y_raw, dtype=float).reshape(-1)
        y_mean = float(np.mean(y_raw)) if y_raw.size else 0.0
        y_std = float(np.std(y_raw)) if y_raw.size else 1.0
        if not y_std > 1e-300 or not np.isfinite(y_std):
            y_std = 1.0
        X = normalize(X_raw, bounds)
        return cls(X, (y_raw - y_mean) / y_std, bounds, y_mean, y_std)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def ndim(self) -> int:
        return self.X.shape[1]

    def standardize(self, y_raw):
        return (np.asarray(y_raw, dtype=float) - self.y_mean) / self.y_std

    def unstandardize(self, y):
        return np.asarray(y, dtype=float) * self.y_std + self.y_mean

    def to_raw(self, X):
        return unnormalize(X, self.raw_bounds)


def normalize(X_raw, bounds) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    lo, hi = bounds[:, 0], bounds[:, 1]
    X = 2.0 * (np.atleast_2d(np.asarray(X_raw, dtype=float)) - lo) / (hi - lo) - 1.0
    return np.clip(X, -1.0, 1.0)


def unnormalize(X, bounds) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    lo, hi = bounds[:, 0], bounds[:, 1]
    return lo + 0.5 * (np.asarray(X, dtype=float) + 1.0) * (hi - lo)


def robust_cholesky(C: np.ndarray, what: str = "covariance") -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``C``, escalating diagonal jitter if needed.

    Returns ``(L, jitter)``; raises ``LinAlgError`` once the ladder is exhausted.
    """
    scale = max(float(np.mean(np.diag(C))), 1e-300) if C.size else 1.0
    eye = np.eye(C.shape[0])
    for jitter in JITTER_LADDER:
        try:
            return linalg.cholesky(C + jitter * scale * eye, lower=True), jitter
        except linalg.LinAlgError:
            continue
    raise linalg.LinAlgError(
        f"{what} matrix ({C.shape[0]}x{C.shape[0]}) is not positive definite even with "
        f"relative jitter {JITTER_LADDER[-1]:g}; min diag {np.min(np.diag(C)):.3g}"
    )


@dataclass(frozen=True)
class GPPosterior:
    params: SEKernelParams
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.y.size

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """``C^{-1} rhs`` via two triangular solves."""
        return linalg.cho_solve((self.chol, True), rhs)

    def cross_kernel(self, x) -> np.ndarray:
        return kernel_matrix(self.params, x, self.X)

    def mean(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.n == 0:
            return np.zeros(x.shape[0])
        return self.cross_kernel(x) @ self.alpha

    def var(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        prior = np.full(x.shape[0], self.params.amplitude)
        if self.n == 0:
            return prior
        k = self.cross_kernel(x)
        w = linalg.solve_triangular(self.chol, k.T, lower=True)
        return np.maximum(prior - np.sum(w * w, axis=0), 0.0)

    def mean_var_grad(self, x):
        """Posterior mean and variance with their gradients at each row of ``x``.

        Returns ``(mu, var, dmu, dvar)`` with shapes ``(n,), (n,), (n, d), (n, d)``.
        """
        x = np.atleast_2d(x)
        n, d = x.shape
        if self.n == 0:
            return (np.zeros(n), np.full(n, self.params.amplitude), np.zeros((n, d)), np.zeros((n, d)))
        k = self.cross_kernel(x)
        # d k(x, x_j) / dx = -(x - x_j) / l^2 * k
        diff = (x[:, None, :] - self.X[None, :, :]) / self.params.lengthscales**2
        dk = -diff * k[:, :, None]
        mu = k @ self.alpha
        dmu = np.einsum("njd,j->nd", dk, self.alpha)
        ck = self.solve(k.T).T
        var = np.maximum(self.params.amplitude - np.sum(k * ck, axis=1), 0.0)
        dvar = -2.0 * np.einsum("njd,nj->nd", dk, ck)
        return mu, var, dmu, dvar


def fit_posterior(dataset: Dataset, params: SEKernelParams) -> GPPosterior:
    """Condition the zero-mean GP prior on ``dataset``."""
    X, y = dataset.X, dataset.y
    if X.shape[1] != params.ndim:
        raise ValueError(f"data dimension {X.shape[1]} != kernel dimension {params.ndim}")
    C = kernel_matrix(params, X, X) + params.noise_variance * np.eye(X.shape[0])
    L, jitter = robust_cholesky(C)
    if jitter:
        log.info("GP covariance needed relative jitter %g", jitter)
    alpha = linalg.cho_solve((L, True), y)
    return GPPosterior(params, X, y, L, alpha, jitter)


def posterior_mean(gp: GPPosterior, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    out = gp.mean(x)
    return float(out[0]) if x.ndim <= 1 else out


def posterior_var(gp: GPPosterior, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    out = gp.var(x)
    return float(out[0]) if x.ndim <= 1 else out


def neg_log_marginal_likelihood(theta: np.ndarray, X: np.ndarray, y: np.ndarray, noise: float):
    """NLL and its gradient in ``theta = (log l_1, ..., log l_d, log amplitude)``."""
    ls = np.exp(theta[:-1])
    amp = math.exp(theta[-1])
    n = y.size
    diff2 = ((X[:, None, :] - X[None, :, :]) / ls) ** 2
    K = amp * np.exp(-0.5 * np.sum(diff2, axis=-1))
    C = K + noise * np.eye(n)
    L = linalg.cholesky(C, lower=True)
    alpha = linalg.cho_solve((L, True), y)
    nll = 0.5 * y @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * n * math.log(2.0 * math.pi)
    W = np.outer(alpha, alpha) - linalg.cho_solve((L, True), np.eye(n))
    grad = np.empty_like(theta)
    for i in range(ls.size):
        grad[i] = -0.5 * np.sum(W * K * diff2[:, :, i])
    grad[-1] = -0.5 * np.sum(W * K)
    return nll, grad


def fit_hyperparameters(
    dataset: Dataset,
    fixed_noise: float = 1e-6,
    n_starts: int = 8,
    seed: int = 0,
    lengthscale_box: tuple[float, float] = LENGTHSCALE_BOX,
    amplitude_box: tuple[float, float] = AMPLITUDE_BOX,
) -> SEKernelParams:
    """Maximize the log marginal likelihood over lengthscales and amplitude.

    Multi-start L-BFGS-B in log-parameter space from a scrambled Sobol design;
    the noise variance is held at ``fixed_noise``.
    """
    X, y = dataset.X, dataset.y
    d = dataset.ndim
    lo = np.log([lengthscale_box[0]] * d + [amplitude_box[0]])
    hi = np.log([lengthscale_box[1]] * d + [amplitude_box[1]])
    starts = qmc.scale(qmc.Sobol(d + 1, scramble=True, seed=seed).random(n_starts), lo, hi)

    def fun(theta):
        try:
            f, g = neg_log_marginal_likelihood(theta, X, y, fixed_noise)
        except linalg.LinAlgError:
            return 1e25, np.zeros_like(theta)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return 1e25, np.zeros_like(theta)
        return f, g

    best = None
    for theta0 in starts:
        res = optimize.minimize(fun, theta0, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)))
        if np.isfinite(res.fun) and res.fun < 1e25 and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        warnings.warn("hyperparameter fit failed from every start; using defaults", RuntimeWarning, stacklevel=2)
        return SEKernelParams(np.full(d, 0.5), 1.0, fixed_noise)
    theta = np.clip(best.x, lo, hi)
    return SEKernelParams(np.exp(theta[:-1]), math.exp(theta[-1]), fixed_noise)
