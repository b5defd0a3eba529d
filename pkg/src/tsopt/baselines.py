"""Baseline inner-loop optimizers and acquisition functions.

* random multi-start with the same local search as :func:`tsopt.inner.optimize_ts`
* a real-coded genetic algorithm
* expected improvement and lower confidence bound on the GP posterior
* Thompson sampling with random Fourier features (TS-RF)
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import ndtr

from .gp import GPPosterior, robust_cholesky
from .inner import InnerLoopError, InnerResult, multistart
from .rng import stream

__all__ = [
    "random_multistart",
    "genetic_minimize",
    "ei",
    "lcb",
    "NegativeEI",
    "LowerConfidenceBound",
    "RFFSample",
    "rff_features",
    "ts_rf_draw",
    "ts_rf_eval",
    "ts_rf_grad",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _box(box, d):
    lo = np.broadcast_to(np.asarray(box[0], dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(box[1], dtype=float), (d,))
    return lo, hi


def random_multistart(objective, n_starts: int, box=(-1.0, 1.0), seed=0, ndim: int | None = None, **opts) -> InnerResult:
    """Multi-start local search from ``n_starts`` uniform points in the box."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    d = ndim if ndim is not None else objective.ndim
    lo, hi = _box(box, d)
    starts = lo + (hi - lo) * stream(seed).random((n_starts, d))
    return multistart(objective, starts, box=(lo, hi), **opts)


def _values(objective):
    if hasattr(objective, "value"):
        return objective.value
    if hasattr(objective, "value_and_grad"):
        return lambda X: objective.value_and_grad(X)[0]

    def f(X):
        out = objective(X)
        return out[0] if isinstance(out, tuple) else out

    return f


def genetic_minimize(
    objective,
    pop_size: int,
    box=(-1.0, 1.0),
    seed=0,
    budget: int = 200,
    ndim: int | None = None,
    init=None,
    tournament: int = 3,
    crossover_rate: float = 0.9,
    blend_alpha: float = 0.5,
    mutation_rate: float | None = None,
    mutation_scale: float = 0.1,
    stall_generations: int = 20,
    stall_tol: float = 1e-8,
) -> InnerResult:
    """Generational real-coded GA with one elite.

    Tournament selection, BLX-alpha crossover and Gaussian mutation with
    standard deviation ``mutation_scale`` times the box width. Stops after
    ``budget`` generations or once the best value has not improved by more
    than ``stall_tol`` for ``stall_generations`` generations.
    """
    if pop_size < 4:
        raise ValueError("pop_size must be at least 4")
    f = _values(objective)
    d = ndim if ndim is not None else (np.asarray(init).shape[1] if init is not None else objective.ndim)
    lo, hi = _box(box, d)
    width = hi - lo
    rate = 1.0 / d if mutation_rate is None else mutation_rate
    rng = stream(seed)
    t0 = time.perf_counter()

    pop = lo + width * rng.random((pop_size, d)) if init is None else np.array(init, dtype=float)
    fit = np.asarray(f(pop), dtype=float)
    fit = np.where(np.isfinite(fit), fit, np.inf)
    n_evals = pop_size
    best = int(np.argmin(fit))
    best_x, best_f = pop[best].copy(), float(fit[best])
    stall = 0
    for _ in range(budget):
        contenders = rng.integers(0, pop_size, size=(2, pop_size, tournament))
        winners = np.take_along_axis(contenders, np.argmin(fit[contenders], axis=2)[..., None], axis=2)[..., 0]
        p1, p2 = pop[winners[0]], pop[winners[1]]
        spread = np.abs(p1 - p2)
        low = np.minimum(p1, p2) - blend_alpha * spread
        blend = low + (spread * (1.0 + 2.0 * blend_alpha)) * rng.random((pop_size, d))
        cross = rng.random(pop_size) < crossover_rate
        child = np.where(cross[:, None], blend, p1)
        mutate = rng.random((pop_size, d)) < rate
        child = child + mutate * rng.normal(0.0, mutation_scale, (pop_size, d)) * width
        child = np.clip(child, lo, hi)
        child[0] = best_x
        cfit = np.asarray(f(child[1:]), dtype=float)
        n_evals += pop_size - 1
        pop = child
        fit = np.concatenate([[best_f], np.where(np.isfinite(cfit), cfit, np.inf)])
        i = int(np.argmin(fit))
        if best_f - fit[i] > stall_tol:
            stall = 0
        else:
            stall += 1
        if fit[i] < best_f:
            best_x, best_f = pop[i].copy(), float(fit[i])
        if stall >= stall_generations:
            break
    if not np.isfinite(best_f):
        raise InnerLoopError("genetic algorithm found no finite objective value")
    return InnerResult(best_x, best_f, pop_size, (), time.perf_counter() - t0, n_evals)


def _ei_terms(mu, var, y_min):
    s = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(s > 1e-12, (y_min - mu) / s, 0.0)
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    cdf = ndtr(z)
    val = np.where(s > 1e-12, (y_min - mu) * cdf + s * pdf, np.maximum(0.0, y_min - mu))
    return s, cdf, pdf, np.maximum(val, 0.0)


def ei(gp: GPPosterior, x, y_min: float):
    """Expected improvement below ``y_min`` (maximize it)."""
    x = np.asarray(x, dtype=float)
    _, _, _, val = _ei_terms(gp.mean(x), gp.var(x), y_min)
    return float(val[0]) if x.ndim <= 1 else val


def lcb(gp: GPPosterior, x, beta: float = 4.0):
    """``mu - sqrt(beta) * sigma`` (minimize it)."""
    x = np.asarray(x, dtype=float)
    val = gp.mean(x) - math.sqrt(beta) * np.sqrt(gp.var(x))
    return float(val[0]) if x.ndim <= 1 else val


@dataclass(frozen=True)
class NegativeEI:
    """``-EI`` with gradient, for minimization by the multi-start optimizer."""

    gp: GPPosterior
    y_min: float

    @property
    def ndim(self) -> int:
        return self.gp.params.ndim

    def value(self, X):
        return -_ei_terms(self.gp.mean(X), self.gp.var(X), self.y_min)[3]

    def value_and_grad(self, X):
        mu, var, dmu, dvar = self.gp.mean_var_grad(X)
        s, cdf, pdf, val = _ei_terms(mu, var, self.y_min)
        pos = s > 1e-12
        ds = np.where(pos[:, None], dvar / (2.0 * np.where(pos, s, 1.0))[:, None], 0.0)
        grad = np.where(
            pos[:, None],
            -cdf[:, None] * dmu + pdf[:, None] * ds,
            -(self.y_min > mu).astype(float)[:, None] * dmu,
        )
        return -val, -grad


@dataclass(frozen=True)
class LowerConfidenceBound:
    gp: GPPosterior
    beta: float = 4.0

    @property
    def ndim(self) -> int:
        return self.gp.params.ndim

    def value(self, X):
        return self.gp.mean(X) - math.sqrt(self.beta) * np.sqrt(self.gp.var(X))

    def value_and_grad(self, X):
        mu, var, dmu, dvar = self.gp.mean_var_grad(X)
        s = np.sqrt(var)
        pos = s > 1e-12
        ds = np.where(pos[:, None], dvar / (2.0 * np.where(pos, s, 1.0))[:, None], 0.0)
        return mu - math.sqrt(self.beta) * s, dmu - math.sqrt(self.beta) * ds


@dataclass(frozen=True)
class RFFSample:
    """``f(x) = sqrt(2 amplitude / M) * sum_m beta_m cos(omega_m . x + phase_m)``."""

    omega: np.ndarray
    phase: np.ndarray
    beta: np.ndarray
    amplitude: float

    @property
    def ndim(self) -> int:
        return self.omega.shape[1]

    @property
    def n_features(self) -> int:
        return self.omega.shape[0]

    def features(self, X) -> np.ndarray:
        return rff_features(self.omega, self.phase, self.amplitude, X)

    def value(self, X):
        return self.features(X) @ self.beta

    def value_and_grad(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        arg = X @ self.omega.T + self.phase
        c = math.sqrt(2.0 * self.amplitude / self.n_features)
        val = c * np.cos(arg) @ self.beta
        grad = -c * (np.sin(arg) * self.beta) @ self.omega
        return val, grad

    __call__ = value


def rff_features(omega, phase, amplitude: float, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return math.sqrt(2.0 * amplitude / omega.shape[0]) * np.cos(X @ omega.T + phase)


def ts_rf_draw(gp: GPPosterior, M: int = 1000, seed=0) -> RFFSample:
    """Posterior TS-RF sample: Bayesian linear regression on ``M`` random features.

    The weight posterior is sampled exactly by updating a prior weight draw
    with the data (weight-space Matheron update), which needs only an
    ``N x N`` factorization even when ``M`` is large.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    params = gp.params
    rng = stream(seed)
    omega = rng.standard_normal((M, params.ndim)) / params.lengthscales
    phase = rng.uniform(0.0, 2.0 * math.pi, M)
    beta = rng.standard_normal(M)
    if gp.n:
        Phi = rff_features(omega, phase, params.amplitude, gp.X)
        eps = math.sqrt(params.noise_variance) * rng.standard_normal(gp.n)
        L, _ = robust_cholesky(Phi @ Phi.T + params.noise_variance * np.eye(gp.n), "feature Gram")
        beta = beta + Phi.T @ linalg.cho_solve((L, True), gp.y - Phi @ beta - eps)
    for arr in (omega, phase, beta):
        arr.setflags(write=False)
    return RFFSample(omega, phase, beta, params.amplitude)


def ts_rf_eval(sample: RFFSample, x):
    x = np.asarray(x, dtype=float)
    out = sample.value(x)
    return float(out[0]) if x.ndim <= 1 else out


def ts_rf_grad(sample: RFFSample, x):
    return sample.value_and_grad(x)[1][0]
