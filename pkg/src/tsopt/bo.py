"""Outer Bayesian-optimization loop and its per-iteration trace."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .baselines import LowerConfidenceBound, NegativeEI, genetic_minimize, random_multistart, ts_rf_draw
from .critical import select_minima
from .gp import Dataset, fit_hyperparameters, fit_posterior, normalize, unnormalize
from .inner import InnerLoopError, StartSet, optimize_ts
from .objectives import Objective, make_objective
from .rng import stream
from .sampling import condition, draw_prior, tabulate
from .spectral import build_basis

log = logging.getLogger(__name__)

METHODS = ("spectral-ts", "ts-rf", "ei", "lcb")
INNER = ("ours", "random", "ga")
REGRET_FLOOR = 1e-12


@dataclass
class BOConfig:
    objective: str = "schwefel"
    dim: int = 2
    n_init: int | None = None
    iterations: int = 120
    method: str = "spectral-ts"
    inner: str = "ours"
    seed: int = 0
    obs_noise: float = 0.0
    model_noise: float = 1e-12
    m_max: int = 1000
    eta: float = 1e-16
    measure_scale: float = 1.0
    beta: float = 4.0
    rff_m: int = 1000
    freeze_hypers: bool = False
    ga_budget: int = 200
    log_base: float = 10.0

    def __post_init__(self):
        if self.n_init is None:
            self.n_init = 10 * self.dim
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; valid methods: {', '.join(METHODS)}")
        if self.inner not in INNER:
            raise ValueError(f"unknown inner optimizer {self.inner!r}; valid: {', '.join(INNER)}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.n_init < self.dim + 1:
            raise ValueError(f"initial design needs at least d + 1 = {self.dim + 1} points")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.m_max < 1 or self.rff_m < 1:
            raise ValueError("m_max and rff_m must be positive")
        if self.beta < 0 or self.model_noise <= 0 or self.obs_noise < 0:
            raise ValueError("beta and obs_noise must be >= 0, model_noise > 0")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    x_star: tuple[float, ...]
    y: float
    y_min: float
    inner_value: float
    inner_time: float
    cum_time: float
    log_regret: float


@dataclass
class BOTrace:
    config: BOConfig
    X: np.ndarray
    y: np.ndarray
    rows: list[TraceRow] = field(default_factory=list)

    @property
    def y_min(self) -> float:
        return float(np.min(self.y))

    def regrets(self) -> np.ndarray:
        return np.array([r.log_regret for r in self.rows])


def initial_design(bounds, n: int, seed=0) -> np.ndarray:
    """Scrambled Halton points mapped to ``bounds``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    sampler = qmc.Halton(bounds.shape[0], scramble=True, seed=stream(seed, "design"))
    return qmc.scale(sampler.random(n), bounds[:, 0], bounds[:, 1])


def simple_regret(y_min: float, f_star: float, base: float = 10.0) -> float:
    """``log_base(y_min - f_star)``; ``-inf`` once the gap is at most 1e-12."""
    gap = y_min - f_star
    if gap <= REGRET_FLOOR:
        return -math.inf
    return math.log(gap) / math.log(base)


def _start_count(prior, dataset: Dataset, m_max: int) -> int:
    """``|S_e| + |S_p|`` for this iteration's prior sample."""
    return len(select_minima(prior, m_max)) + dataset.n


def propose(config: BOConfig, dataset: Dataset, gp, k: int):
    """One acquisition step; returns ``(x_normalized, acquisition_value, inner_seconds)``."""
    seed = config.seed
    params = gp.params
    basis = build_basis(params, config.measure_scale, config.eta)
    prior = draw_prior(basis, (seed, k, "prior"), params.amplitude)

    if config.method == "spectral-ts":
        exact = condition(prior, gp, (seed, k, "noise"))
        t0 = time.perf_counter()
        acq = tabulate(exact)
        if config.inner == "ours":
            minima = select_minima(prior, config.m_max).points
            res = optimize_ts(acq, StartSet(minima, dataset.X))
            seconds = time.perf_counter() - t0
            return res.x, float(exact.value(res.x)[0]), seconds
        n_starts = _start_count(prior, dataset, config.m_max)
        t0 = time.perf_counter()
        acq = tabulate(exact)
    else:
        # baselines get as many starts as our method would use at this iteration
        n_starts = _start_count(prior, dataset, config.m_max)
        if config.method == "ts-rf":
            acq = ts_rf_draw(gp, config.rff_m, (seed, k, "rff"))
        elif config.method == "ei":
            acq = NegativeEI(gp, float(np.min(dataset.y)))
        else:
            acq = LowerConfidenceBound(gp, config.beta)
        t0 = time.perf_counter()
    if config.inner == "ga":
        res = genetic_minimize(acq, max(n_starts, 4), seed=(seed, k, "ga"), budget=config.ga_budget, ndim=config.dim)
    else:
        res = random_multistart(acq, n_starts, seed=(seed, k, "starts"), ndim=config.dim)
    seconds = time.perf_counter() - t0
    if config.method == "spectral-ts":
        return res.x, float(exact.value(res.x)[0]), seconds
    return res.x, res.value, seconds


def _fallback(config: BOConfig, dataset: Dataset, gp, k: int):
    log.warning("inner loop failed at iteration %d; retrying with doubled random starts", k)
    t0 = time.perf_counter()
    try:
        params = gp.params
        prior = draw_prior(build_basis(params, config.measure_scale, config.eta), (config.seed, k, "prior"), params.amplitude)
        acq = condition(prior, gp, (config.seed, k, "noise"))
        n = 2 * _start_count(prior, dataset, config.m_max)
        res = random_multistart(tabulate(acq), n, seed=(config.seed, k, "retry"), ndim=config.dim)
        return res.x, res.value, time.perf_counter() - t0
    except (InnerLoopError, np.linalg.LinAlgError, ValueError) as err:
        log.error("retry failed at iteration %d (%s); using a uniform random candidate", k, err)
        x = stream(config.seed, k, "fallback").uniform(-1.0, 1.0, config.dim)
        return x, math.nan, time.perf_counter() - t0


def run_bo(config: BOConfig, objective: Objective | None = None) -> BOTrace:
    """Run the full loop; deterministic given ``config.seed``."""
    obj = objective if objective is not None else make_objective(config.objective, config.dim)
    bounds = obj.bounds
    noise_rng = stream(config.seed, "observation")

    def observe(x):
        y = obj(x)
        if config.obs_noise > 0:
            y += math.sqrt(config.obs_noise) * noise_rng.standard_normal()
        return y

    X = initial_design(bounds, config.n_init, config.seed)
    y = np.array([observe(x) for x in X])
    trace = BOTrace(config, X, y)
    best = int(np.argmin(y))
    trace.rows.append(TraceRow(0, tuple(X[best]), float(y[best]), float(y[best]), math.nan, 0.0, 0.0,
                               simple_regret(float(y[best]), obj.f_star, config.log_base)))

    params = None
    cum = 0.0
    for k in range(1, config.iterations + 1):
        dataset = Dataset.from_raw(X, y, bounds)
        if params is None or not config.freeze_hypers:
            params = fit_hyperparameters(dataset, config.model_noise, seed=config.seed)
        gp = fit_posterior(dataset, params)
        try:
            x_norm, value, seconds = propose(config, dataset, gp, k)
        except (InnerLoopError, np.linalg.LinAlgError) as err:
            log.warning("iteration %d: %s", k, err)
            x_norm, value, seconds = _fallback(config, dataset, gp, k)
        cum += seconds
        x_raw = np.clip(unnormalize(x_norm, bounds), bounds[:, 0], bounds[:, 1])
        y_new = observe(x_raw)
        X = np.vstack([X, x_raw])
        y = np.append(y, y_new)
        y_min = float(np.min(y))
        trace.rows.append(TraceRow(k, tuple(x_raw), float(y_new), y_min, float(value), seconds, cum,
                                   simple_regret(y_min, obj.f_star, config.log_base)))
        log.debug("iter %d y=%.6g y_min=%.6g", k, y_new, y_min)
    trace.X, trace.y = X, y
    return trace


def config_dict(config: BOConfig) -> dict:
    return asdict(config)


__all__ = [
    "METHODS",
    "INNER",
    "BOConfig",
    "TraceRow",
    "BOTrace",
    "initial_design",
    "simple_regret",
    "propose",
    "run_bo",
    "normalize",
    "config_dict",
]
