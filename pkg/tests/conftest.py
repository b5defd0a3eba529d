import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tsopt.gp import Dataset, fit_posterior
from tsopt.spectral import SEKernelParams

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def unit_dataset(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return Dataset(X, np.asarray(y, dtype=float), np.tile([-1.0, 1.0], (X.shape[1], 1)))


def make_gp(X, y, lengthscales, amplitude=1.0, noise=1e-6):
    params = SEKernelParams(np.atleast_1d(lengthscales), amplitude, noise)
    return fit_posterior(unit_dataset(X, y), params)


def central_diff(f, x, h=1e-6):
    """Central-difference gradient of scalar ``f`` at 1-d point ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
