import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_gp
from tsopt.baselines import random_multistart
from tsopt.critical import select_minima
from tsopt.inner import (
    InnerLoopError,
    StartSet,
    distance_to_truth,
    local_minimize,
    minimize_batch,
    multistart,
    optimize_ts,
)
from tsopt.sampling import PosteriorSample, condition, draw_prior, tabulate
from tsopt.spectral import SEKernelParams, build_basis


def quadratic(X):
    return np.sum(X * X, axis=1), 2 * X


def linear(X):
    return X.sum(axis=1), np.ones_like(X)


def rosenbrock(X):
    x, y = X[:, 0], X[:, 1]
    f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
    g = np.stack([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)], axis=1)
    return f, g


def ts_problem(seed, n=20, ls=(0.2, 0.25)):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    y = np.sin(4 * X[:, 0]) * np.cos(3 * X[:, 1])
    y = (y - y.mean()) / y.std()
    gp = make_gp(X, y, ls)
    prior = draw_prior(build_basis(gp.params), ("ts", seed))
    return prior, gp, condition(prior, gp, ("eps", seed)), X


class TestLocal:
    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_quadratic(self, start):
        x, v, ok = local_minimize(quadratic, start)
        assert ok and np.all(np.abs(x) <= 1e-6)

    def test_linear_goes_to_corner(self):
        x, v, _ = local_minimize(linear, [0.3, -0.2])
        assert np.allclose(x, [-1, -1])

    def test_stationary_start(self):
        res = minimize_batch(quadratic, np.zeros((1, 2)))
        assert res.iterations[0] <= 2 and np.allclose(res.x[0], 0, atol=1e-8)

    def test_rosenbrock(self):
        x, v, _ = local_minimize(rosenbrock, [-0.5, 0.8], max_iter=500)
        assert np.allclose(x, [1, 1], atol=1e-5)

    @given(st.integers(0, 2**31))
    def test_descent_monotone(self, seed):
        prior, gp, ps, _ = ts_problem(seed % 50)
        X0 = np.random.default_rng(seed).uniform(-1, 1, (16, 2))
        res = minimize_batch(ps, X0)
        assert np.all(res.value <= res.start_value + 1e-12)
        assert np.all(np.abs(res.x) <= 1)

    def test_non_finite_start(self):
        with pytest.raises(InnerLoopError):
            local_minimize(lambda X: (np.full(len(X), np.nan), np.zeros_like(X)), [0.0])


class TestMultistart:
    def test_start_set_checks_box(self):
        with pytest.raises(ValueError):
            StartSet(np.array([[1.5, 0.0]]), np.zeros((0, 2)))

    def test_order_invariant(self):
        prior, gp, ps, X = ts_problem(1)
        starts = StartSet(select_minima(prior).points, X)
        a = optimize_ts(ps, starts)
        perm = np.random.default_rng(0).permutation(len(starts))
        b = multistart(ps, starts.points()[perm])
        # batched BLAS kernels may round differently per row position
        assert a.value == pytest.approx(b.value, abs=1e-12)
        assert np.allclose(a.x, b.x, atol=1e-8)

    def test_prior_only_descends_from_minima(self):
        prior, gp, _, X = ts_problem(2)
        ps = PosteriorSample(prior, gp.params, X, np.zeros(len(X)), np.zeros(len(X)))
        minima = select_minima(prior)
        res = optimize_ts(ps, StartSet(minima.points, np.zeros((0, 2))))
        assert res.value <= minima.values.min() + 1e-9

    def test_empty_exploitation(self):
        prior, gp, ps, _ = ts_problem(3)
        e = select_minima(prior).points
        a = optimize_ts(ps, StartSet(e, np.zeros((0, 2))))
        b = multistart(ps, e)
        assert np.array_equal(a.x, b.x)

    def test_beats_heavy_random(self):
        wins = 0
        for seed in range(20):
            prior, gp, ps, X = ts_problem(seed)
            fast = tabulate(ps)
            starts = StartSet(select_minima(prior).points, X)
            ours = optimize_ts(fast, starts)
            oracle = random_multistart(fast, 100 * len(starts), seed=("oracle", seed), ndim=2)
            wins += ours.value <= oracle.value + 1e-9
        assert wins >= 19

    def test_coverage_vs_equal_random(self):
        wins = 0
        for seed in range(20):
            prior, gp, ps, X = ts_problem(seed)
            fast = tabulate(ps)
            starts = StartSet(select_minima(prior).points, X)
            ours = optimize_ts(fast, starts)
            rand = random_multistart(fast, len(starts), seed=("rand", seed), ndim=2)
            wins += ours.value <= rand.value + 1e-9
        assert wins >= 16


def test_distance_to_truth():
    assert distance_to_truth([0.3], [-0.1]) == pytest.approx(0.4)
    assert distance_to_truth([0.2, 0.1], [0.2, 0.1]) == 0.0
    assert distance_to_truth([0.5, 0.5], [0.0, 0.0]) > distance_to_truth([0.25, 0.5], [0.0, 0.0])
