import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsopt.rootfinding import all_roots, build_proxy, colleague_matrix, critical_points_1d
from tsopt.sampling import draw_prior, prior_from_weights
from tsopt.spectral import SEKernelParams, build_basis


def sign_change_roots(f, lo=-1.0, hi=1.0, n=10_000):
    x = np.linspace(lo, hi, n)
    v = f(x)
    idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    return 0.5 * (x[idx] + x[idx + 1]), x[1] - x[0]


def derivative_problem(seed, l):
    b = build_basis(SEKernelParams([l]))
    f = draw_prior(b, ("roots", seed))
    return f, lambda x: f.univariate(0, x, 1)


class TestProxy:
    def test_cubic_coefficients(self):
        p = build_proxy(lambda x: x**3)
        assert p.degree == 3
        assert np.allclose(p.coefs, [0, 0.75, 0, 0.25], atol=1e-14)

    def test_constant(self):
        p = build_proxy(lambda x: np.full_like(x, 2.5))
        assert p.degree == 0 and p.tail_bound == 0.0

    def test_oscillatory(self):
        p = build_proxy(lambda x: np.sin(50 * x))
        assert p.degree <= 128 and not p.children

    @given(st.integers(0, 2**31), st.sampled_from([0.2, 0.5, 1.0]))
    def test_fidelity(self, seed, l):
        f, df = derivative_problem(seed, l)
        p = build_proxy(df)
        assert p.tail_bound <= 1e-13
        probe = np.random.default_rng(seed).uniform(-1, 1, 17)
        assert np.max(np.abs(p(probe) - df(probe))) <= 1e-10 * (1 + np.abs(df(np.linspace(-1, 1, 2001))).max())

    def test_non_finite_reported(self):
        with pytest.raises(ValueError, match="not finite"), np.errstate(divide="ignore"):
            build_proxy(lambda x: 1.0 / x)

    def test_colleague_eigenvalues(self):
        # T_2 roots
        eig = np.sort(np.linalg.eigvals(colleague_matrix(np.array([0.0, 0.0, 1.0]))).real)
        assert np.allclose(eig, [-math.sqrt(0.5), math.sqrt(0.5)])


class TestRoots:
    def test_cubic(self):
        r = all_roots(build_proxy(lambda x: x**3 - x, (-2.0, 2.0)))
        assert np.allclose(r, [-1, 0, 1], atol=1e-12)

    def test_cosine(self):
        r = all_roots(build_proxy(lambda x: np.cos(5 * x), (0.0, math.pi)))
        assert np.allclose(r, np.pi * np.array([1, 3, 5, 7, 9]) / 10, atol=1e-10)

    def test_no_roots(self):
        assert all_roots(build_proxy(lambda x: x**2 + 1)).size == 0

    def test_sorted_unique(self):
        r = all_roots(build_proxy(lambda x: np.sin(30 * x)))
        assert np.all(np.diff(r) > 0)
        assert r.size == 19

    @pytest.mark.parametrize("l", [0.2, 0.5, 1.0])
    def test_complete_and_sound(self, l):
        for seed in range(10):
            _, df = derivative_problem(seed, l)
            roots = all_roots(build_proxy(df))
            grid, h = sign_change_roots(df)
            for g in grid:
                # the bracketing grid cell must hold a reported root
                assert np.any(np.abs(roots - g) <= 0.5 * h + 1e-6)
            scale = 1 + np.abs(df(np.linspace(-1, 1, 10_001))).max()
            assert np.all(np.abs(df(roots)) <= 1e-8 * scale)


class TestCritical1d:
    def test_single_bump(self):
        b = build_basis(SEKernelParams([0.5]))
        w = np.zeros(b.sizes[0])
        w[0] = 1.0
        pts = critical_points_1d(prior_from_weights(b, [w]), 0)
        assert [c.bound for c in pts] == [-1, 0, 1]
        assert np.allclose([c.x for c in pts], [-1, 0, 1], atol=1e-12)

    def test_monotone_factor(self):
        b = build_basis(SEKernelParams([3.0]))
        w = np.zeros(b.sizes[0])
        w[1] = 1.0  # phi_1 is monotone on [-1, 1] for a wide kernel
        pts = critical_points_1d(prior_from_weights(b, [w]), 0)
        assert [c.bound for c in pts] == [-1, 1]

    def test_counts_match_grid(self):
        for seed in range(20):
            f, df = derivative_problem(seed, 0.3)
            pts = critical_points_1d(f, 0)
            grid, _ = sign_change_roots(df)
            assert sum(c.bound == 0 for c in pts) == grid.size
            for c in pts:
                assert c.value == pytest.approx(f.univariate(0, c.x, 0), rel=1e-12, abs=1e-14)
