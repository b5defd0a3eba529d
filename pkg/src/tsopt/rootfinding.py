"""Global real rootfinding on an interval via Chebyshev proxies.

A smooth function is interpolated at Chebyshev extreme points with adaptively
doubled degree until its trailing coefficients sit at machine-precision level.
The roots of the proxy are the eigenvalues of its colleague matrix; proxies of
high degree are split first so each eigenproblem stays small.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import linalg, optimize
from scipy.fft import dct

__all__ = [
    "ChebProxy",
    "UnivariateCritical",
    "build_proxy",
    "colleague_matrix",
    "all_roots",
    "critical_points_1d",
]

MIN_DEGREE = 16
MAX_DEGREE = 2**13
TAIL_TOL = 1e-13
SPLIT_DEGREE = 100
# off-centre split point (in [-1, 1] coordinates) avoids landing on symmetric roots
SPLIT_AT = -0.004849834917525


@dataclass(frozen=True)
class ChebProxy:
    lo: float
    hi: float
    coefs: np.ndarray
    tail_bound: float
    vscale: float
    children: tuple[ChebProxy, ...] = field(default=())

    @property
    def degree(self) -> int:
        if self.children:
            return max(c.degree for c in self.children)
        return self.coefs.size - 1

    def _to_unit(self, x):
        return (2.0 * np.asarray(x, dtype=float) - (self.lo + self.hi)) / (self.hi - self.lo)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not self.children:
            return C.chebval(self._to_unit(x), self.coefs)
        out = np.empty(x.shape)
        for i, child in enumerate(self.children):
            last = i == len(self.children) - 1
            mask = (x >= child.lo) & ((x <= child.hi) if last else (x < child.hi))
            if i == 0:
                mask |= x < child.lo
            if last:
                mask |= x > child.hi
            out[mask] = child(x[mask])
        return out

    def deriv(self) -> ChebProxy:
        if self.children:
            return ChebProxy(self.lo, self.hi, np.zeros(1), 0.0, self.vscale, tuple(c.deriv() for c in self.children))
        dc = C.chebder(self.coefs) * (2.0 / (self.hi - self.lo)) if self.coefs.size > 1 else np.zeros(1)
        return ChebProxy(self.lo, self.hi, dc, 0.0, float(np.max(np.abs(dc))))


@dataclass(frozen=True)
class UnivariateCritical:
    """A critical point (or interval endpoint) of one separable factor.

    ``bound`` is -1 at the lower end of the interval, +1 at the upper end and
    0 for interior roots of the derivative.
    """

    x: float
    value: float
    deriv: float
    second: float
    bound: int = 0


def _cheb_points(n: int, lo: float, hi: float) -> np.ndarray:
    # extreme points cos(pi j / n), j = 0..n, in increasing order
    t = np.sin(np.pi * np.arange(-n, n + 1, 2) / (2 * n))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * t


def _coeffs_from_values(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through values at increasing extreme points."""
    n = values.size - 1
    if n == 0:
        return values.copy()
    c = dct(values[::-1], type=1) / n
    c[0] *= 0.5
    c[-1] *= 0.5
    return c


def _sample(func, x: np.ndarray) -> np.ndarray:
    v = np.asarray(func(x), dtype=float)
    if v.shape != x.shape:
        v = np.broadcast_to(v, x.shape).astype(float)
    bad = ~np.isfinite(v)
    if np.any(bad):
        raise ValueError(f"function is not finite at x = {x[bad][0]!r}")
    return v


def build_proxy(
    func,
    interval=(-1.0, 1.0),
    min_degree: int = MIN_DEGREE,
    max_degree: int = MAX_DEGREE,
    tol: float = TAIL_TOL,
    _depth: int = 0,
) -> ChebProxy:
    """Adaptive Chebyshev interpolant of a vectorized ``func`` on ``interval``.

    The degree doubles from ``min_degree`` until the trailing coefficients fall
    below ``tol`` relative to the largest one; the accepted series is then
    chopped at that level. If ``max_degree`` is not enough the interval is
    bisected and each half resolved separately.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    n = min_degree
    while True:
        x = _cheb_points(n, lo, hi)
        v = _sample(func, x)
        vscale = float(np.max(np.abs(v)))
        if np.ptp(v) == 0.0:
            return ChebProxy(lo, hi, np.array([v[0]]), 0.0, vscale)
        c = _coeffs_from_values(v)
        cmax = np.max(np.abs(c))
        m = max(4, (n + 1) // 8)
        if np.max(np.abs(c[-m:])) <= tol * cmax:
            keep = np.nonzero(np.abs(c) > tol * cmax)[0]
            last = int(keep[-1]) if keep.size else 0
            tail = float(np.max(np.abs(c[last + 1 :])) / cmax) if last + 1 < c.size else 0.0
            return ChebProxy(lo, hi, c[: last + 1].copy(), tail, vscale)
        if n >= max_degree:
            break
        n *= 2
    if _depth > 40:
        raise RuntimeError(f"function could not be resolved on [{lo}, {hi}]")
    mid = 0.5 * (lo + hi)
    left = build_proxy(func, (lo, mid), min_degree, max_degree, tol, _depth + 1)
    right = build_proxy(func, (mid, hi), min_degree, max_degree, tol, _depth + 1)
    return ChebProxy(lo, hi, np.zeros(1), max(left.tail_bound, right.tail_bound),
                     max(left.vscale, right.vscale), (left, right))


def colleague_matrix(coefs: np.ndarray) -> np.ndarray:
    """Matrix whose eigenvalues are the roots of ``sum_k coefs[k] T_k``."""
    c = np.asarray(coefs, dtype=float)
    n = c.size - 1
    if n < 1:
        raise ValueError("need degree >= 1")
    M = np.zeros((n, n))
    if n == 1:
        M[0, 0] = -c[0] / c[1]
        return M
    M[0, 1] = 1.0
    idx = np.arange(1, n - 1)
    M[idx, idx - 1] = 0.5
    M[idx, idx + 1] = 0.5
    M[n - 1, n - 2] = 0.5
    M[n - 1, :] -= c[:n] / (2.0 * c[n])
    return M


def _newton_polish(proxy: ChebProxy, dproxy: ChebProxy, r: np.ndarray, steps: int = 5) -> np.ndarray:
    r = r.copy()
    fr = proxy(r)
    for _ in range(steps):
        d = dproxy(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.clip(r - fr / d, proxy.lo, proxy.hi)
        fc = proxy(cand)
        better = np.isfinite(cand) & (np.abs(fc) < np.abs(fr))
        if not np.any(better):
            break
        r = np.where(better, cand, r)
        fr = np.where(better, fc, fr)
    return r


def _bracketing_roots(proxy: ChebProxy) -> np.ndarray:
    n = max(64, 20 * (proxy.coefs.size + 1))
    x = np.linspace(proxy.lo, proxy.hi, n)
    v = proxy(x)
    roots = list(x[v == 0.0])
    f = lambda s: float(proxy(np.array(s)))  # noqa: E731
    for i in np.nonzero(v[:-1] * v[1:] < 0)[0]:
        roots.append(optimize.brentq(f, x[i], x[i + 1], xtol=1e-12))
    return np.array(roots)


def _dedupe(roots: np.ndarray, tol: float) -> np.ndarray:
    if roots.size == 0:
        return roots
    roots = np.sort(roots)
    keep = [roots[0]]
    for r in roots[1:]:
        if r - keep[-1] > tol:
            keep.append(r)
    return np.array(keep)


def _restrict(proxy: ChebProxy, a: float, b: float) -> ChebProxy:
    """Exact re-expansion of a single-piece proxy on ``[a, b]``, chopped at rounding level."""
    n = proxy.coefs.size - 1
    c = _coeffs_from_values(proxy(_cheb_points(n, a, b)))
    floor = 1e-15 * np.max(np.abs(proxy.coefs))
    keep = np.nonzero(np.abs(c) > floor)[0]
    c = c[: int(keep[-1]) + 1] if keep.size else np.zeros(1)
    return ChebProxy(a, b, c, 0.0, proxy.vscale)


def _piece_roots(proxy: ChebProxy, vscale: float) -> np.ndarray:
    lo, hi = proxy.lo, proxy.hi
    c = proxy.coefs
    if c.size <= 1:
        return np.zeros(0)
    if c.size - 1 > SPLIT_DEGREE and (hi - lo) > 1e-6:
        split = 0.5 * (lo + hi) + 0.5 * (hi - lo) * SPLIT_AT
        left, right = _restrict(proxy, lo, split), _restrict(proxy, split, hi)
        return np.concatenate([_piece_roots(left, vscale), _piece_roots(right, vscale)])
    try:
        eig = linalg.eigvals(colleague_matrix(c))
    except (linalg.LinAlgError, ValueError):
        return _bracketing_roots(proxy)
    if not np.all(np.isfinite(eig)):
        return _bracketing_roots(proxy)
    slack = 1e-10 * 2.0 / (hi - lo)
    ok = (np.abs(eig.imag) <= 1e-6) & (np.abs(eig.real) <= 1.0 + slack)
    t = np.clip(eig.real[ok], -1.0, 1.0)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * t


def all_roots(proxy: ChebProxy, residual_tol: float = 1e-9) -> np.ndarray:
    """Sorted real roots of the proxy on its interval.

    Candidates are polished by up to five Newton steps on the proxy and kept
    if ``|p(r)| <= residual_tol * (1 + vscale)``; tangential roots pass this
    test without a sign change.
    """
    leaves = _leaves(proxy)
    cands = [_piece_roots(leaf, proxy.vscale) for leaf in leaves]
    r = np.concatenate(cands) if cands else np.zeros(0)
    if r.size == 0:
        return r
    r = _newton_polish(proxy, proxy.deriv(), r)
    r = r[np.abs(proxy(r)) <= residual_tol * (1.0 + proxy.vscale)]
    return _dedupe(r, 1e-9 * (proxy.hi - proxy.lo))


def _leaves(proxy: ChebProxy) -> list[ChebProxy]:
    if not proxy.children:
        return [proxy]
    return [leaf for child in proxy.children for leaf in _leaves(child)]


def critical_points_1d(sample, dim: int, interval=(-1.0, 1.0)) -> list[UnivariateCritical]:
    """Interior roots of ``f_dim'`` plus both interval endpoints, with cached values.

    ``sample`` needs a ``univariate(dim, x, order)`` method (see ``PriorSample``).
    """
    lo, hi = float(interval[0]), float(interval[1])
    proxy = build_proxy(lambda x: sample.univariate(dim, x, 1), (lo, hi))
    roots = all_roots(proxy)
    edge = 1e-9 * (hi - lo)
    roots = roots[(roots > lo + edge) & (roots < hi - edge)]
    xs = np.concatenate([[lo], roots, [hi]])
    f0 = sample.univariate(dim, xs, 0)
    f1 = sample.univariate(dim, xs, 1)
    f2 = sample.univariate(dim, xs, 2)
    bound = np.zeros(xs.size, dtype=int)
    bound[0], bound[-1] = -1, 1
    return [UnivariateCritical(float(x), float(a), float(b), float(c), int(s))
            for x, a, b, c, s in zip(xs, f0, f1, f2, bound)]
