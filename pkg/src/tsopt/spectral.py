"""Mercer spectrum of the squared-exponential kernel under a Gaussian measure.

For the univariate SE kernel ``exp(-(x - x')**2 / (2 l**2))`` and the measure
``N(0, sigma**2)`` the eigenpairs are known in closed form::

    a = 1 / (2 sigma**2)     b = 1 / (2 l**2)
    c = sqrt(a**2 + 4 a b)   A = a/2 + b + c/2
    lambda_k = sqrt(a / A) * (b / A)**k
    phi_k(x) = (pi c / a)**(1/4) * psi_k(sqrt(c) x) * exp(a x**2 / 2)

with ``psi_k`` the normalized Hermite function. The multivariate kernel is the
product of the univariate ones, scaled by the amplitude.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SEKernelParams",
    "DimensionSpectrum",
    "SpectralBasis",
    "se_constants",
    "truncation_size",
    "build_basis",
    "hermite_functions",
    "eigenfunction_matrix",
    "eigenfunction",
    "eigenfunction_deriv",
    "eigenfunction_second_deriv",
    "series_eval",
    "kernel_value",
    "kernel_grad_x",
    "kernel_matrix",
    "mercer_kernel_matrix",
    "mercer_reconstruction_error",
]

MAX_BASIS_SIZE = 512


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SEKernelParams:
    """ARD squared-exponential kernel hyperparameters.

    ``amplitude`` is the output variance (sigma_f**2), not its square root.
    """

    lengthscales: np.ndarray
    amplitude: float = 1.0
    noise_variance: float = 1e-6

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size == 0:
            raise ValueError("lengthscales must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ValueError(f"lengthscales must be positive, got {ls}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if not self.noise_variance > 0:
            raise ValueError(f"noise_variance must be positive, got {self.noise_variance}")
        object.__setattr__(self, "lengthscales", _frozen(ls))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def ndim(self) -> int:
        return self.lengthscales.size


def se_constants(lengthscale: float, measure_scale: float = 1.0) -> tuple[float, float, float, float]:
    """Return ``(a, b, c, A)`` for one dimension."""
    a = 1.0 / (2.0 * measure_scale**2)
    b = 1.0 / (2.0 * lengthscale**2)
    c = math.sqrt(a * a + 4.0 * a * b)
    A = 0.5 * a + b + 0.5 * c
    return a, b, c, A


def truncation_size(ratio: float, eta: float, max_size: int = MAX_BASIS_SIZE) -> int:
    """Smallest ``N >= 3`` with ``ratio**(N - 2) <= eta``, capped at ``max_size``.

    ``ratio`` is the geometric decay ``b / A`` so that
    ``lambda_{N-1} / lambda_1 = ratio**(N - 2)``.
    """
    log_eta = math.log(eta)
    log_r = math.log(ratio)
    n = max(3, int(math.ceil(log_eta / log_r)) + 2)
    # guard the ceil against rounding in either direction
    while n > 3 and (n - 3) * log_r <= log_eta:
        n -= 1
    while (n - 2) * log_r > log_eta:
        n += 1
    if n > max_size:
        warnings.warn(
            f"truncation tolerance {eta:g} needs {n} eigenpairs; capped at {max_size}",
            RuntimeWarning,
            stacklevel=3,
        )
        n = max_size
    return n


@dataclass(frozen=True)
class DimensionSpectrum:
    """Truncated eigenpairs of one univariate SE factor."""

    lengthscale: float
    measure_scale: float
    eta: float
    a: float
    b: float
    c: float
    A: float
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def ratio(self) -> float:
        return self.b / self.A

    @property
    def norm_const(self) -> float:
        return (math.pi * self.c / self.a) ** 0.25


@dataclass(frozen=True)
class SpectralBasis:
    dims: tuple[DimensionSpectrum, ...]

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(d.size for d in self.dims)

    def __getitem__(self, i: int) -> DimensionSpectrum:
        return self.dims[i]


def build_basis(
    params: SEKernelParams,
    measure_scale: float = 1.0,
    eta=1e-16,
    max_size: int = MAX_BASIS_SIZE,
) -> SpectralBasis:
    """Per-dimension closed-form eigenpairs truncated at relative level ``eta``.

    ``eta`` may be a scalar or one value per dimension.
    """
    if not measure_scale > 0:
        raise ValueError(f"measure_scale must be positive, got {measure_scale}")
    etas = np.broadcast_to(np.asarray(eta, dtype=float), (params.ndim,))
    if np.any(etas <= 0) or np.any(etas >= 1):
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    dims = []
    for ls, e in zip(params.lengthscales, etas):
        a, b, c, A = se_constants(float(ls), measure_scale)
        n = truncation_size(b / A, float(e), max_size)
        lam = math.sqrt(a / A) * (b / A) ** np.arange(n)
        dims.append(DimensionSpectrum(float(ls), float(measure_scale), float(e), a, b, c, A, _frozen(lam)))
    return SpectralBasis(tuple(dims))


def hermite_functions(t, n: int) -> np.ndarray:
    """Normalized Hermite functions ``psi_0..psi_{n-1}`` at ``t``; shape ``t.shape + (n,)``.

    Uses the three-term recurrence on the normalized functions, which stays
    bounded where raw ``H_k`` would overflow.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (n,))
    out[..., 0] = math.pi**-0.25 * np.exp(-0.5 * t * t)
    if n > 1:
        out[..., 1] = math.sqrt(2.0) * t * out[..., 0]
    for k in range(1, n - 1):
        out[..., k + 1] = (
            t * math.sqrt(2.0 / (k + 1)) * out[..., k] - math.sqrt(k / (k + 1)) * out[..., k - 1]
        )
    return out


def eigenfunction_matrix(spec: DimensionSpectrum, x, deriv: int = 0) -> np.ndarray:
    """``phi_k`` (or its first/second derivative) for every ``k`` at ``x``.

    Returns an array of shape ``x.shape + (spec.size,)``.
    """
    if deriv not in (0, 1, 2):
        raise ValueError("deriv must be 0, 1 or 2")
    x = np.asarray(x, dtype=float)
    n = spec.size
    sc = math.sqrt(spec.c)
    t = sc * x
    psi = hermite_functions(t, n)
    scale = (spec.norm_const * np.exp(0.5 * spec.a * x * x))[..., None]
    h = psi[..., :n]
    if deriv == 0:
        return scale * h
    k = np.arange(n)
    # psi_k' = sqrt(2k) psi_{k-1} - t psi_k
    lower = np.zeros_like(h)
    lower[..., 1:] = psi[..., : n - 1]
    dh = np.sqrt(2.0 * k) * lower - t[..., None] * h
    xe = x[..., None]
    if deriv == 1:
        return scale * (sc * dh + spec.a * xe * h)
    # psi_k'' = (t^2 - 2k - 1) psi_k
    d2h = (t[..., None] ** 2 - 2.0 * k - 1.0) * h
    return scale * (spec.c * d2h + 2.0 * spec.a * sc * xe * dh + (spec.a + spec.a**2 * xe * xe) * h)


def _check_order(basis: SpectralBasis, dim: int, k: int) -> DimensionSpectrum:
    spec = basis.dims[dim]
    if not 0 <= k < spec.size:
        raise IndexError(f"eigenfunction order {k} outside [0, {spec.size}) for dimension {dim}")
    return spec


def eigenfunction(basis: SpectralBasis, dim: int, k: int, x: float) -> float:
    spec = _check_order(basis, dim, k)
    return float(eigenfunction_matrix(spec, x)[..., k])


def eigenfunction_deriv(basis: SpectralBasis, dim: int, k: int, x: float) -> float:
    spec = _check_order(basis, dim, k)
    return float(eigenfunction_matrix(spec, x, deriv=1)[..., k])


def eigenfunction_second_deriv(basis: SpectralBasis, dim: int, k: int, x: float) -> float:
    spec = _check_order(basis, dim, k)
    return float(eigenfunction_matrix(spec, x, deriv=2)[..., k])


def series_eval(basis: SpectralBasis, coefs: np.ndarray, x: np.ndarray, order: int = 1):
    """Evaluate ``g_i(x_i) = sum_k coefs[i, k] phi_{i,k}(x_i)`` for all dimensions at once.

    ``coefs`` has shape ``(d, K)`` with ``K >= max N_i`` (zero padded), ``x`` has
    shape ``(n, d)``. Returns ``(g, g', g'')`` each of shape ``(n, d)``; the
    derivatives are ``None`` when ``order`` is lower. The Hermite recurrence is
    run once over all points and dimensions, so the cost is ``K`` vector steps.
    """
    x = np.asarray(x, dtype=float)
    d = basis.ndim
    a = np.array([s.a for s in basis.dims])
    c = np.array([s.c for s in basis.dims])
    norm = np.array([s.norm_const for s in basis.dims])
    sc = np.sqrt(c)
    t = x * sc
    n_terms = coefs.shape[1]

    p_prev = np.zeros_like(t)
    p_cur = math.pi**-0.25 * np.exp(-0.5 * t * t)
    s0 = coefs[:, 0] * p_cur
    s1 = np.zeros_like(t)  # sum coef_k sqrt(2k) psi_{k-1}
    s2 = coefs[:, 0] * p_cur  # sum coef_k (2k + 1) psi_k
    for k in range(1, n_terms):
        p_next = t * math.sqrt(2.0 / k) * p_cur - math.sqrt((k - 1) / k) * p_prev
        p_prev, p_cur = p_cur, p_next
        ck = coefs[:, k]
        s0 += ck * p_cur
        if order >= 1:
            s1 += (ck * math.sqrt(2.0 * k)) * p_prev
        if order >= 2:
            s2 += (ck * (2.0 * k + 1.0)) * p_cur
    scale = norm * np.exp(0.5 * a * x * x)
    g = scale * s0
    if order < 1:
        return g, None, None
    dh = s1 - t * s0
    g1 = scale * (sc * dh + a * x * s0)
    if order < 2:
        return g, g1, None
    d2h = t * t * s0 - s2
    g2 = scale * (c * d2h + 2.0 * a * sc * x * dh + (a + a * a * x * x) * s0)
    return g, g1, g2


def _as_points(x, ndim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != ndim:
        raise ValueError(f"point dimension {x.shape[-1]} does not match kernel dimension {ndim}")
    return x


def kernel_value(params: SEKernelParams, x, x_prime) -> float:
    x = _as_points(x, params.ndim)
    xp = _as_points(x_prime, params.ndim)
    r = (x - xp) / params.lengthscales
    return float(params.amplitude * np.exp(-0.5 * np.sum(r * r)))


def kernel_grad_x(params: SEKernelParams, x, x_prime) -> np.ndarray:
    """Gradient of ``kappa(x, x')`` with respect to ``x``."""
    x = _as_points(x, params.ndim)
    xp = _as_points(x_prime, params.ndim)
    return -(x - xp) / params.lengthscales**2 * kernel_value(params, x, xp)


def kernel_matrix(params: SEKernelParams, X1, X2) -> np.ndarray:
    X1 = np.atleast_2d(_as_points(X1, params.ndim))
    X2 = np.atleast_2d(_as_points(X2, params.ndim))
    r = (X1[:, None, :] - X2[None, :, :]) / params.lengthscales
    return params.amplitude * np.exp(-0.5 * np.sum(r * r, axis=-1))


def mercer_kernel_matrix(basis: SpectralBasis, params: SEKernelParams, X1, X2) -> np.ndarray:
    """Truncated Mercer sum for the product kernel, assembled dimension by dimension."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    out = np.full((X1.shape[0], X2.shape[0]), params.amplitude)
    for i, spec in enumerate(basis.dims):
        p1 = eigenfunction_matrix(spec, X1[:, i])
        p2 = eigenfunction_matrix(spec, X2[:, i])
        out *= (p1 * spec.eigenvalues) @ p2.T
    return out


def mercer_reconstruction_error(basis: SpectralBasis, params: SEKernelParams, grid) -> float:
    """Max over grid pairs of |truncated Mercer sum - kernel|."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    approx = mercer_kernel_matrix(basis, params, grid, grid)
    exact = kernel_matrix(params, grid, grid)
    return float(np.max(np.abs(approx - exact)))
