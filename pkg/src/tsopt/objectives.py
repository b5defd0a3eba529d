"""Benchmark test functions (Surjanovic & Bingham conventions)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["Objective", "schwefel", "levy", "make_objective", "OBJECTIVES"]

SCHWEFEL_CONST = 418.9829
# minimizer of -x sin(sqrt|x|) on [-500, 500]; the literature rounds it to 420.9687
SCHWEFEL_XSTAR = 420.96874369616904


def _check_bounds(x: np.ndarray, lo: float, hi: float, name: str):
    if np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
        raise ValueError(f"{name} is defined on [{lo:g}, {hi:g}]^d; got {x}")


def schwefel(x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_bounds(x, -500.0, 500.0, "schwefel")
    return float(SCHWEFEL_CONST * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def levy(x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_bounds(x, -10.0, 10.0, "levy")
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:-1] + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[-1]) ** 2)
    return float(head + mid + tail)


@dataclass(frozen=True)
class Objective:
    name: str
    ndim: int
    bounds: np.ndarray
    x_star: np.ndarray
    f_star: float
    fn: Callable[[np.ndarray], float]

    def __call__(self, x) -> float:
        return self.fn(x)

    def batch(self, X) -> np.ndarray:
        return np.array([self.fn(x) for x in np.atleast_2d(X)])


def _schwefel(dim: int) -> Objective:
    x_star = np.full(dim, SCHWEFEL_XSTAR)
    return Objective("schwefel", dim, np.tile([-500.0, 500.0], (dim, 1)), x_star, schwefel(x_star), schwefel)


def _levy(dim: int) -> Objective:
    return Objective("levy", dim, np.tile([-10.0, 10.0], (dim, 1)), np.ones(dim), 0.0, levy)


OBJECTIVES: dict[str, Callable[[int], Objective]] = {"schwefel": _schwefel, "levy": _levy}


def make_objective(name: str, dim: int) -> Objective:
    try:
        factory = OBJECTIVES[name]
    except KeyError:
        raise ValueError(f"unknown objective {name!r}; choose from {sorted(OBJECTIVES)}") from None
    if dim < 1:
        raise ValueError("dimension must be positive")
    return factory(dim)
