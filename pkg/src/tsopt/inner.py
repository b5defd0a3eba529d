"""Multi-start minimization of GP-TS acquisition functions.

All local searches of one multi-start run advance together: every iteration
evaluates the objective once on the stacked iterates of the starts that are
still running, so a run with a thousand starts costs a handful of vectorized
evaluations per step rather than a thousand Python-level ones.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InnerLoopError",
    "StartSet",
    "StartTrace",
    "InnerResult",
    "BatchResult",
    "minimize_batch",
    "local_minimize",
    "multistart",
    "optimize_ts",
    "exploration_starts",
    "distance_to_truth",
]


class InnerLoopError(RuntimeError):
    """Every local search failed."""


@dataclass(frozen=True)
class StartSet:
    exploration: np.ndarray
    exploitation: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.exploration, dtype=float)
        p = np.asarray(self.exploitation, dtype=float)
        d = e.shape[-1] if e.size else (p.shape[-1] if p.size else 0)
        e = e.reshape(-1, d) if d else e.reshape(0, 0)
        p = p.reshape(-1, d) if d else p.reshape(0, 0)
        for pts in (e, p):
            if pts.size and np.any(np.abs(pts) > 1.0 + 1e-12):
                raise ValueError("start points must lie in [-1, 1]^d")
        object.__setattr__(self, "exploration", e)
        object.__setattr__(self, "exploitation", p)

    def __len__(self) -> int:
        return self.exploration.shape[0] + self.exploitation.shape[0]

    def points(self) -> np.ndarray:
        parts = [a for a in (self.exploration, self.exploitation) if a.size]
        return np.vstack(parts) if parts else np.zeros((0, 0))


@dataclass(frozen=True)
class StartTrace:
    start: np.ndarray
    end: np.ndarray
    value: float
    iterations: int
    converged: bool
    failed: bool = False


@dataclass(frozen=True)
class InnerResult:
    x: np.ndarray
    value: float
    starts_used: int
    traces: tuple[StartTrace, ...] = field(repr=False)
    wall_time: float
    n_evals: int = 0


@dataclass(frozen=True)
class BatchResult:
    x: np.ndarray
    value: np.ndarray
    start_value: np.ndarray
    converged: np.ndarray
    failed: np.ndarray
    iterations: np.ndarray
    n_evals: int


def _as_batched(objective):
    return objective.value_and_grad if hasattr(objective, "value_and_grad") else objective


def _evaluate(fun, X):
    f, g = fun(X)
    f = np.asarray(f, dtype=float).reshape(X.shape[0])
    g = np.asarray(g, dtype=float).reshape(X.shape)
    return f, g


def _two_loop(g, S, Y, rho, count):
    """``H g`` for each row from its L-BFGS memory (newest pair in slot 0)."""
    m = S.shape[1]
    q = g.copy()
    alpha = np.zeros((g.shape[0], m))
    for j in range(m):
        valid = j < count
        a = rho[:, j] * np.sum(S[:, j] * q, axis=1) * valid
        alpha[:, j] = a
        q -= a[:, None] * Y[:, j]
    yy = np.sum(Y[:, 0] * Y[:, 0], axis=1)
    sy = np.sum(S[:, 0] * Y[:, 0], axis=1)
    gamma = np.where(count > 0, sy / np.where(yy > 0, yy, 1.0), 1.0)
    r = gamma[:, None] * q
    for j in reversed(range(m)):
        valid = j < count
        b = rho[:, j] * np.sum(Y[:, j] * r, axis=1)
        r += S[:, j] * ((alpha[:, j] - b) * valid)[:, None]
    return r


def minimize_batch(
    objective,
    X0,
    lower=-1.0,
    upper=1.0,
    gtol: float = 1e-8,
    step_tol: float = 1e-12,
    max_iter: int = 200,
    memory: int = 10,
) -> BatchResult:
    """Projected limited-memory quasi-Newton descent from every row of ``X0``.

    Variables at a bound whose gradient points outward are held fixed; the
    search direction comes from the L-BFGS two-loop recursion on the free
    variables, and steps are projected back onto the box with Armijo
    backtracking, so accepted iterates never increase the objective. A row
    stops when its projected-gradient infinity norm is ``<= gtol``, its step
    is ``<= step_tol``, or after ``max_iter`` iterations. Rows whose value or
    gradient is not finite are marked failed and dropped.
    """
    fun = _as_batched(objective)
    X = np.array(X0, dtype=float, ndmin=2)
    B, d = X.shape
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (d,))
    X = np.clip(X, lo, hi)

    F = np.full(B, np.inf)
    G = np.zeros((B, d))
    failed = np.zeros(B, dtype=bool)
    converged = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=int)
    n_evals = 0
    if B == 0:
        return BatchResult(X, F, F.copy(), converged, failed, iters, 0)

    with np.errstate(all="ignore"):
        F, G = _evaluate(fun, X)
    n_evals += B
    failed |= ~np.isfinite(F) | ~np.all(np.isfinite(G), axis=1)
    F0 = F.copy()
    S = np.zeros((B, memory, d))
    Y = np.zeros((B, memory, d))
    rho = np.zeros((B, memory))
    count = np.zeros(B, dtype=int)
    active = ~failed

    for it in range(max_iter):
        pg = X - np.clip(X - G, lo, hi)
        done = active & (np.max(np.abs(pg), axis=1) <= gtol)
        converged |= done
        active &= ~done
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        x, g = X[idx], G[idx]
        fixed = ((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0))
        gr = np.where(fixed, 0.0, g)
        direction = -_two_loop(gr, S[idx], Y[idx], rho[idx], count[idx])
        direction[fixed] = 0.0
        slope = np.sum(g * direction, axis=1)
        fresh = (count[idx] == 0) | ~(slope < 0)
        if np.any(fresh):
            gnorm = np.linalg.norm(gr[fresh], axis=1)
            direction[fresh] = -gr[fresh] / np.maximum(gnorm, 1.0)[:, None]
            count[idx[fresh]] = 0

        # projected Armijo backtracking, all pending rows evaluated together
        t = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        x_new = x.copy()
        f_new = F[idx].copy()
        g_new = g.copy()
        stalled = np.zeros(idx.size, dtype=bool)
        while np.any(pending):
            p = np.nonzero(pending)[0]
            trial = np.clip(x[p] + t[p, None] * direction[p], lo, hi)
            step = np.max(np.abs(trial - x[p]), axis=1)
            tiny = step <= step_tol
            if np.any(tiny):
                stalled[p[tiny]] = True
                pending[p[tiny]] = False
                p, trial = p[~tiny], trial[~tiny]
                if p.size == 0:
                    break
            with np.errstate(all="ignore"):
                ft, gt = _evaluate(fun, trial)
            n_evals += p.size
            bad = ~np.isfinite(ft) | ~np.all(np.isfinite(gt), axis=1)
            armijo = ft <= F[idx[p]] + 1e-4 * np.sum(g[p] * (trial - x[p]), axis=1)
            ok = armijo & ~bad
            acc = p[ok]
            x_new[acc], f_new[acc], g_new[acc] = trial[ok], ft[ok], gt[ok]
            pending[acc] = False
            t[p[~ok]] *= 0.5

        moved = ~stalled
        rows = idx[moved]
        s = x_new[moved] - x[moved]
        yv = g_new[moved] - g[moved]
        X[rows], F[rows], G[rows] = x_new[moved], f_new[moved], g_new[moved]
        iters[idx] += 1
        sy = np.sum(s * yv, axis=1)
        curv = sy > 1e-10 * np.linalg.norm(s, axis=1) * np.linalg.norm(yv, axis=1)
        upd = rows[curv]
        if upd.size:
            S[upd] = np.roll(S[upd], 1, axis=1)
            Y[upd] = np.roll(Y[upd], 1, axis=1)
            rho[upd] = np.roll(rho[upd], 1, axis=1)
            S[upd, 0] = s[curv]
            Y[upd, 0] = yv[curv]
            rho[upd, 0] = 1.0 / sy[curv]
            count[upd] = np.minimum(count[upd] + 1, memory)
        small_step = np.zeros(idx.size, dtype=bool)
        small_step[moved] = np.max(np.abs(s), axis=1) <= step_tol
        stop = stalled | small_step
        converged[idx[stop]] = True
        active[idx[stop]] = False

    return BatchResult(X, F, F0, converged & ~failed, failed, iters, n_evals)


def local_minimize(objective, start, box=(-1.0, 1.0), tol: float = 1e-8, max_iter: int = 200):
    """Single-start wrapper; returns ``(point, value, converged)``."""
    start = np.asarray(start, dtype=float).reshape(1, -1)
    res = minimize_batch(objective, start, box[0], box[1], gtol=tol, max_iter=max_iter)
    if res.failed[0]:
        raise InnerLoopError(f"objective not finite at start {start[0]}")
    return res.x[0], float(res.value[0]), bool(res.converged[0])


def multistart(objective, starts, box=(-1.0, 1.0), **opts) -> InnerResult:
    """Run ``minimize_batch`` from every start and keep the best end point.

    Ties in value are broken lexicographically on the end point so the result
    does not depend on the order of the starts.
    """
    starts = np.asarray(starts, dtype=float)
    if starts.ndim != 2 or starts.shape[0] == 0:
        raise ValueError("at least one start point is required")
    t0 = time.perf_counter()
    res = minimize_batch(objective, starts, box[0], box[1], **opts)
    wall = time.perf_counter() - t0
    traces = tuple(
        StartTrace(starts[i], res.x[i], float(res.value[i]), int(res.iterations[i]),
                   bool(res.converged[i]), bool(res.failed[i]))
        for i in range(starts.shape[0])
    )
    ok = np.nonzero(~res.failed)[0]
    if ok.size == 0:
        raise InnerLoopError(f"all {starts.shape[0]} local searches failed (non-finite objective)")
    keys = [res.x[ok, j] for j in reversed(range(res.x.shape[1]))] + [res.value[ok]]
    best = ok[np.lexsort(keys)[0]]
    return InnerResult(res.x[best].copy(), float(res.value[best]), starts.shape[0], traces, wall, res.n_evals)


def exploration_starts(prior, m_max: int = 1000) -> np.ndarray:
    """Local minima of the prior sample, best first."""
    from .critical import select_minima

    return select_minima(prior, m_max).points


def optimize_ts(ps, starts: StartSet, **opts) -> InnerResult:
    """Minimize a posterior sample from the exploration and exploitation starts."""
    pts = starts.points()
    if pts.shape[0] == 0:
        raise ValueError("start set is empty")
    return multistart(ps, pts, **opts)


def distance_to_truth(x_star, x_true) -> float:
    return float(np.linalg.norm(np.asarray(x_star, dtype=float) - np.asarray(x_true, dtype=float)))
