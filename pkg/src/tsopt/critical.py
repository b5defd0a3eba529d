"""Local minima of separable functions ``f(x) = s * prod_i f_i(x_i)``.

Multivariate critical points are combinations of univariate ones. A
combination is a local minimum with ``f < 0`` exactly when every coordinate
sits at a local maximum of ``|f_i|`` (one sided at the interval ends) and the
product is negative; the same peaks with a positive product give maxima. The largest-``|f|`` minima are then found
by merging the per-dimension candidate lists with a max-heap, never touching
all ``prod_i r_i`` combinations.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rootfinding import UnivariateCritical, critical_points_1d

__all__ = [
    "CriticalPointSet",
    "classify_combination",
    "coordinate_kind",
    "univariate_candidates",
    "select_minima",
]

ZERO_TOL = 1e-12
REL_TOL = 1e-10


def classify_combination(point: Sequence[UnivariateCritical], scale: float = 1.0) -> str:
    """Classify a combination of univariate critical points.

    Returns ``"min"``, ``"max"``, ``"saddle"`` or ``"degenerate"``. Interior
    coordinates use the sign of the Hessian diagonal; boundary coordinates use
    the inward first derivative (lower bound needs ``df/dx_i >= 0`` for a
    minimum, upper bound ``<= 0``) and fall back to the Hessian when that
    derivative vanishes.
    """
    vals = np.array([c.value for c in point], dtype=float)
    f = scale * np.prod(vals)
    if abs(f) <= ZERO_TOL:
        return "degenerate"
    tol = REL_TOL * abs(f)
    votes = []
    for i, c in enumerate(point):
        rest = scale * np.prod(np.delete(vals, i))
        grad = c.deriv * rest
        hess = c.second * rest
        if c.bound != 0 and abs(grad) > tol:
            inward = grad if c.bound < 0 else -grad
            votes.append(1 if inward > 0 else -1)
            continue
        if abs(hess) <= tol:
            return "degenerate"
        votes.append(1 if hess > 0 else -1)
    if all(v > 0 for v in votes):
        return "min"
    if all(v < 0 for v in votes):
        return "max"
    return "saddle"


def coordinate_kind(c: UnivariateCritical) -> int:
    """+1 where ``|f_i|`` peaks at ``c``, -1 where it dips, 0 if degenerate.

    At an interval end the peak is one-sided: ``|f_i|`` decreases moving inward.
    """
    if abs(c.value) <= ZERO_TOL:
        return 0
    r1 = c.deriv / c.value
    if c.bound != 0 and abs(r1) > REL_TOL:
        return 1 if r1 * c.bound > 0 else -1
    r2 = c.second / c.value
    if abs(r2) <= REL_TOL:
        return 0
    return 1 if r2 < 0 else -1


@dataclass(frozen=True)
class CriticalPointSet:
    candidates: tuple[tuple[UnivariateCritical, ...], ...]
    points: np.ndarray
    values: np.ndarray
    m_max: int = 1000
    choices: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    def __len__(self) -> int:
        return self.values.size

    @property
    def ndim(self) -> int:
        return len(self.candidates)


def univariate_candidates(sample, interval=(-1.0, 1.0)) -> list[list[UnivariateCritical]]:
    return [critical_points_1d(sample, i, interval) for i in range(sample.ndim)]


def _top_products(pairs, k: int):
    """Up to ``k`` largest products ``a.mag * b.mag`` over several list pairs.

    Each pair ``(A, B)`` holds lists of ``(magnitude, payload)`` sorted by
    decreasing magnitude. Best-first search over the index grid of every pair
    with one shared max-heap.
    """
    heap = []
    for p, (A, B) in enumerate(pairs):
        if A and B:
            heap.append((-A[0][0] * B[0][0], p, 0, 0))
    heapq.heapify(heap)
    seen = set((p, 0, 0) for _, p, _, _ in heap)
    out = []
    while heap and len(out) < k:
        neg, p, i, j = heapq.heappop(heap)
        A, B = pairs[p]
        out.append((-neg, A[i][1] + B[j][1]))
        for ii, jj in ((i + 1, j), (i, j + 1)):
            if ii < len(A) and jj < len(B) and (p, ii, jj) not in seen:
                seen.add((p, ii, jj))
                heapq.heappush(heap, (-A[ii][0] * B[jj][0], p, ii, jj))
    return out


def _split_by_sign(cands: Sequence[UnivariateCritical]):
    pos, neg = [], []
    for j, c in enumerate(cands):
        if coordinate_kind(c) != 1:
            continue
        (pos if c.value > 0 else neg).append((abs(c.value), (j,)))
    pos.sort(key=lambda t: -t[0])
    neg.sort(key=lambda t: -t[0])
    return pos, neg


def select_minima(source, m_max: int = 1000, scale: float | None = None) -> CriticalPointSet:
    """The ``m_max`` local minima of largest ``|f|`` (all with ``f < 0``), ascending in ``f``.

    ``source`` is either a prior sample (critical points are computed on
    ``[-1, 1]``) or per-dimension lists of ``UnivariateCritical``.
    """
    if m_max < 1:
        raise ValueError("m_max must be positive")
    if hasattr(source, "univariate"):
        candidates = univariate_candidates(source)
        scale = source.scale if scale is None else scale
    else:
        candidates = [list(c) for c in source]
        scale = 1.0 if scale is None else scale
    if scale <= 0:
        raise ValueError("scale must be positive")
    d = len(candidates)

    # (magnitude, index tuple) of the best partial products by sign
    pos: list = [(1.0, ())]
    neg: list = []
    for cands in candidates:
        p_i, n_i = _split_by_sign(cands)
        new_pos = _top_products([(pos, p_i), (neg, n_i)], m_max)
        new_neg = _top_products([(pos, n_i), (neg, p_i)], m_max)
        pos, neg = new_pos, new_neg

    chosen, pts, vals = [], [], []
    for mag, idx in neg:
        f = -scale * mag
        if abs(f) <= ZERO_TOL:
            break
        combo = [candidates[i][j] for i, j in enumerate(idx)]
        if classify_combination(combo, scale) != "min":
            continue
        chosen.append(idx)
        pts.append([c.x for c in combo])
        vals.append(scale * np.prod([c.value for c in combo]))
    order = np.argsort(vals, kind="stable")
    points = np.array(pts, dtype=float).reshape(-1, d)[order]
    values = np.array(vals, dtype=float)[order]
    return CriticalPointSet(
        tuple(tuple(c) for c in candidates),
        points,
        values,
        m_max,
        tuple(chosen[i] for i in order),
    )
