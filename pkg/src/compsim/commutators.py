"""Nested-commutator norm sums that control product-formula error.

``alpha(S, 2k)`` sums ``(prod h) * ||[H_g(2k+1), [..., [H_g2, H_g1]]]||`` over every
``(2k+1)``-tuple of indices drawn from ``S`` (repeats included).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable

import numpy as np

from .hamiltonian import Hamiltonian, Partition, check_superop_dim
from .rng import ordered_map

DEFAULT_BUDGET = 10 ** 7
_ZERO = 1e-13


class AlphaBudgetError(RuntimeError):
    """Exact enumeration would exceed the budget; use ``alpha_bound`` instead."""


@dataclass(frozen=True)
class AlphaReport:
    alpha_H: float
    alpha_A: float
    alpha_B: float
    alpha_cross: float
    order: int
    exact: bool

    @property
    def q_B(self) -> float:
        return self.alpha_B / self.alpha_H if self.alpha_H > 0 else 0.0


def _check_order(order: int) -> int:
    if order < 2 or order % 2:
        raise ValueError(f"order must be an even integer >= 2, got {order}")
    return order // 2


def _nested_norm_sum(weighted: np.ndarray, depth: int, workers: int | None) -> float:
    """Sum of spectral norms of all depth-fold nests of the weighted ops.

    Nests that vanish at an inner level stay zero, so they are dropped early.
    Inner levels are shared across outer indices.
    """
    m = len(weighted)
    level = weighted  # level j holds all nonzero j-fold nests
    for _ in range(depth - 2):
        nxt = (weighted[:, None] @ level[None] - level[None] @ weighted[:, None]).reshape(-1, *level.shape[1:])
        keep = np.abs(nxt).reshape(len(nxt), -1).max(axis=1) > _ZERO
        level = nxt[keep]
        if not len(level):
            return 0.0
    odd = depth % 2 == 1  # odd depth nests are Hermitian, even ones anti-Hermitian

    def outer(c: int) -> float:
        g = weighted[c]
        comm = g @ level - level @ g
        herm = comm if odd else 1j * comm
        ev = np.linalg.eigvalsh(herm)
        return float(np.abs(ev).max(axis=-1).sum())

    # reduction in outer-index order keeps the floating-point sum reproducible
    return float(sum(ordered_map(outer, range(m), workers)))


def alpha_exact(H: Hamiltonian, subset: Iterable[int], order: int,
                budget: int = DEFAULT_BUDGET, workers: int | None = None) -> float:
    """Exact nested-commutator sum over ``subset`` at order ``2k``."""
    k = _check_order(order)
    idx = H.check_indices(subset)
    m = len(idx)
    if m ** (2 * k + 1) > budget:
        raise AlphaBudgetError(
            f"{m}^{2 * k + 1} nests exceed the budget {budget}; use alpha_bound")
    if m < 2:
        return 0.0
    check_superop_dim(H.dim)
    weighted = H.weights[list(idx), None, None] * H.ops[list(idx)]
    return _nested_norm_sum(weighted, 2 * k + 1, workers)


def cross_bound(lam_a: float, lam_b: float, order: int) -> float:
    """1-norm bound on the mixed-tuple part of ``alpha``.

    Counts every placement of ``l`` A-terms among the ``2k+1`` slots, hence the
    binomial weights.
    """
    k = _check_order(order)
    n = 2 * k + 1
    return 4.0 ** k * sum(comb(n, l) * lam_a ** l * lam_b ** (n - l) for l in range(1, n))


def alpha_bound(H: Hamiltonian, partition: Partition, order: int) -> AlphaReport:
    k = _check_order(order)
    la = H.subset_lambda(partition.a_indices)
    lb = H.subset_lambda(partition.b_indices)
    a = 4.0 ** k * la ** (2 * k + 1)
    b = 4.0 ** k * lb ** (2 * k + 1)
    x = cross_bound(la, lb, order)
    return AlphaReport(alpha_H=a + b + x, alpha_A=a, alpha_B=b, alpha_cross=x, order=order, exact=False)


def alpha_report(H: Hamiltonian, partition: Partition, order: int,
                 budget: int = DEFAULT_BUDGET, workers: int | None = None) -> AlphaReport:
    """Exact report when the full enumeration fits in ``budget``, else the 1-norm bounds."""
    _check_order(order)
    if H.L ** (order + 1) > budget:
        return alpha_bound(H, partition, order)
    full = alpha_exact(H, range(H.L), order, budget, workers)
    a = alpha_exact(H, partition.a_indices, order, budget, workers)
    b = alpha_exact(H, partition.b_indices, order, budget, workers)
    return AlphaReport(alpha_H=full, alpha_A=a, alpha_B=b, alpha_cross=max(full - a - b, 0.0),
                       order=order, exact=True)


def alpha_full(H: Hamiltonian, order: int, budget: int | None = None) -> tuple[float, bool]:
    """``(alpha(H), exact)`` with fallback to ``4^k lambda^(2k+1)``."""
    k = _check_order(order)
    budget = DEFAULT_BUDGET if budget is None else budget
    try:
        return alpha_exact(H, range(H.L), order, budget), True
    except AlphaBudgetError:
        return 4.0 ** k * H.lam ** (2 * k + 1), False


class SubsetAlphaCache:
    """Memoised exact ``alpha`` per subset, for Monte Carlo over sampled partitions."""

    def __init__(self, H: Hamiltonian, order: int, budget: int = DEFAULT_BUDGET):
        self.H, self.order, self.budget = H, order, budget
        self._get = lru_cache(maxsize=None)(self._compute)

    def _compute(self, subset: tuple[int, ...]) -> float:
        return alpha_exact(self.H, subset, self.order, self.budget, workers=1)

    def __call__(self, subset: Iterable[int]) -> float:
        return self._get(tuple(sorted(subset)))


def first_order_comm_sum(H: Hamiltonian, left: Iterable[int], right: Iterable[int]) -> float:
    """``sum_{i in left, j in right} h_i h_j ||[H_i, H_j]||`` over ordered pairs."""
    li, ri = list(H.check_indices(left)), list(H.check_indices(right))
    if not li or not ri:
        return 0.0
    w = H.weights
    block = H.comm_norms[np.ix_(li, ri)]
    return float(w[li] @ block @ w[ri])
