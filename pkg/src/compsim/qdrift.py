"""QDrift: exact mixture channel, seeded gate sampler, error bound and cost."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .hamiltonian import Hamiltonian, check_superop_dim
from .metrics import Superoperator
from .rng import TAG_QDRIFT, uniforms
from .trotter import GateSequence, term_exponential


class EpsilonRangeError(ValueError):
    """Target error outside the range where the QDrift cost bound is valid."""


def _subset(H: Hamiltonian, subset) -> tuple[tuple[int, ...], float]:
    idx = tuple(range(H.L)) if subset is None else H.check_indices(subset)
    if not idx:
        raise ValueError("QDrift needs a nonempty subset")
    lam = H.subset_lambda(idx)
    if lam <= 0:
        raise ValueError("QDrift needs a subset with positive total weight")
    return idx, lam


def qdrift_probabilities(H: Hamiltonian, subset=None) -> np.ndarray:
    idx, lam = _subset(H, subset)
    return H.weights[list(idx)] / lam


def qdrift_single_sample(H: Hamiltonian, subset, tau: float) -> Superoperator:
    """One sample: ``rho -> sum_i p_i e^{i H_i lambda tau} rho e^{-i H_i lambda tau}``."""
    idx, lam = _subset(H, subset)
    check_superop_dim(H.dim)
    d = H.dim
    mat = np.zeros((d * d, d * d), dtype=complex)
    for i in idx:
        p = H.weights[i] / lam
        # exp(i H_i lam tau) written through the term exponential of h_i H_i
        U = term_exponential(H, i, lam * tau / H.weights[i])
        mat += p * np.kron(U.conj(), U)
    return Superoperator(mat, d)


def qdrift_exact_channel(H: Hamiltonian, subset, t: float, N: int) -> Superoperator:
    """``N`` samples, each at time ``t / N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return qdrift_single_sample(H, subset, t / N).power(N)


def qdrift_sample(H: Hamiltonian, subset, t: float, N: int, seed: int,
                  start: int = 0) -> GateSequence:
    """``N`` i.i.d. gates ``exp(i H_j lambda t / N)`` on the unit-norm ops.

    Gate ``j`` uses uniform draw ``start + j`` of the seed's stream, so any slice
    of a long sequence can be regenerated on its own.
    """
    idx, lam = _subset(H, subset)
    if N < 1:
        raise ValueError("N must be >= 1")
    cdf = np.cumsum(H.weights[list(idx)]) / lam
    cdf[-1] = 1.0
    u = uniforms(seed, TAG_QDRIFT, start, start + N)
    picks = np.searchsorted(cdf, u, side="right")
    tau = lam * t / N
    gates = tuple((idx[p], tau) for p in picks)
    return GateSequence(gates, t, H.dim, order=0, unit_ops=True)


def qdrift_error_bound(lam: float, t: float, N: int) -> float:
    """``(2 lambda^2 t^2 / N) exp(2 lambda t / N)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    t = abs(t)
    return 2 * lam ** 2 * t ** 2 / N * math.exp(2 * lam * t / N)


@dataclass(frozen=True)
class QDriftCost:
    n: int
    cost: int
    cost_relaxed: float


def qdrift_cost(H: Hamiltonian, subset, t: float, epsilon: float) -> QDriftCost:
    idx, lam = _subset(H, subset)
    return qdrift_cost_from(lam, t, epsilon)


def qdrift_cost_from(lam: float, t: float, epsilon: float) -> QDriftCost:
    t = abs(t)
    upper = lam * t * math.log(2) / 2
    if not 0 < epsilon < upper:
        raise EpsilonRangeError(f"epsilon must lie in (0, lambda t ln2 / 2) = (0, {upper:.6g})")
    relaxed = 4 * lam ** 2 * t ** 2 / epsilon
    n = math.ceil(relaxed)
    return QDriftCost(n, n, relaxed)
