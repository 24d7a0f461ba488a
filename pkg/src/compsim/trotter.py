"""Trotter-Suzuki product formulas.

Conventions: the target is ``U(t) = exp(iHt)`` and a ``GateSequence`` lists gates
in the order they are applied.  The first-order formula applies terms in index
order, ``exp(i h_L H_L t) ... exp(i h_1 H_1 t)`` read right to left.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .commutators import DEFAULT_BUDGET, AlphaBudgetError, alpha_exact, alpha_full, first_order_comm_sum
from .hamiltonian import Hamiltonian, check_superop_dim


def check_order(order: int) -> int:
    if order != 1 and (order < 2 or order % 2):
        raise ValueError(f"order must be 1 or an even integer >= 2, got {order}")
    return order


def stages(order: int) -> int:
    """Number of stages of the order-``2k`` formula, ``2 * 5^(k-1)``; 1 for first order."""
    check_order(order)
    return 1 if order == 1 else 2 * 5 ** (order // 2 - 1)


def suzuki_u(k: int) -> float:
    """Recursion coefficient ``1 / (4 - 4^(1/(2k-1)))``."""
    if k < 2:
        raise ValueError("the recursion coefficient is defined for k >= 2")
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))


def _steps(n: int, order: int, t: float) -> list[tuple[int, float]]:
    """Steps ``(position, duration)`` of the order-``order`` formula on ``n`` slots."""
    if order == 1:
        return [(j, t) for j in range(n)]
    if order == 2:
        half = [(j, t / 2) for j in range(n)]
        return half + half[::-1]
    k = order // 2
    u = suzuki_u(k)
    outer = _steps(n, order - 2, u * t)
    mid = _steps(n, order - 2, (1 - 4 * u) * t)
    return outer + outer + mid + outer + outer


@dataclass(frozen=True)
class GateSequence:
    """Gates ``(term index, duration)`` in application order.

    A gate ``(i, tau)`` is ``exp(i h_i H_i tau)``, or ``exp(i H_i tau)`` on the
    unit-norm operator when ``unit_ops`` is set (the QDrift convention).
    ``order`` 0 marks a randomly sampled sequence.
    """

    gates: tuple[tuple[int, float], ...]
    total_time: float
    dim: int
    order: int = 1
    unit_ops: bool = False

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "GateSequence") -> "GateSequence":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        if self.unit_ops != other.unit_ops:
            raise ValueError("cannot concatenate sequences with different gate conventions")
        return GateSequence(self.gates + other.gates, self.total_time + other.total_time,
                            self.dim, self.order, self.unit_ops)

    def repeat(self, r: int) -> "GateSequence":
        return GateSequence(self.gates * r, self.total_time * r, self.dim, self.order, self.unit_ops)

    def durations_by_term(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for i, tau in self.gates:
            out[i] = out.get(i, 0.0) + tau
        return out

    def to_text(self) -> str:
        # repr gives the shortest string that round-trips to the same float
        ops = "unit" if self.unit_ops else "weighted"
        lines = [f"# dim={self.dim} order={self.order} t={self.total_time!r} ops={ops} gates={len(self.gates)}"]
        lines += [f"{i} {tau!r}" for i, tau in self.gates]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GateSequence":
        lines = text.strip("\n").split("\n")
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing gate-sequence header")
        fields = dict(f.split("=", 1) for f in lines[0][1:].split())
        gates = []
        for ln in lines[1:]:
            i, tau = ln.split()
            gates.append((int(i), float(tau)))
        if "gates" in fields and int(fields["gates"]) != len(gates):
            raise ValueError("gate count does not match header")
        return cls(tuple(gates), float(fields["t"]), int(fields["dim"]), int(fields["order"]),
                   fields.get("ops", "weighted") == "unit")

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GateSequence":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def trotter_sequence(H: Hamiltonian, subset: Iterable[int] | None, order: int, t: float) -> GateSequence:
    check_order(order)
    idx = tuple(range(H.L)) if subset is None else H.check_indices(subset)
    if not idx:
        raise ValueError("Trotter sequence needs a nonempty subset")
    gates = tuple((idx[j], tau) for j, tau in _steps(len(idx), order, t))
    return GateSequence(gates, t, H.dim, order)


def expm_hermitian(A: np.ndarray, t: float) -> np.ndarray:
    """``exp(i A t)`` for Hermitian ``A`` via eigendecomposition."""
    w, V = np.linalg.eigh(A)
    return (V * np.exp(1j * w * t)) @ V.conj().T


def term_exponential(H: Hamiltonian, i: int, tau: float) -> np.ndarray:
    """``exp(i h_i H_i tau)``."""
    w, V = H.eigh[i]
    return (V * np.exp(1j * H.weights[i] * w * tau)) @ V.conj().T


def sequence_unitary(seq: GateSequence, H: Hamiltonian) -> np.ndarray:
    check_superop_dim(H.dim)
    U = np.eye(H.dim, dtype=complex)
    w = H.weights
    for i, tau in seq.gates:
        U = term_exponential(H, i, tau / w[i] if seq.unit_ops else tau) @ U
    return U


def trotter_unitary(H: Hamiltonian, subset, order: int, t: float, r: int = 1) -> np.ndarray:
    """``S(t/r)^r`` for the given subset."""
    S = sequence_unitary(trotter_sequence(H, subset, order, t / r), H)
    return np.linalg.matrix_power(S, r)


def trotter_channel(H: Hamiltonian, subset, order: int, t: float, r: int = 1):
    from .metrics import unitary_channel

    return unitary_channel(trotter_unitary(H, subset, order, t, r))


# -- error bounds and cost ------------------------------------------------------------

def _alpha_for(H: Hamiltonian, subset, order: int, budget: int) -> tuple[float, bool]:
    if subset is None or len(H.check_indices(subset)) == H.L:
        return alpha_full(H, order, budget)
    idx = H.check_indices(subset)
    try:
        return alpha_exact(H, idx, order, budget), True
    except AlphaBudgetError:
        lam = H.subset_lambda(idx)
        return 4.0 ** (order // 2) * lam ** (order + 1), False


def trotter_error_bound(H: Hamiltonian, subset, order: int, t: float, r: int = 1,
                        alpha: float | None = None, channel: bool = True,
                        budget: int = DEFAULT_BUDGET) -> float:
    """Upper bound on the error of ``S(t/r)^r``.

    ``channel=True`` gives the diamond-distance bound for all ``r`` segments;
    ``channel=False`` the spectral-norm bound for one segment.
    """
    check_order(order)
    idx = tuple(range(H.L)) if subset is None else H.check_indices(subset)
    t = abs(t)
    if order == 1:
        s = first_order_comm_sum(H, idx, idx)
        seg = t ** 2 / (2 * r ** 2) * s
    else:
        if alpha is None:
            alpha, _ = _alpha_for(H, idx, order, budget)
        seg = 2 * alpha / (order + 1) * (stages(order) * t / r) ** (order + 1)
    return 2 * r * seg if channel else seg


@dataclass(frozen=True)
class TrotterCost:
    order: int
    r: int
    cost: int
    cost_relaxed: float
    alpha: float
    exact_alpha: bool


def trotter_segments_real(alpha: float, order: int, t: float, epsilon: float) -> float:
    """Pre-ceiling segment count for order ``2k``."""
    k = order // 2
    ups = stages(order)
    return (ups * abs(t)) ** (1 + 1 / (2 * k)) / epsilon ** (1 / (2 * k)) * (4 * alpha / (2 * k + 1)) ** (1 / (2 * k))


def trotter_cost_relaxed_from(L: int, alpha: float, order: int, t: float, epsilon: float) -> float:
    """Pre-ceiling gate count ``Upsilon L r`` for order ``2k`` from ``(L, alpha)``."""
    return stages(order) * L * trotter_segments_real(alpha, order, t, epsilon)


def trotter_cost(H: Hamiltonian, order: int, t: float, epsilon: float,
                 budget: int = DEFAULT_BUDGET, alpha: float | None = None) -> TrotterCost:
    check_order(order)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    L = H.L
    if order == 1:
        s = first_order_comm_sum(H, range(L), range(L))
        r_real = t ** 2 / (2 * epsilon) * s
        r = max(1, math.ceil(r_real))
        return TrotterCost(1, r, L * r, L * r_real, s, True)
    exact = True
    if alpha is None:
        alpha, exact = alpha_full(H, order, budget)
    r_real = trotter_segments_real(alpha, order, t, epsilon)
    ups = stages(order)
    r = max(1, math.ceil(r_real))
    return TrotterCost(order, r, ups * L * r, ups * L * r_real, alpha, exact)


def is_palindrome(seq: GateSequence) -> bool:
    return seq.gates == seq.gates[::-1]


def sub_times(order: int, t: float) -> Sequence[float]:
    """Durations of the order-``order`` formula applied to a single slot."""
    return [tau for _, tau in _steps(1, order, t)]
