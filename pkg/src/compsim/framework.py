"""Ancilla-controlled channel template and the channels built from it.

Each instance prepares a fresh ancilla in ``sum_j a_j |j>``, applies ``U_j`` to the
system controlled on ``|j>``, applies an unprepare unitary to the ancilla and then
traces it out (or keeps one outcome).  The simulation is done on the joint space,
so the template check is a genuine comparison against the direct constructions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .hamiltonian import Hamiltonian, check_superop_dim, dense_sum
from .metrics import Superoperator, fit_scaling_exponent, unitary_channel
from .qdrift import _subset
from .trotter import expm_hermitian, term_exponential

MAX_JOINT_DIM = 4096
MAX_PERMUTED_TERMS = 6


class TemplateError(ValueError):
    pass


def _prep_unitary(amps: np.ndarray) -> np.ndarray:
    """Real unitary whose first column is ``amps`` (a Householder reflection)."""
    m = len(amps)
    e0 = np.zeros(m)
    e0[0] = 1.0
    v = e0 - amps
    nv = float(v @ v)
    if nv < 1e-30:
        return np.eye(m)
    return np.eye(m) - 2.0 * np.outer(v, v) / nv


@dataclass(frozen=True)
class SelectInstance:
    """One ancilla register: amplitudes, controlled system unitaries, unprepare step.

    ``unprep`` is ``"identity"``, ``"inverse"`` (the inverse of the prepare
    unitary) or an explicit ancilla unitary.  ``post_select`` keeps only that
    ancilla outcome, giving a trace-decreasing map.
    """

    prep_amplitudes: tuple[float, ...]
    controlled_ops: tuple[np.ndarray, ...]
    unprep: str | np.ndarray = "identity"
    post_select: int | None = None

    def __post_init__(self):
        a = np.asarray(self.prep_amplitudes, dtype=float)
        if a.ndim != 1 or not len(a):
            raise TemplateError("amplitudes must be a nonempty vector")
        if np.any(a < 0):
            raise TemplateError("amplitudes must be nonnegative")
        if abs(float(a @ a) - 1.0) > 1e-12:
            raise TemplateError("squared amplitudes must sum to 1")
        if len(self.controlled_ops) != len(a):
            raise TemplateError("one controlled unitary per ancilla state is required")
        d = self.controlled_ops[0].shape[0]
        for U in self.controlled_ops:
            if U.shape != (d, d):
                raise TemplateError("controlled unitaries must share one square shape")
            if np.abs(U.conj().T @ U - np.eye(d)).max() > 1e-10:
                raise TemplateError("controlled operators must be unitary")
        if self.post_select is not None and not 0 <= self.post_select < len(a):
            raise TemplateError("post-selected outcome is out of range")

    @property
    def size(self) -> int:
        return len(self.prep_amplitudes)

    @property
    def dim(self) -> int:
        return self.controlled_ops[0].shape[0]

    def unprep_matrix(self) -> np.ndarray:
        W = _prep_unitary(np.asarray(self.prep_amplitudes, dtype=float))
        if isinstance(self.unprep, str):
            if self.unprep == "identity":
                return np.eye(self.size)
            if self.unprep == "inverse":
                return W.T
            raise TemplateError(f"unknown unprepare mode {self.unprep!r}")
        V = np.asarray(self.unprep, dtype=complex)
        if V.shape != (self.size, self.size) or np.abs(V.conj().T @ V - np.eye(self.size)).max() > 1e-10:
            raise TemplateError("unprepare matrix must be a unitary on the ancilla")
        return V

    def joint_unitary(self) -> np.ndarray:
        """``(V x I) Sel (W x I)`` on ancilla-major ordering."""
        m, d = self.size, self.dim
        W = _prep_unitary(np.asarray(self.prep_amplitudes, dtype=float))
        sel = np.zeros((m * d, m * d), dtype=complex)
        for j, U in enumerate(self.controlled_ops):
            sel[j * d:(j + 1) * d, j * d:(j + 1) * d] = U
        I = np.eye(d)
        return np.kron(self.unprep_matrix(), I) @ sel @ np.kron(W, I)

    def kraus(self) -> list[np.ndarray]:
        """System operators ``(<m| x I) G (|0> x I)`` for each kept ancilla outcome."""
        G = self.joint_unitary()
        d = self.dim
        outcomes = range(self.size) if self.post_select is None else [self.post_select]
        return [G[m * d:(m + 1) * d, :d] for m in outcomes]

    def channel(self) -> Superoperator:
        if self.size * self.dim > MAX_JOINT_DIM:
            raise TemplateError(f"joint dimension {self.size * self.dim} exceeds {MAX_JOINT_DIM}")
        ks = self.kraus()
        if self.post_select is not None and max(np.abs(K).max() for K in ks) < 1e-14:
            raise TemplateError("post-selected outcome has zero success probability")
        mat = sum(np.kron(K.conj(), K) for K in ks)
        return Superoperator(mat, self.dim)


def template_channel(instances: Sequence[SelectInstance], dim: int) -> Superoperator:
    """Apply each instance on its own fresh ancilla, first instance first."""
    check_superop_dim(dim)
    out = Superoperator.identity(dim)
    for inst in instances:
        if inst.dim != dim:
            raise TemplateError("instance dimension does not match the system")
        out = out.then(inst.channel())
    return out


def qdrift_instance(H: Hamiltonian, subset, t: float) -> SelectInstance:
    """Amplitudes ``sqrt(h_i / lambda)`` and controlled ``exp(i lambda H_i t)``."""
    idx, lam = _subset(H, subset)
    amps = tuple(math.sqrt(H.weights[i] / lam) for i in idx)
    ops = tuple(term_exponential(H, i, lam * t / H.weights[i]) for i in idx)
    return SelectInstance(amps, ops)


def _ordered_product(H: Hamiltonian, order: Sequence[int], t: float) -> np.ndarray:
    U = np.eye(H.dim, dtype=complex)
    for i in order:
        U = term_exponential(H, i, t) @ U
    return U


def _permutations(H: Hamiltonian, subset) -> list[tuple[int, ...]]:
    idx = tuple(range(H.L)) if subset is None else H.check_indices(subset)
    if not idx:
        raise ValueError("randomized Trotter needs a nonempty subset")
    if len(idx) > MAX_PERMUTED_TERMS:
        raise TemplateError(f"{len(idx)}! orderings exceed the cap of {MAX_PERMUTED_TERMS}!")
    return list(itertools.permutations(idx))


def randomized_trotter_channel(H: Hamiltonian, subset, t: float) -> Superoperator:
    """Uniform average of first-order product channels over every term ordering."""
    check_superop_dim(H.dim)
    perms = _permutations(H, subset)
    mat = sum(unitary_channel(_ordered_product(H, p, t), check=False).mat for p in perms)
    return Superoperator(mat / len(perms), H.dim)


def randomized_trotter_instance(H: Hamiltonian, subset, t: float) -> SelectInstance:
    perms = _permutations(H, subset)
    amp = 1.0 / math.sqrt(len(perms))
    return SelectInstance(tuple([amp] * len(perms)), tuple(_ordered_product(H, p, t) for p in perms))


def randomized_trotter_template(H: Hamiltonian, subset, t: float) -> Superoperator:
    return template_channel([randomized_trotter_instance(H, subset, t)], H.dim)


# -- multiproduct combinations ------------------------------------------------------------

def multiproduct_coeffs(k_vec: Sequence[int]) -> np.ndarray:
    """Solve ``sum_j c_j k_j^(-m) = [m == 0]`` for ``m = 0..N-1``."""
    k = np.asarray(k_vec)
    if k.ndim != 1 or not len(k):
        raise ValueError("k_vec must be a nonempty list")
    if np.any(k <= 0) or np.any(k != np.round(k)):
        raise ValueError("k_vec entries must be positive integers")
    if len(set(k.tolist())) != len(k):
        raise np.linalg.LinAlgError("duplicate entries make the system singular")
    n = len(k)
    A = k.astype(float)[None, :] ** -np.arange(n)[:, None]
    rhs = np.zeros(n)
    rhs[0] = 1.0
    c = np.linalg.solve(A, rhs)
    if np.abs(A @ c - rhs).max() > 1e-10:
        raise np.linalg.LinAlgError("multiproduct system is too ill-conditioned")
    return c


def multiproduct_operator(H: Hamiltonian, k_vec: Sequence[int], t: float) -> np.ndarray:
    """``sum_j c_j S_1(t / k_j)^(k_j)`` as a (non-unitary) matrix."""
    c = multiproduct_coeffs(k_vec)
    order = list(range(H.L))
    return sum(cj * np.linalg.matrix_power(_ordered_product(H, order, t / kj), int(kj))
               for cj, kj in zip(c, k_vec))


def multiproduct_distances(H: Hamiltonian, k_vec: Sequence[int], t_grid: Iterable[float]) -> list[float]:
    """``2 ||M(t) - exp(iHt)||`` at each grid time."""
    if H.dim > 16:
        raise ValueError("multiproduct checks are limited to d <= 16")
    Hs = dense_sum(H)
    return [2 * float(np.linalg.norm(multiproduct_operator(H, k_vec, t) - expm_hermitian(Hs, t), 2))
            for t in t_grid]


def multiproduct_error_check(H: Hamiltonian, k_vec: Sequence[int], t_grid: Sequence[float]) -> float:
    """Fitted log-log slope of the multiproduct error against ``t``."""
    t_grid = list(t_grid)
    return fit_scaling_exponent(list(zip(t_grid, multiproduct_distances(H, k_vec, t_grid))))
