"""Channel representations, distance oracles and curve fitting.

Superoperators act on column-stacked density matrices: ``vec(rho)`` stacks the
columns of ``rho``, so ``vec(A rho B) = (B^T kron A) vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .hamiltonian import check_superop_dim

CPTP_TOL = 1e-10
UNITARY_TOL = 1e-10


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


@dataclass(frozen=True)
class Superoperator:
    mat: np.ndarray
    dim: int

    @classmethod
    def identity(cls, d: int) -> "Superoperator":
        return cls(np.eye(d * d, dtype=complex), d)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        """Map composition: ``(self @ other)(rho) = self(other(rho))``."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return Superoperator(self.mat @ other.mat, self.dim)

    def then(self, other: "Superoperator") -> "Superoperator":
        """Apply ``self`` first, then ``other``."""
        return other @ self

    def power(self, n: int) -> "Superoperator":
        if n < 0:
            raise ValueError("negative power")
        return Superoperator(np.linalg.matrix_power(self.mat, n), self.dim)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.mat + other.mat, self.dim)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.mat - other.mat, self.dim)

    def scale(self, c: complex) -> "Superoperator":
        return Superoperator(c * self.mat, self.dim)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.mat @ vec(rho), self.dim)

    def choi(self) -> np.ndarray:
        """Choi state ``(id kron Phi)(|Omega><Omega|)`` with ``|Omega>`` normalised.

        Index layout is (input, output) on both sides, trace 1 for a TP map.
        """
        d = self.dim
        # mat[r + c*d, i + j*d] = <r|Phi(|i><j|)|c>
        s4 = self.mat.reshape(d, d, d, d)          # [c, r, j, i]
        j4 = s4.transpose(3, 1, 2, 0)              # [i, r, j, c]
        return j4.reshape(d * d, d * d) / d

    def is_cptp(self, tol: float = CPTP_TOL) -> bool:
        j = self.choi()
        d = self.dim
        herm = 0.5 * (j + j.conj().T)
        if np.abs(j - j.conj().T).max() > tol:
            return False
        if np.linalg.eigvalsh(herm).min() < -tol:
            return False
        # tracing out the output must leave I/d on the input
        red = np.einsum("irjr->ij", j.reshape(d, d, d, d))
        return bool(np.abs(red - np.eye(d) / d).max() <= tol)


def _check_unitary(U: np.ndarray) -> None:
    if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > UNITARY_TOL:
        raise ValueError("matrix is not unitary")


def unitary_channel(U: np.ndarray, check: bool = True) -> Superoperator:
    """Superoperator of ``rho -> U rho U^dagger``."""
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    check_superop_dim(d)
    if check:
        _check_unitary(U)
    return Superoperator(np.kron(U.conj(), U), d)


def kraus_channel(kraus: Iterable[np.ndarray]) -> Superoperator:
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    d = ks[0].shape[1]
    check_superop_dim(d)
    mat = sum(np.kron(k.conj(), k) for k in ks)
    return Superoperator(mat, d)


def trace_norm_hermitian(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum())


def diamond_lower_bound(phi: Superoperator, psi: Superoperator) -> float:
    """Trace distance of the two channels' outputs on a maximally entangled input.

    This never exceeds the diamond distance, so it is only ever compared against
    upper bounds.
    """
    if phi.dim != psi.dim:
        raise ValueError("dimension mismatch")
    return trace_norm_hermitian(phi.choi() - psi.choi())


def diamond_upper_estimate(phi: Superoperator, psi: Superoperator) -> float:
    """``d`` times the entangled-input distance, which dominates the diamond distance."""
    return phi.dim * diamond_lower_bound(phi, psi)


def unitary_spectral_distance(U: np.ndarray, V: np.ndarray) -> float:
    """``2 ||U - V||``, an upper bound on the diamond distance of the two conjugations."""
    if U.shape != V.shape:
        raise ValueError("dimension mismatch")
    return 2.0 * float(np.linalg.norm(U - V, 2))


def fit_scaling_exponent(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log error`` against ``log x``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 4:
        raise ValueError("need at least 4 (x, error) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("abscissae and errors must be positive")
    if np.log2(x.max() / x.min()) < 2:
        raise ValueError("points must span at least two octaves")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


class BracketError(ValueError):
    """No sign change of the cost difference in the search bracket."""


def crossover_time(H, epsilon: float, order: int, budget: int | None = None,
                   bracket: tuple[float, float] = (1e-12, 1e12)) -> float:
    """Time at which the relaxed Trotter and QDrift cost bounds coincide.

    Bisection (Brent) on ``ln C_QD(t) - ln C_Trott(t)`` over ``ln t``.
    """
    from .commutators import alpha_full

    if order < 2 or order % 2:
        raise ValueError("crossover needs an even order 2k >= 2")
    alpha, _ = alpha_full(H, order, budget)
    return crossover_time_from(H.lam, H.L, alpha, epsilon, order, bracket)


def crossover_time_from(lam: float, L: int, alpha: float, epsilon: float, order: int,
                        bracket: tuple[float, float] = (1e-12, 1e12)) -> float:
    """Crossover time from the scalar summary ``(lambda, L, alpha)`` of a Hamiltonian."""
    from scipy.optimize import brentq

    from .trotter import trotter_cost_relaxed_from

    if alpha <= 0:
        raise BracketError("commuting Hamiltonian: the Trotter cost never crosses the QDrift cost")

    def f(log_t: float) -> float:
        t = np.exp(log_t)
        c_qd = 4.0 * lam ** 2 * t ** 2 / epsilon
        c_tr = trotter_cost_relaxed_from(L, alpha, order, t, epsilon)
        return np.log(c_qd) - np.log(c_tr)

    lo, hi = np.log(bracket[0]), np.log(bracket[1])
    flo, fhi = f(lo), f(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no crossover in t in [{bracket[0]:g}, {bracket[1]:g}]")
    log_t = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    t = float(np.exp(log_t))
    if abs(f(np.log(t))) > 1e-9:
        raise BracketError("root refinement did not reach |f| <= 1e-9")
    return t
