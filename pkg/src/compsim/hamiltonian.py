"""Hamiltonian data model, file ingestion and partition types.

A Hamiltonian is stored as ``H = sum_i h_i H_i`` with ``h_i > 0`` and every
``H_i`` Hermitian with unit spectral norm.  Term order is the file order and is
significant: product formulas apply terms in that order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path
from typing import Iterable

import numpy as np

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10
UNIT_SNAP = 1e-13  # ops this close to unit norm are kept as given
MIN_WEIGHT = 1e-14
MAX_SUPEROP_DIM = 64

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class HamiltonianError(ValueError):
    """Base class for invalid Hamiltonian input."""


class HamiltonianParseError(HamiltonianError):
    pass


class NonHermitianTermError(HamiltonianError):
    pass


class ZeroTermError(HamiltonianError):
    pass


class DimensionMismatchError(HamiltonianError):
    pass


class DimensionError(ValueError):
    """Dimension too large for dense superoperator work."""


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string; the leftmost letter is the most significant qubit."""
    label = label.upper()
    if not label or any(c not in PAULI for c in label):
        raise HamiltonianParseError(f"invalid Pauli string {label!r}")
    return reduce(np.kron, (PAULI[c] for c in label))


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def check_superop_dim(d: int) -> None:
    if d > MAX_SUPEROP_DIM:
        raise DimensionError(f"dimension {d} exceeds {MAX_SUPEROP_DIM} for superoperator work")


@dataclass(frozen=True)
class HamTerm:
    weight: float
    op: np.ndarray
    label: str | None = None

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValueError("term weight must be nonnegative")
        op = np.asarray(self.op)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise DimensionMismatchError(f"term operator has shape {op.shape}")
        if np.abs(op - op.conj().T).max() > HERMITIAN_TOL:
            raise NonHermitianTermError(f"term {self.label or ''} is not Hermitian")
        if abs(spectral_norm(op) - 1.0) > NORM_TOL:
            raise ValueError("term operator must have unit spectral norm")


def make_term(matrix: np.ndarray, coeff: float = 1.0, label: str | None = None) -> HamTerm:
    """Normalise ``coeff * matrix`` into (spectral norm, unit-norm Hermitian op)."""
    m = coeff * np.asarray(matrix, dtype=complex)
    scale = np.abs(m).max() if m.size else 0.0
    if scale == 0.0:
        raise ZeroTermError(f"term {label or ''} is the zero matrix")
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL * max(1.0, scale):
        raise NonHermitianTermError(f"term {label or ''} is not Hermitian")
    m = 0.5 * (m + m.conj().T)
    unit = np.asarray(matrix, dtype=complex)
    unit = 0.5 * (unit + unit.conj().T)
    if abs(spectral_norm(unit) - 1.0) <= UNIT_SNAP and coeff != 0:
        # already unit norm: keep the weight exactly so reloading is idempotent
        return HamTerm(abs(float(coeff)), unit * np.sign(coeff), label)
    norm = spectral_norm(m)
    if norm < MIN_WEIGHT:
        raise ZeroTermError(f"term {label or ''} has spectral norm {norm:.3g} below {MIN_WEIGHT}")
    return HamTerm(norm, m / norm, label)


@dataclass(frozen=True)
class Hamiltonian:
    terms: tuple[HamTerm, ...]
    dim: int = field(init=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise HamiltonianError("a Hamiltonian needs at least one term")
        d = terms[0].op.shape[0]
        for t in terms:
            if t.op.shape != (d, d):
                raise DimensionMismatchError(f"term of dimension {t.op.shape[0]} in a dimension-{d} Hamiltonian")
            if t.weight < MIN_WEIGHT:
                raise ZeroTermError(f"term weight {t.weight:.3g} below {MIN_WEIGHT}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dim", d)

    @classmethod
    def from_ops(cls, weights: Iterable[float], ops: Iterable[np.ndarray], labels=None) -> "Hamiltonian":
        labels = list(labels) if labels is not None else None
        terms = [make_term(op, w, labels[i] if labels else None) for i, (w, op) in enumerate(zip(weights, ops))]
        return cls(tuple(terms))

    @classmethod
    def from_paulis(cls, coeffs: Iterable[float], strings: Iterable[str]) -> "Hamiltonian":
        strings = list(strings)
        return cls.from_ops(coeffs, [pauli_matrix(s) for s in strings], strings)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def L(self) -> int:
        return len(self.terms)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.array([t.weight for t in self.terms])
        w.setflags(write=False)
        return w

    @cached_property
    def lam(self) -> float:
        return float(np.sum(self.weights))

    @cached_property
    def lam_exact(self) -> Fraction:
        """Exact rational value of the float weights' sum."""
        return sum((Fraction(float(w)) for w in self.weights), Fraction(0))

    @cached_property
    def ops(self) -> np.ndarray:
        a = np.array([t.op for t in self.terms])
        a.setflags(write=False)
        return a

    @cached_property
    def eigh(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [np.linalg.eigh(t.op) for t in self.terms]

    @cached_property
    def comm_norms(self) -> np.ndarray:
        """``c[i, j] = ||[H_i, H_j]||`` for the unit-norm ops."""
        L, ops = self.L, self.ops
        c = np.zeros((L, L))
        for i in range(L):
            comm = ops[i] @ ops[i + 1:] - ops[i + 1:] @ ops[i]
            if len(comm):
                # anti-Hermitian, so i*comm is Hermitian
                ev = np.linalg.eigvalsh(1j * comm)
                c[i, i + 1:] = np.abs(ev).max(axis=-1)
        c = c + c.T
        c.setflags(write=False)
        return c

    def check_indices(self, subset: Iterable[int]) -> tuple[int, ...]:
        idx = tuple(sorted(set(int(i) for i in subset)))
        if idx and (idx[0] < 0 or idx[-1] >= self.L):
            raise IndexError(f"term index out of range 0..{self.L - 1}: {idx}")
        return idx

    def subset_lambda(self, subset: Iterable[int]) -> float:
        return lambda_of(self, subset)


def lambda_of(H: Hamiltonian, subset: Iterable[int]) -> float:
    """Sum of the weights in ``subset`` (0 for the empty set)."""
    idx = H.check_indices(subset)
    return float(np.sum(H.weights[list(idx)])) if idx else 0.0


def dense_sum(H: Hamiltonian, subset: Iterable[int] | None = None) -> np.ndarray:
    idx = range(H.L) if subset is None else H.check_indices(subset)
    out = np.zeros((H.dim, H.dim), dtype=complex)
    for i in idx:
        out += H.weights[i] * H.ops[i]
    return out


# -- partitions ---------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    a_indices: tuple[int, ...]
    b_indices: tuple[int, ...]

    def __post_init__(self):
        a, b = tuple(sorted(self.a_indices)), tuple(sorted(self.b_indices))
        if set(a) & set(b):
            raise ValueError("A and B must be disjoint")
        object.__setattr__(self, "a_indices", a)
        object.__setattr__(self, "b_indices", b)

    @classmethod
    def from_a(cls, H: Hamiltonian, a: Iterable[int]) -> "Partition":
        a = H.check_indices(a)
        return cls(a, tuple(i for i in range(H.L) if i not in set(a)))

    def validate(self, H: Hamiltonian) -> None:
        if set(self.a_indices) | set(self.b_indices) != set(range(H.L)):
            raise ValueError("partition must cover every term exactly once")


@dataclass(frozen=True)
class WeightedPartition:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(not 0.0 <= x <= 1.0 for x in w):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class ProbPartition:
    """Independent assignment probabilities; ``probs[i]`` is P(term i in A)."""

    probs: tuple[float, ...]
    chi: float
    sampling_set: tuple[int, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        if any(not 0.0 <= x <= 1.0 for x in p):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "sampling_set", tuple(sorted(self.sampling_set)))


# -- file format ----------------------------------------------------------------

_TOP_KEYS = {"dim", "terms"}
_TERM_KEYS = {"pauli_string", "matrix", "coeff", "label"}


def _parse_matrix(raw, d: int, where: str) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise HamiltonianParseError(f"{where}: matrix must be rows of [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise HamiltonianParseError(f"{where}: matrix must be rows of [re, im] pairs")
    if arr.shape[:2] != (d, d):
        raise DimensionMismatchError(f"{where}: matrix shape {arr.shape[:2]} does not match dim {d}")
    return arr[..., 0] + 1j * arr[..., 1]


def hamiltonian_from_dict(data: dict) -> Hamiltonian:
    if not isinstance(data, dict):
        raise HamiltonianParseError("top level must be an object")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise HamiltonianParseError(f"unknown fields {sorted(extra)}")
    if "dim" not in data or "terms" not in data:
        raise HamiltonianParseError("fields 'dim' and 'terms' are required")
    d = data["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise HamiltonianParseError("'dim' must be a positive integer")
    raw_terms = data["terms"]
    if not isinstance(raw_terms, list) or not raw_terms:
        raise HamiltonianParseError("'terms' must be a nonempty list")
    terms = []
    for k, t in enumerate(raw_terms):
        where = f"term {k}"
        if not isinstance(t, dict):
            raise HamiltonianParseError(f"{where}: must be an object")
        extra = set(t) - _TERM_KEYS
        if extra:
            raise HamiltonianParseError(f"{where}: unknown fields {sorted(extra)}")
        if ("pauli_string" in t) == ("matrix" in t):
            raise HamiltonianParseError(f"{where}: give exactly one of 'pauli_string' or 'matrix'")
        coeff = t.get("coeff", 1.0)
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool):
            raise HamiltonianParseError(f"{where}: 'coeff' must be a real number")
        label = t.get("label")
        if "pauli_string" in t:
            s = t["pauli_string"]
            if not isinstance(s, str):
                raise HamiltonianParseError(f"{where}: 'pauli_string' must be text")
            m = pauli_matrix(s)
            if m.shape[0] != d:
                raise DimensionMismatchError(f"{where}: Pauli string of length {len(s)} does not match dim {d}")
            label = label or s
        else:
            m = _parse_matrix(t["matrix"], d, where)
        if coeff == 0:
            raise ZeroTermError(f"{where}: zero coefficient")
        terms.append(make_term(m, float(coeff), label))
    return Hamiltonian(tuple(terms))


def load_hamiltonian(path: str | Path) -> Hamiltonian:
    """Read a JSON Hamiltonian file (schema in the README)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HamiltonianParseError(f"{path}: {exc}") from exc
    return hamiltonian_from_dict(data)


def hamiltonian_to_dict(H: Hamiltonian) -> dict:
    terms = []
    for t in H.terms:
        m = t.op
        terms.append({
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m],
            "coeff": float(t.weight),
            **({"label": t.label} if t.label else {}),
        })
    return {"dim": H.dim, "terms": terms}


def save_hamiltonian(H: Hamiltonian, path: str | Path) -> None:
    Path(path).write_text(json.dumps(hamiltonian_to_dict(H), indent=1), encoding="utf-8")


# -- generators used by tests and experiments ---------------------------------------

def random_hermitian_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    a = a + a.conj().T
    return a / spectral_norm(a)


def random_pauli_label(rng: np.random.Generator, n: int) -> str:
    while True:
        s = "".join(rng.choice(list("IXYZ"), size=n))
        if set(s) != {"I"}:
            return s


def random_hamiltonian(rng: np.random.Generator, n_qubits: int, L: int, lam: float = 1.0,
                       kind: str = "mixed") -> Hamiltonian:
    """Random ``L``-term Hamiltonian on ``n_qubits`` with total weight ``lam``.

    ``kind`` is ``"pauli"``, ``"dense"`` or ``"mixed"`` (each term picks one).
    """
    d = 2 ** n_qubits
    w = rng.uniform(0.1, 1.0, size=L)
    w *= lam / w.sum()
    ops, labels = [], []
    for _ in range(L):
        use_pauli = kind == "pauli" or (kind == "mixed" and rng.random() < 0.5)
        if use_pauli:
            s = random_pauli_label(rng, n_qubits)
            ops.append(pauli_matrix(s))
            labels.append(s)
        else:
            ops.append(random_hermitian_unit(rng, d))
            labels.append(None)
    return Hamiltonian.from_ops(w, ops, labels)
