import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from compsim.hamiltonian import Hamiltonian, random_hamiltonian

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


@pytest.fixture
def xz() -> Hamiltonian:
    return Hamiltonian.from_paulis([1.0, 1.0], ["X", "Z"])


@st.composite
def hamiltonians(draw, max_qubits: int = 2, max_L: int = 4, min_L: int = 1):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    n = draw(st.integers(1, max_qubits))
    L = draw(st.integers(min_L, max_L))
    kind = draw(st.sampled_from(["pauli", "dense", "mixed"]))
    lam = draw(st.floats(0.2, 2.0))
    return random_hamiltonian(np.random.default_rng(seed), n, L, lam=lam, kind=kind)


@st.composite
def ham_and_partition(draw, max_qubits: int = 2, max_L: int = 4, min_L: int = 1):
    from compsim.hamiltonian import Partition

    H = draw(hamiltonians(max_qubits, max_L, min_L))
    mask = draw(st.lists(st.booleans(), min_size=H.L, max_size=H.L))
    a = tuple(i for i, m in enumerate(mask) if m)
    return H, Partition.from_a(H, a)


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
