import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from compsim.hamiltonian import Hamiltonian, pauli_matrix
from compsim.metrics import (BracketError, Superoperator, crossover_time, diamond_lower_bound, fit_scaling_exponent,
                             kraus_channel, unitary_channel, unitary_spectral_distance, unvec, vec)
from compsim.trotter import trotter_cost

X, Z = pauli_matrix("X"), pauli_matrix("Z")


def test_identity_channel():
    ch = unitary_channel(np.eye(2))
    np.testing.assert_allclose(ch.mat, Superoperator.identity(2).mat)
    phi = np.zeros(4)
    phi[[0, 3]] = 1 / np.sqrt(2)
    np.testing.assert_allclose(ch.choi(), np.outer(phi, phi), atol=1e-15)


def test_x_conjugation_on_pauli_basis():
    ch = unitary_channel(X)
    for P in (np.eye(2), X, pauli_matrix("Y"), Z):
        np.testing.assert_allclose(ch.apply(P), X @ P @ X, atol=1e-15)


def test_vec_round_trip():
    rho = np.arange(9).reshape(3, 3) + 1j
    np.testing.assert_array_equal(unvec(vec(rho), 3), rho)
    A, B = np.random.default_rng(0).normal(size=(2, 3, 3))
    np.testing.assert_allclose(vec(A @ rho @ B), np.kron(B.T, A) @ vec(rho))


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        unitary_channel(2 * np.eye(2))


def test_diamond_examples():
    assert diamond_lower_bound(unitary_channel(X), unitary_channel(X)) == pytest.approx(0, abs=1e-15)
    assert diamond_lower_bound(unitary_channel(np.eye(2)), unitary_channel(X)) == pytest.approx(2.0)
    assert unitary_spectral_distance(np.eye(2), -np.eye(2)) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        diamond_lower_bound(Superoperator.identity(2), Superoperator.identity(3))


@given(st.integers(0, 2 ** 31), st.sampled_from([2, 3, 4]))
def test_lower_bound_below_spectral_surrogate(seed, d):
    U, V = unitary_group.rvs(d, size=2, random_state=seed)
    lo = diamond_lower_bound(unitary_channel(U), unitary_channel(V))
    assert lo <= 2 + 1e-12
    assert lo <= unitary_spectral_distance(U, V) + 1e-12


@given(st.integers(0, 2 ** 31))
def test_composition_is_homomorphism(seed):
    U, V = unitary_group.rvs(3, size=2, random_state=seed)
    np.testing.assert_allclose(unitary_channel(U @ V).mat, (unitary_channel(U) @ unitary_channel(V)).mat, atol=1e-12)
    assert unitary_channel(U).then(unitary_channel(V)).is_cptp()


def test_kraus_depolarising_is_cptp():
    p = 0.3
    ks = [np.sqrt(1 - p) * np.eye(2)] + [np.sqrt(p / 3) * pauli_matrix(c) for c in "XYZ"]
    assert kraus_channel(ks).is_cptp()
    assert not Superoperator(2 * np.eye(4), 2).is_cptp()


def test_fit_exact_power_law():
    ts = [2.0 ** -j for j in range(6)]
    assert fit_scaling_exponent([(t, 5 * t ** 3) for t in ts]) == pytest.approx(3.0, abs=0.01)
    with pytest.raises(ValueError):
        fit_scaling_exponent([(t, -1.0) for t in ts])
    with pytest.raises(ValueError):
        fit_scaling_exponent([(1, 1), (1.1, 1), (1.2, 1), (1.3, 1)])
    with pytest.raises(ValueError):
        fit_scaling_exponent([(1, 1), (2, 1), (4, 1)])


def test_crossover_costs_agree(xz):
    t = crossover_time(xz, 1e-3, 2)
    tc = trotter_cost(xz, 2, t, 1e-3)
    c_qd = 4 * xz.lam ** 2 * t ** 2 / 1e-3
    assert tc.cost_relaxed == pytest.approx(c_qd, rel=1e-6)


def test_crossover_scales_linearly_with_epsilon(xz):
    ratios = [crossover_time(xz, eps, 4) / eps for eps in (1e-1, 1e-3, 1e-5)]
    assert max(ratios) == pytest.approx(min(ratios), rel=1e-8)


def test_crossover_commuting_has_no_bracket():
    H = Hamiltonian.from_paulis([1, 1], ["Z", "Z"])
    with pytest.raises(BracketError):
        crossover_time(H, 1e-3, 2)
