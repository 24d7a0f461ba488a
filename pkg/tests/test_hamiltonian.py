import json

import numpy as np
import pytest
from hypothesis import given

from compsim.hamiltonian import (DimensionMismatchError, Hamiltonian, HamiltonianParseError,
                                 NonHermitianTermError, Partition, ProbPartition, WeightedPartition,
                                 ZeroTermError, dense_sum, hamiltonian_from_dict, lambda_of,
                                 load_hamiltonian, pauli_matrix, save_hamiltonian)

from .conftest import ham_and_partition, hamiltonians


def _write(tmp_path, data, name="h.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_single_pauli_file(tmp_path):
    H = load_hamiltonian(_write(tmp_path, {"dim": 2, "terms": [{"pauli_string": "X"}]}))
    assert (H.L, H.lam, H.dim) == (1, 1.0, 2)


def test_weights_one_two_three(tmp_path):
    terms = [{"pauli_string": s, "coeff": c} for s, c in [("X", 1), ("Y", 2), ("Z", 3)]]
    H = load_hamiltonian(_write(tmp_path, {"dim": 2, "terms": terms}))
    assert H.lam == 6.0
    assert lambda_of(H, [0, 1]) == 3.0


def test_matrix_term_is_normalised(tmp_path):
    two_z = [[[2, 0], [0, 0]], [[0, 0], [-2, 0]]]
    H = load_hamiltonian(_write(tmp_path, {"dim": 2, "terms": [{"matrix": two_z}]}))
    assert H.weights[0] == pytest.approx(2.0, abs=1e-14)
    np.testing.assert_allclose(H.ops[0], pauli_matrix("Z"), atol=1e-14)


def test_negative_coefficient_moves_sign_into_op():
    H = Hamiltonian.from_paulis([-0.5], ["Z"])
    assert H.weights[0] == pytest.approx(0.5)
    np.testing.assert_allclose(H.ops[0], -pauli_matrix("Z"))


def test_pauli_ordering_leftmost_is_most_significant():
    np.testing.assert_array_equal(pauli_matrix("ZI"), np.kron(pauli_matrix("Z"), np.eye(2)))


@pytest.mark.parametrize("data, err", [
    ({"dim": 2, "terms": [{"pauli_string": "X"}], "extra": 1}, HamiltonianParseError),
    ({"dim": 2, "terms": [{"pauli_string": "X", "bogus": 1}]}, HamiltonianParseError),
    ({"dim": 2, "terms": []}, HamiltonianParseError),
    ({"dim": 2, "terms": [{"pauli_string": "XX"}]}, DimensionMismatchError),
    ({"dim": 2, "terms": [{"matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}]}, NonHermitianTermError),
    ({"dim": 2, "terms": [{"matrix": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]}]}, ZeroTermError),
    ({"dim": 2, "terms": [{"pauli_string": "X", "coeff": 0}]}, ZeroTermError),
    ({"dim": 2, "terms": [{"pauli_string": "X", "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}]},
     HamiltonianParseError),
])
def test_distinct_diagnostics(data, err):
    with pytest.raises(err):
        hamiltonian_from_dict(data)


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(HamiltonianParseError):
        load_hamiltonian(p)


def test_lambda_of_exp_decay():
    L = 20
    H = Hamiltonian.from_ops(2.0 ** -np.arange(1, L + 1), [pauli_matrix("Z")] * L)
    assert H.lam == pytest.approx(1 - 2.0 ** -L, rel=1e-15)
    assert lambda_of(H, []) == 0.0
    with pytest.raises(IndexError):
        lambda_of(H, [L])


def test_dense_sum_examples(xz):
    assert np.all(dense_sum(xz, []) == 0)
    S = dense_sum(xz)
    assert np.linalg.norm(S, 2) == pytest.approx(np.sqrt(2))
    H1 = Hamiltonian.from_paulis([0.3], ["Y"])
    np.testing.assert_allclose(dense_sum(H1), 0.3 * pauli_matrix("Y"))


@given(ham_and_partition())
def test_partition_additivity(hp):
    H, part = hp
    la, lb = lambda_of(H, part.a_indices), lambda_of(H, part.b_indices)
    assert la + lb == pytest.approx(H.lam, rel=1e-12)
    np.testing.assert_allclose(dense_sum(H, part.a_indices) + dense_sum(H, part.b_indices),
                               dense_sum(H), atol=1e-12)


@given(hamiltonians())
def test_normalisation_is_idempotent(tmp_path_factory, H):
    p = tmp_path_factory.mktemp("h") / "h.json"
    save_hamiltonian(H, p)
    H2 = load_hamiltonian(p)
    np.testing.assert_allclose(H2.weights, H.weights, rtol=1e-12)
    save_hamiltonian(H2, p)
    np.testing.assert_array_equal(load_hamiltonian(p).weights, H2.weights)


def test_partition_types_validate():
    with pytest.raises(ValueError):
        Partition((0, 1), (1,))
    H = Hamiltonian.from_paulis([1, 1, 1], ["X", "Y", "Z"])
    with pytest.raises(ValueError):
        Partition((0,), (1,)).validate(H)
    with pytest.raises(ValueError):
        WeightedPartition((0.5, 1.2))
    with pytest.raises(ValueError):
        ProbPartition((-0.1,), 0.0, ())
