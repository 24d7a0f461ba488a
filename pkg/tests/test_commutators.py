import numpy as np
import pytest
from hypothesis import given

from compsim.commutators import (AlphaBudgetError, alpha_bound, alpha_exact, alpha_full, alpha_report,
                                 cross_bound, first_order_comm_sum)
from compsim.hamiltonian import Hamiltonian, Partition, pauli_matrix

from .conftest import ham_and_partition


def _alpha_literal(H, subset, order):
    """Direct enumeration of every tuple, without pruning or sharing."""
    import itertools
    total = 0.0
    for tup in itertools.product(subset, repeat=order + 1):
        m = H.ops[tup[0]]
        coef = H.weights[tup[0]]
        for g in tup[1:]:
            m = H.ops[g] @ m - m @ H.ops[g]
            coef *= H.weights[g]
        total += coef * np.linalg.norm(m, 2)
    return total


def test_xz_second_order(xz):
    # [X,[X,Z]] = [X,-2iY] = 4Z among the 8 triples; every nonvanishing nest has norm 4
    assert alpha_exact(xz, [0, 1], 2) == pytest.approx(16.0)
    nest = pauli_matrix("X") @ (-2j * pauli_matrix("Y")) - (-2j * pauli_matrix("Y")) @ pauli_matrix("X")
    assert np.linalg.norm(nest, 2) == pytest.approx(4.0)


def test_commuting_and_singleton_vanish():
    H = Hamiltonian.from_ops([1, 2, 0.5], [np.diag([1, -1, 1, 1.0]), np.diag([1, 1, -1, 1.0]), np.diag([-1, 1, 1, 1.0])])
    assert alpha_exact(H, range(3), 4) == 0.0
    assert alpha_exact(H, [1], 2) == 0.0


def test_budget_error(xz):
    with pytest.raises(AlphaBudgetError):
        alpha_exact(xz, [0, 1], 4, budget=31)
    value, exact = alpha_full(xz, 4, budget=31)
    assert not exact and value == pytest.approx(4 ** 2 * 2.0 ** 5)


def test_bound_examples():
    assert cross_bound(1.0, 0.0, 2) == 0.0
    assert cross_bound(0.0, 1.0, 2) == 0.0
    H = Hamiltonian.from_paulis([1.0], ["X"])
    rep = alpha_bound(H, Partition((0,), ()), 2)
    assert rep.alpha_A == pytest.approx(4.0) and rep.alpha_cross == 0.0


def test_xz_cross_needs_binomial_weights(xz):
    exact = alpha_report(xz, Partition((0,), (1,)), 2)
    assert exact.alpha_cross == pytest.approx(16.0)
    assert cross_bound(1.0, 1.0, 2) >= exact.alpha_cross


@given(ham_and_partition(max_L=4))
def test_pruned_enumeration_matches_literal(hp):
    H, _ = hp
    assert alpha_exact(H, range(H.L), 2) == pytest.approx(_alpha_literal(H, range(H.L), 2), rel=1e-10, abs=1e-12)


@given(ham_and_partition(max_L=4))
def test_exact_additivity_and_dominance(hp):
    H, part = hp
    for order in (2, 4):
        ex = alpha_report(H, part, order)
        assert ex.exact
        parts = ex.alpha_A + ex.alpha_B + ex.alpha_cross
        assert parts == pytest.approx(ex.alpha_H, rel=1e-9, abs=1e-12)
        bd = alpha_bound(H, part, order)
        assert ex.alpha_A <= bd.alpha_A * (1 + 1e-12) + 1e-12
        assert ex.alpha_cross <= bd.alpha_cross * (1 + 1e-12) + 1e-12
        assert min(ex.alpha_A, ex.alpha_B, ex.alpha_cross) >= 0


def test_first_order_sum(xz):
    assert first_order_comm_sum(xz, [0, 1], [0, 1]) == pytest.approx(4.0)
    assert first_order_comm_sum(xz, [], [0, 1]) == 0.0
    H = Hamiltonian.from_paulis([1, 1], ["Z", "ZZ"[:1]])
    assert first_order_comm_sum(H, [0, 1], [0, 1]) == 0.0


@given(ham_and_partition(max_L=4))
def test_ordered_pairs_double_unordered(hp):
    H, _ = hp
    s = first_order_comm_sum(H, range(H.L), range(H.L))
    unordered = sum(H.weights[i] * H.weights[j] * H.comm_norms[i, j] for i in range(H.L) for j in range(i + 1, H.L))
    assert s == pytest.approx(2 * unordered, rel=1e-12, abs=1e-14)
