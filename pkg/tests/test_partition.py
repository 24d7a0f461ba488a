import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from compsim.hamiltonian import Hamiltonian, Partition
from compsim.partition import (SampleCountError, chi_from, descend_weights, expected_cost_bound,
                               expected_lambda_b, expected_nb_squared, fixed_point_weight,
                               guarantee_lambda_b_bound, improvement_diagnostics, lambda_b_ratio_bound,
                               lambda_b_ratio_bound_alt, moment_bounds, moment_report, nb_for_c,
                               nb_lower_bound, nb_lower_bound_from, nb_parametrized, prob_partition,
                               prob_partition_weights, relaxed_weighted_cost, sample_indicators,
                               sample_partition, saturation_limit, saturation_point,
                               trotter_set_size_probs, weight_gradient)

from .conftest import ham_and_partition, hamiltonians

orders = st.sampled_from([2, 4, 6])
weight_lists = st.lists(st.floats(0.01, 5.0), min_size=1, max_size=12)


# -- first-order weight scheme ---------------------------------------------------------

@given(hamiltonians(min_L=2), st.integers(0, 2 ** 31), st.floats(1.0, 16.0))
def test_gradient_matches_finite_difference(H, seed, n_b):
    w = np.random.default_rng(seed).uniform(0.1, 0.9, H.L)
    g = weight_gradient(H, w, 1.0, 1e-2, n_b, L_A=H.L)
    step = 1e-6
    for m in range(H.L):
        e = np.zeros(H.L)
        e[m] = step
        fd = (relaxed_weighted_cost(H, w + e, 1.0, 1e-2, n_b, L_A=H.L)
              - relaxed_weighted_cost(H, w - e, 1.0, 1e-2, n_b, L_A=H.L)) / (2 * step)
        assert fd == pytest.approx(g[m], rel=1e-5, abs=1e-6 * max(1.0, np.abs(g).max()))


def test_gradient_sign_for_commuting_terms():
    H = Hamiltonian.from_paulis([0.7, 0.3], ["ZI", "IZ"])
    assert np.all(weight_gradient(H, [0.5, 0.5], 1.0, 1e-2, 4) < 0)
    assert np.all(weight_gradient(H, [1.0, 1.0], 1.0, 1e-2, 4) == 0)


def test_fixed_point_examples(xz):
    assert fixed_point_weight(xz, [0.5, 0.5], 0, 1) == (1.0, True)
    assert fixed_point_weight(xz, [0.5, 0.5], 0, 4) == (0.5, False)
    assert fixed_point_weight(xz, [0.5, 0.5], 0, 8) == (0.0, True)
    commuting = Hamiltonian.from_paulis([0.7, 0.3], ["ZI", "IZ"])
    assert fixed_point_weight(commuting, [1.0, 1.0], 1) == (1.0, False)


def test_descent_commuting_goes_to_trotter():
    H = Hamiltonian.from_paulis([0.5, 0.3, 0.2], ["ZI", "IZ", "ZZ"])
    res = descend_weights(H, 1.0, 1e-2, 4)
    assert np.allclose(res.weights.weights, 1.0)
    assert res.final_cost == 0.0 and res.converged


@given(hamiltonians(min_L=2), st.floats(1.0, 16.0))
def test_descent_never_increases_cost(H, n_b):
    res = descend_weights(H, 1.0, 1e-2, n_b, max_iters=500)
    assert res.final_cost <= res.initial_cost
    assert all(0.0 <= w <= 1.0 for w in res.weights.weights)


# -- probabilistic scheme ------------------------------------------------------------

def test_nb_lower_bound_first_even_order():
    for lam, t, eps in [(1.0, 1.0, 1e-3), (3.5, 0.2, 1e-2)]:
        assert nb_lower_bound_from(lam, t, eps, 2) == pytest.approx(math.sqrt(3 * lam * t / (8 * eps)))
    assert nb_lower_bound_from(0.0, 1.0, 1e-3, 2) == 0.0
    with pytest.raises(ValueError):
        nb_lower_bound_from(1.0, 1.0, 1e-3, 3)


def test_nb_parametrized(xz):
    lb = nb_lower_bound(xz, 1.0, 1e-3, 2)
    assert nb_parametrized(xz, 1.0, 1e-3, 2, 0) == math.ceil(4 * lb)
    assert nb_parametrized(xz, 1.0, 1e-3, 2, 1) == math.ceil(2.25 * lb)


@given(st.floats(0.1, 10), st.integers(1, 64), st.floats(0.1, 10), st.floats(1e-4, 1e-1), orders,
       st.floats(0.0, 4.0))
def test_threshold_parametrization(lam, L, t, eps, order, c):
    n_b = nb_for_c(lam, t, eps, order, c)
    assert chi_from(lam, L, t, eps, order, n_b) == pytest.approx(c * lam / L, rel=1e-9, abs=1e-12 * lam)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(1e-4, 1e-1), orders, st.floats(1.0, 1e4))
def test_ratio_bound_forms_agree(lam, t, eps, order, n_b):
    a = lambda_b_ratio_bound(lam, t, eps, order, n_b)
    assert lambda_b_ratio_bound_alt(lam, t, eps, order, n_b) == pytest.approx(a, rel=1e-12)
    assert guarantee_lambda_b_bound(lam, t, eps, order, n_b) >= a


def test_prob_partition_weights_example():
    pp = prob_partition_weights([1.0, 0.5, 0.2], 0.25)
    assert pp.probs == (0.75, 0.5, 0.0) and pp.sampling_set == (0, 1)
    exact = prob_partition_weights([0.5, 1.0], Fraction(1, 2))
    assert exact.sampling_set == (1,) and exact.probs == (0.0, 0.5)
    mb = moment_bounds([1.0, 0.5, 0.2], pp, 1.0, 2, 4)
    assert mb.e_LA == pytest.approx(1.25)
    assert mb.e_lambdaB == pytest.approx(0.7) == expected_lambda_b([1.0, 0.5, 0.2], pp)
    assert mb.size_S == 2 and mb.lambda_S == 1.5 and mb.lambda_Sc == pytest.approx(0.2)


@given(weight_lists, st.floats(0.0, 2.0))
def test_expected_lambda_b_matches_bound(h, chi):
    pp = prob_partition_weights(h, chi)
    mb = moment_bounds(h, pp, 1.0, 2, 4)
    assert mb.e_lambdaB == pytest.approx(expected_lambda_b(h, pp), rel=1e-12, abs=1e-12)
    assert mb.e_LA == pytest.approx(sum(pp.probs), abs=1e-9)
    assert mb.e_LA2_bound >= mb.e_LA ** 2 - 1e-9


def test_sample_count_error(xz):
    lb = nb_lower_bound(xz, 1.0, 1e-3, 2)
    with pytest.raises(SampleCountError):
        prob_partition(xz, 1.0, 1e-3, 2, 0.5 * lb)
    pp = prob_partition(xz, 1.0, 1e-3, 2, lb)
    assert pp.chi == 0.0 and pp.probs == (1.0, 1.0)


def test_sampling_frequencies_and_determinism():
    pp = prob_partition_weights([1.0, 0.5, 0.4, 0.1], 0.2)
    ind = sample_indicators(pp, 3, 20_000)
    freq = ind.mean(axis=0)
    se = np.sqrt(np.asarray(pp.probs) * (1 - np.asarray(pp.probs)) / 20_000)
    assert np.all(np.abs(freq - pp.probs) <= 4 * se + 1e-12)
    assert np.array_equal(sample_indicators(pp, 3, 5, first_trial=7), ind[7:12])
    part = sample_partition(pp, 3, trial=7)
    assert part.a_indices == tuple(np.flatnonzero(ind[7]))
    assert 3 in part.b_indices


@given(hamiltonians(max_qubits=2, min_L=2, max_L=4), st.sampled_from([2, 4]), st.floats(0.05, 1.0))
def test_moment_bounds_dominate_sampling(H, order, c):
    t, eps = 1.0, 1e-3
    n_b = nb_for_c(H.lam, t, eps, order, c)
    pp = prob_partition(H, t, eps, order, n_b)
    rep = moment_report(H, pp, t, order, n_b, n_trials=2000, seed=5)
    assert rep.mc["P"] is not None
    assert rep.dominated(), rep.comparisons()


def test_size_probabilities():
    assert trotter_set_size_probs([0.5, 0.5]) == (0.25, 0.5)
    assert trotter_set_size_probs([1.0, 1.0]) == (1.0, 0.0)
    pp = prob_partition_weights([1.0, 1.0], 0.5)
    assert expected_nb_squared(pp, 10) == pytest.approx(0.5 + 0.25 * 100)


def test_saturation_limits():
    assert saturation_limit(2) == pytest.approx(1.0)
    assert saturation_limit(4) == pytest.approx(10 ** 0.25 / 2 ** 0.75)
    h = 2.0 ** -np.arange(1, 9)
    small = saturation_point(h, 10.0, 1e-3, 2, 1e-12)
    assert small["ratio_trott_ref"] == pytest.approx(1.0, abs=0.01)
    large = saturation_point(h, 10.0, 1e-3, 2, 1e12)
    assert large["ratio_qd"] == pytest.approx(1.0, abs=0.02)
    mid = saturation_point(h, 10.0, 1e-3, 2, 1.0)
    pp = prob_partition_weights(h, mid["chi"])
    assert mid["e_cost_bound"] == expected_cost_bound(h, pp, 10.0, 1e-3, 2, mid["n_b"])


def test_improvement_diagnostics(xz):
    d = improvement_diagnostics(xz, Partition((0,), (1,)), 1.0, 0.1, 1, 4)
    assert d["la_ratio"] <= 1 and d["lambda_b_ratio"] == 0.5
    assert d["optimal_n_b"] == pytest.approx(math.sqrt(2))
    assert d["n_nz_sq"] == 0 and d["lambda_b_sq_over_commutator_scale"] is None
    d = improvement_diagnostics(xz, Partition((0,), (1,)), 10.0, 1e-3, 2, 4)
    assert d["beta_defined"] and "n_nz_sq" not in d
