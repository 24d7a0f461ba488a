import pytest

from compsim.experiments import (CROSSOVER_COLUMNS, EXP_DECAY_COLUMNS, SATURATION_COLUMNS, crossover_experiment,
                                 exp_decay_experiment, exp_decay_weights, predicted_size_S,
                                 saturation_experiment)


def test_predicted_size_values():
    assert [predicted_size_S(L, 1) for L in (16, 32, 64, 128, 256)] == [5, 6, 7, 8, 9]
    assert predicted_size_S(8, 0) == 3
    # lambda = 1 - 2^-L pushes 2^c L / lambda just above a power of two
    assert predicted_size_S(1, 0) == 1


def test_exp_decay_small_run():
    rows, checks = exp_decay_experiment([16, 32, 64], c=1, trials=2000, seed=1)
    assert all(checks.values()), checks
    assert [r["size_S"] for r in rows] == [5, 6, 7]
    assert set(rows[0]) == set(EXP_DECAY_COLUMNS)
    again, _ = exp_decay_experiment([16, 32, 64], c=1, trials=2000, seed=1)
    assert again == rows


def test_saturation_sweep():
    rows, checks = saturation_experiment(exp_decay_weights(8), 10.0, 1e-3, 2, [1e12, 1.0, 1e-12])
    assert all(checks.values()), checks
    assert [r["c"] for r in rows] == [1e-12, 1.0, 1e12]
    assert set(rows[0]) == set(SATURATION_COLUMNS)


def test_crossover_sweep():
    rows, checks = crossover_experiment(2.0, 4, 64.0, 2, [1e-1, 1e-2, 1e-3])
    assert all(checks.values()), checks
    assert set(rows[0]) == set(CROSSOVER_COLUMNS)
    assert rows[1]["t_star"] == pytest.approx(rows[0]["t_star"] / 10, rel=1e-6)
