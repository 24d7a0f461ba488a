"""Experiment drivers: exponentially decaying weights, saturation sweep, crossover sweep.

Each driver returns a list of row dicts with a fixed column order plus a dict of
named checks, so the CLI can emit them directly and tests can assert on them.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .metrics import crossover_time_from
from .partition import (expected_cost_bound, higher_order_trial_costs, moment_bounds, nb_for_c,
                        nb_lower_bound_from, prob_partition_weights, sample_indicators,
                        saturation_limit, saturation_point)
from .qdrift import qdrift_cost_from
from .rng import ordered_map
from .trotter import stages, trotter_cost_relaxed_from

EXP_DECAY_COLUMNS = [
    "L", "c", "order", "epsilon", "t_star", "lambda", "n_b", "chi", "size_S", "size_S_predicted",
    "e_LA", "mean_LA_over_L", "se_LA_over_L", "mean_lambdaB_over_lambda", "se_lambdaB_over_lambda",
    "tail_freq", "tail_se", "tail_bound", "mean_cost_ratio", "c_trott", "c_qd",
]
SATURATION_COLUMNS = [
    "c", "n_b", "chi", "size_S", "e_cost_bound", "c_qd", "c_trott_ref", "c_trott_cost",
    "ratio_qd", "ratio_trott_ref", "ratio_trott_cost",
]
CROSSOVER_COLUMNS = ["epsilon", "t_star", "t_star_over_epsilon", "c_trott", "c_qd", "rel_gap"]


def alpha_one_norm(lam: float, order: int) -> float:
    return 4.0 ** (order // 2) * lam ** (order + 1)


def exp_decay_weights(L: int) -> np.ndarray:
    return 2.0 ** -np.arange(1, L + 1)


def _exact_threshold(L: int, c: float) -> Fraction:
    """``2^-c lambda / L`` with ``lambda = 1 - 2^-L`` held exactly (integer ``c`` only)."""
    if c != int(c):
        raise ValueError("the exact threshold needs an integer c")
    lam = Fraction(1) - Fraction(1, 2 ** L)
    return Fraction(2) ** -int(c) * lam / L


def predicted_size_S(L: int, c: int) -> int:
    """``floor(c + log2 L - log2 lambda)`` evaluated exactly."""
    lam = Fraction(1) - Fraction(1, 2 ** L)
    x = Fraction(2) ** int(c) * L / lam
    m = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** (m + 1) <= x:
        m += 1
    while Fraction(2) ** m > x:
        m -= 1
    return m


def exp_decay_row(L: int, c: int, epsilon: float, order: int, trials: int, seed: int) -> dict:
    h = exp_decay_weights(L)
    lam = float(h.sum())
    alpha = alpha_one_norm(lam, order)
    t_star = crossover_time_from(lam, L, alpha, epsilon, order)
    chi = _exact_threshold(L, c)
    pp = prob_partition_weights(h, chi)
    n_b = nb_for_c(lam, t_star, epsilon, order, 2.0 ** -c)
    mb = moment_bounds(h, pp, t_star, order, n_b)
    ind = sample_indicators(pp, seed + L, trials)
    la = ind.sum(axis=1).astype(float)
    lb = (~ind * h).sum(axis=1)
    tail = (np.abs(la - mb.e_LA) > mb.e_LA).astype(float)
    ratios = higher_order_trial_costs(ind, h, t_star, epsilon, order, n_b)
    c_tr = trotter_cost_relaxed_from(L, alpha, order, t_star, epsilon)
    c_qd = 4 * lam ** 2 * t_star ** 2 / epsilon
    sq = math.sqrt(trials)
    return {
        "L": L, "c": c, "order": order, "epsilon": epsilon, "t_star": t_star, "lambda": lam,
        "n_b": n_b, "chi": float(chi), "size_S": len(pp.sampling_set), "size_S_predicted": predicted_size_S(L, c),
        "e_LA": mb.e_LA, "mean_LA_over_L": float(la.mean() / L), "se_LA_over_L": float(la.std(ddof=1) / L / sq),
        "mean_lambdaB_over_lambda": float(lb.mean() / lam), "se_lambdaB_over_lambda": float(lb.std(ddof=1) / lam / sq),
        "tail_freq": float(tail.mean()), "tail_se": float(tail.std(ddof=1) / sq),
        "tail_bound": 2 * math.exp(-mb.e_LA / 3),
        "mean_cost_ratio": float(ratios.mean() / min(c_tr, c_qd)), "c_trott": c_tr, "c_qd": c_qd,
    }


def exp_decay_experiment(l_grid: Sequence[int], c: int = 1, epsilon: float = 1e-3, order: int = 2,
                         trials: int = 10_000, seed: int = 0) -> tuple[list[dict], dict[str, bool]]:
    rows = ordered_map(lambda L: exp_decay_row(L, c, epsilon, order, trials, seed), list(l_grid))
    la = [r["mean_LA_over_L"] for r in rows]
    lb = [r["mean_lambdaB_over_lambda"] for r in rows]
    checks = {
        "size_S_matches": all(r["size_S"] == r["size_S_predicted"] for r in rows),
        "LA_over_L_decreasing": all(x > y for x, y in zip(la, la[1:])),
        "lambdaB_over_lambda_decreasing": all(x > y for x, y in zip(lb, lb[1:])),
        "chernoff_tail": all(r["tail_freq"] <= r["tail_bound"] + 3 * r["tail_se"] for r in rows),
    }
    return rows, checks


def saturation_experiment(weights, t: float, epsilon: float, order: int,
                          c_grid: Sequence[float]) -> tuple[list[dict], dict[str, bool]]:
    """Sweep ``c``; the smallest ``c`` is compared with the Trotter limit, the largest with QDrift."""
    c_grid = sorted(c_grid)
    rows = [saturation_point(weights, t, epsilon, order, c) for c in c_grid]
    limit = saturation_limit(order)
    checks = {
        "small_c_trotter_limit": abs(rows[0]["ratio_trott_ref"] - limit) <= 0.01,
        "large_c_qdrift_limit": abs(rows[-1]["ratio_qd"] - 1.0) <= 0.02,
        "limit_at_most_1.12": limit <= 1.12,
    }
    return rows, checks


def crossover_experiment(lam: float, L: int, alpha: float, order: int,
                         eps_grid: Sequence[float]) -> tuple[list[dict], dict[str, bool]]:
    rows = []
    for eps in eps_grid:
        t = crossover_time_from(lam, L, alpha, eps, order)
        c_tr = trotter_cost_relaxed_from(L, alpha, order, t, eps)
        c_qd = 4 * lam ** 2 * t ** 2 / eps
        rows.append({"epsilon": eps, "t_star": t, "t_star_over_epsilon": t / eps,
                     "c_trott": c_tr, "c_qd": c_qd, "rel_gap": abs(c_tr - c_qd) / c_qd})
    ratio = [r["t_star_over_epsilon"] for r in rows]
    checks = {
        "costs_agree": all(r["rel_gap"] <= 1e-6 for r in rows),
        "t_star_linear_in_epsilon": max(ratio) - min(ratio) <= 1e-6 * max(ratio),
    }
    return rows, checks
