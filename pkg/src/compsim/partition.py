"""Choosing which terms go to the Trotter partition A and which to QDrift partition B.

Two schemes are provided: projected gradient descent on per-term weights for the
first-order composite cost, and an independent random assignment whose
probabilities come from a threshold weight ``chi``.  The latter also comes with
analytic moment bounds for the quantities that enter the composite cost.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .commutators import DEFAULT_BUDGET, SubsetAlphaCache, cross_bound
from .composite import (composite_cost, first_order_terms, optimal_nb_first, relaxed_higher_order_cost)
from .hamiltonian import Hamiltonian, Partition, ProbPartition, WeightedPartition
from .rng import TAG_PARTITION, uniforms
from .trotter import stages, trotter_cost_relaxed_from


def _k(order: int) -> int:
    if order < 2 or order % 2:
        raise ValueError(f"order must be an even integer >= 2, got {order}")
    return order // 2


# -- first-order weight scheme -----------------------------------------------------

def _pair_matrix(H: Hamiltonian) -> np.ndarray:
    w = H.weights
    return w[:, None] * w[None, :] * H.comm_norms


def count_trotter_terms(weights: np.ndarray) -> int:
    return int(np.count_nonzero(np.asarray(weights) > 0))


def relaxed_weighted_cost(H: Hamiltonian, weights, t: float, epsilon: float, n_b: float,
                          L_A: float | None = None) -> float:
    """Relaxed first-order cost of a weighted split ``w_i h_i H_i + (1 - w_i) h_i H_i``.

    ``L_A`` defaults to the number of terms with a positive Trotter weight.
    """
    w = np.asarray(weights, dtype=float)
    c = _pair_matrix(H)
    v = 1.0 - w
    L_A = count_trotter_terms(w) if L_A is None else L_A
    trot = w @ c @ w + w @ c @ v
    qd = 4 * float(v @ H.weights) ** 2 / n_b
    return (L_A + n_b) * t ** 2 / epsilon * (trot + qd)


def weight_gradient(H: Hamiltonian, weights, t: float, epsilon: float, n_b: float,
                    L_A: float | None = None) -> np.ndarray:
    """Gradient of ``relaxed_weighted_cost`` with ``L_A`` held fixed."""
    w = np.asarray(weights, dtype=float)
    h = H.weights
    L_A = count_trotter_terms(w) if L_A is None else L_A
    comm = h * (H.comm_norms @ h)  # h_m sum_j h_j ||[H_j, H_m]||
    qd = 8 * h * float((1.0 - w) @ h) / n_b
    return (L_A + n_b) * t ** 2 / epsilon * (comm - qd)


def fixed_point_weight(H: Hamiltonian, weights, m: int, n_b: float = 1.0) -> tuple[float, bool]:
    """Coordinate-wise stationary weight for term ``m``; returns ``(w_m, clamped)``.

    ``w_m = 1 - sum_{i != m} (h_i / h_m) (N_B ||[H_i, H_m]|| / 8 - (1 - w_i))``;
    ``n_b = 1`` gives the single-sample form.
    """
    w = np.asarray(weights, dtype=float)
    h = H.weights
    mask = np.arange(H.L) != m
    raw = 1.0 - float(np.sum(h[mask] / h[m] * (n_b * H.comm_norms[mask, m] / 8 - (1.0 - w[mask]))))
    val = min(1.0, max(0.0, raw))
    return val, val != raw


@dataclass(frozen=True)
class DescentResult:
    weights: WeightedPartition
    initial_cost: float
    final_cost: float
    iterations: int
    converged: bool


def descend_weights(H: Hamiltonian, t: float, epsilon: float, n_b: float, init=None,
                    step: float | None = None, tol: float = 1e-8,
                    max_iters: int = 10_000) -> DescentResult:
    """Projected gradient descent on the relaxed weighted cost.

    A step is accepted only if the cost does not increase (halving otherwise), so
    the returned cost never exceeds the initial one.  After an accepted step the
    next trial step doubles.
    """
    L = H.L
    w = np.full(L, 0.5) if init is None else np.clip(np.asarray(init, dtype=float), 0.0, 1.0)

    def cost(x):
        return relaxed_weighted_cost(H, x, t, epsilon, n_b)

    c0 = c = cost(w)
    g = weight_gradient(H, w, t, epsilon, n_b)
    if step is None:
        gmax = float(np.abs(g).max())
        step = 0.1 / (L * gmax) if gmax > 0 else 1.0
    it, converged, trial = 0, False, step
    for it in range(1, max_iters + 1):
        g = weight_gradient(H, w, t, epsilon, n_b)
        pg = w - np.clip(w - g, 0.0, 1.0)
        if np.abs(pg).max() <= tol:
            converged = True
            break
        s = trial
        while True:
            cand = np.clip(w - s * g, 0.0, 1.0)
            c_new = cost(cand)
            if c_new <= c:
                break
            s *= 0.5
            if s < step * 1e-12:
                cand, c_new = w, c
                break
        if np.array_equal(cand, w):
            break
        w, c = cand, c_new
        trial = 2 * s  # let the step recover after backtracking
    return DescentResult(WeightedPartition(tuple(w)), c0, c, it, converged)


# -- probabilistic scheme --------------------------------------------------------------

def nb_lower_bound_from(lam: float, t: float, epsilon: float, order: int) -> float:
    k = _k(order)
    ups = stages(order)
    if lam == 0:
        return 0.0
    return ((lam * t / epsilon) ** (1 - 1 / (2 * k)) * ((2 * k + 1) / (2 * k + ups)) ** (1 / (2 * k))
            * 2 ** (1 - 1 / k) / ups ** (1 / (2 * k)))


def nb_lower_bound(H: Hamiltonian, t: float, epsilon: float, order: int) -> float:
    """Smallest ``N_B`` for which the threshold weight is nonnegative."""
    return nb_lower_bound_from(H.lam, t, epsilon, order)


def nb_parametrized(H: Hamiltonian, t: float, epsilon: float, order: int, c: float) -> int:
    """``ceil((1 + 2^-c)^2 N_B_min)``."""
    return math.ceil((1 + 2.0 ** -c) ** 2 * nb_lower_bound(H, t, epsilon, order))


def _sqrt_factor(lam: float, t: float, epsilon: float, order: int, n_b: float) -> float:
    k = _k(order)
    ups = stages(order)
    return math.sqrt(n_b * (epsilon / (lam * t)) ** (1 - 1 / (2 * k))
                     * ((2 * k + ups) / (2 * k + 1)) ** (1 / (2 * k)) * ups ** (1 / (2 * k)) / 2 ** (1 - 1 / k))


def chi_from(lam: float, L: int, t: float, epsilon: float, order: int, n_b: float) -> float:
    return lam / L * (_sqrt_factor(lam, t, epsilon, order, n_b) - 1)


def lambda_b_ratio_bound(lam: float, t: float, epsilon: float, order: int, n_b: float) -> float:
    """Upper bound on ``E[lambda_B] / lambda`` in the threshold's own form."""
    return _sqrt_factor(lam, t, epsilon, order, n_b)


def lambda_b_ratio_bound_alt(lam: float, t: float, epsilon: float, order: int, n_b: float) -> float:
    """The same quantity written as ``((4k+2U)/(2k+1))^(1/4k) sqrt(N_B 2^(1+1/2k) U^(1/2k) (eps/lam t)^(1-1/2k)) / 2``."""
    k = _k(order)
    ups = stages(order)
    return 0.5 * ((4 * k + 2 * ups) / (2 * k + 1)) ** (1 / (4 * k)) * math.sqrt(
        n_b * 2 ** (1 + 1 / (2 * k)) * ups ** (1 / (2 * k)) * (epsilon / (lam * t)) ** (1 - 1 / (2 * k)))


def guarantee_lambda_b_bound(lam: float, t: float, epsilon: float, order: int, n_b: float) -> float:
    """Looser stated bound ``(1/2) sqrt(((4k+2U)/(2k+1))^(1/2k) (2U)^(1+1/2k)) sqrt(N_B (eps/lam t)^(1-1/2k))``."""
    k = _k(order)
    ups = stages(order)
    return 0.5 * math.sqrt(((4 * k + 2 * ups) / (2 * k + 1)) ** (1 / (2 * k)) * (2 * ups) ** (1 + 1 / (2 * k))) \
        * math.sqrt(n_b * (epsilon / (lam * t)) ** (1 - 1 / (2 * k)))


class SampleCountError(ValueError):
    pass


def prob_partition_weights(weights: Sequence[float], chi) -> ProbPartition:
    """Probabilities ``p_i = 1 - min(chi / h_i, 1)`` for a threshold ``chi``.

    ``chi`` may be a ``Fraction``; membership of the sampling set is then decided
    exactly on the float weights.
    """
    h = [float(x) for x in weights]
    if isinstance(chi, Fraction):
        member = [chi < Fraction(x) for x in h]
        ratio = [float(chi / Fraction(x)) for x in h]
        chi_f = float(chi)
    else:
        chi_f = float(chi)
        ratio = [chi_f / x for x in h]
        member = [r < 1.0 for r in ratio]
    probs = tuple(1.0 - min(r, 1.0) if m else 0.0 for r, m in zip(ratio, member))
    S = tuple(i for i, m in enumerate(member) if m)
    return ProbPartition(probs, chi_f, S)


def prob_partition(H: Hamiltonian, t: float, epsilon: float, order: int, n_b: float) -> ProbPartition:
    lb = nb_lower_bound(H, t, epsilon, order)
    if n_b < lb * (1 - 1e-12):
        raise SampleCountError(f"N_B = {n_b} is below the lower bound {lb:.6g}")
    chi = max(0.0, chi_from(H.lam, H.L, t, epsilon, order, n_b))
    pp = prob_partition_weights(H.weights, chi)
    e_lb = expected_lambda_b(H.weights, pp)
    bound = H.lam * lambda_b_ratio_bound(H.lam, t, epsilon, order, n_b)
    if e_lb > bound * (1 + 1e-12):
        raise RuntimeError(f"expected QDrift weight {e_lb} exceeds its bound {bound}")
    return pp


def sample_indicators(pp: ProbPartition, seed: int, n_trials: int, first_trial: int = 0) -> np.ndarray:
    """Boolean ``(n_trials, L)`` array; ``True`` means the term joins A."""
    L = len(pp.probs)
    u = uniforms(seed, TAG_PARTITION, first_trial * L, (first_trial + n_trials) * L).reshape(n_trials, L)
    return u < np.asarray(pp.probs)[None, :]


def sample_partition(pp: ProbPartition, seed: int, trial: int = 0) -> Partition:
    ind = sample_indicators(pp, seed, 1, trial)[0]
    a = tuple(int(i) for i in np.flatnonzero(ind))
    b = tuple(int(i) for i in np.flatnonzero(~ind))
    return Partition(a, b)


# -- moments --------------------------------------------------------------------------

def expected_lambda_b(weights, pp: ProbPartition) -> float:
    h = np.asarray(weights, dtype=float)
    return float(((1.0 - np.asarray(pp.probs)) * h).sum())


@dataclass(frozen=True)
class MomentBounds:
    e_LA: float
    e_LA2_bound: float
    e_lambdaB: float
    e_Q_bound: float
    e_Q2_bound: float
    e_P_bound: float
    size_S: int
    lambda_S: float
    lambda_Sc: float


def moment_bounds(weights, pp: ProbPartition, t: float, order: int, n_b: float) -> MomentBounds:
    """Analytic moments for the independent assignment.

    The QDrift term is taken per outer-loop block, ``Q = 4 lambda_B^2 t^2 / N_B``.
    """
    k = _k(order)
    ups = stages(order)
    h = np.asarray(weights, dtype=float)
    lam = float(h.sum())
    chi = pp.chi
    S = list(pp.sampling_set)
    Sc = [i for i in range(len(h)) if i not in set(S)]
    nS = len(S)
    lam_S = float(h[S].sum()) if S else 0.0
    lam_Sc = float(h[Sc].sum()) if Sc else 0.0
    ratio_sum = float((chi / h[S]).sum()) if S else 0.0
    inner = chi * lam_S + (chi * nS + lam_Sc) ** 2
    return MomentBounds(
        e_LA=nS - ratio_sum,
        e_LA2_bound=nS ** 2 - nS * ratio_sum,
        e_lambdaB=chi * nS + lam_Sc,
        e_Q_bound=4 * t ** 2 / n_b * inner,
        e_Q2_bound=16 * t ** 4 * lam ** 2 / n_b ** 2 * inner,
        e_P_bound=(2 * ups) ** (2 + 2 * k) / (2 * k + 1) * t ** (2 * k + 1) * lam ** (2 * k) * max(lam_S - chi * nS, 0.0),
        size_S=nS, lambda_S=lam_S, lambda_Sc=lam_Sc,
    )


@dataclass(frozen=True)
class MomentReport:
    bounds: MomentBounds
    mc: dict = field(default_factory=dict)  # name -> (mean, standard error); P may be None
    n_trials: int = 0

    @property
    def e_LA(self):
        return self.bounds.e_LA

    def comparisons(self) -> dict[str, tuple[float, float, float, bool] | None]:
        """name -> (mc mean, bound, se, mean <= bound + 3 se)."""
        ref = {"LA2": self.bounds.e_LA2_bound, "lambdaB": self.bounds.e_lambdaB,
               "Q": self.bounds.e_Q_bound, "P": self.bounds.e_P_bound}
        out = {}
        for name, bound in ref.items():
            est = self.mc.get(name)
            if est is None:
                out[name] = None
                continue
            mean, se = est
            out[name] = (mean, bound, se, mean <= bound + 3 * se + 1e-12 * abs(bound))
        return out

    def dominated(self) -> bool:
        return all(v is None or v[3] for v in self.comparisons().values())

    def to_dict(self) -> dict:
        return {"bounds": asdict(self.bounds), "mc": self.mc, "n_trials": self.n_trials}


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def moment_report(H: Hamiltonian, pp: ProbPartition, t: float, order: int, n_b: float,
                  n_trials: int = 10_000, seed: int = 0, budget: int = DEFAULT_BUDGET) -> MomentReport:
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100")
    k = _k(order)
    ups = stages(order)
    bounds = moment_bounds(H.weights, pp, t, order, n_b)
    ind = sample_indicators(pp, seed, n_trials)
    h = H.weights
    L_A = ind.sum(axis=1).astype(float)
    lam_b = (~ind * h[None, :]).sum(axis=1)
    q = 4 * lam_b ** 2 * t ** 2 / n_b
    mc = {"LA2": _mean_se(L_A ** 2), "lambdaB": _mean_se(lam_b), "Q": _mean_se(q), "P": None}
    if H.L ** (order + 1) <= budget:
        cache = SubsetAlphaCache(H, order, budget)
        alpha_h = cache(range(H.L))
        pref = 4 * (t * ups) ** (2 * k + 1) / (2 * k + 1)
        p_by_key: dict[bytes, float] = {}
        P = np.empty(n_trials)
        for j, row in enumerate(ind):
            key = row.tobytes()
            if key not in p_by_key:
                a = tuple(np.flatnonzero(row))
                b = tuple(np.flatnonzero(~row))
                aa, ab = cache(a), cache(b)
                p_by_key[key] = pref * (ups * aa + max(alpha_h - aa - ab, 0.0))
            P[j] = p_by_key[key]
        mc["P"] = _mean_se(P)
    return MomentReport(bounds, mc, n_trials)


# -- expected composite cost and its two limits ------------------------------------------

def trotter_set_size_probs(probs: Sequence[float]) -> tuple[float, float]:
    """``(P(|B| = 0), P(|B| = 1))`` for independent assignments."""
    q0, q1 = 1.0, 0.0
    for p in probs:
        q1 = q1 * p + q0 * (1.0 - p)
        q0 = q0 * p
    return q0, q1


def expected_nb_squared(pp: ProbPartition, n_b: float) -> float:
    """``E[N_B^2]`` with zero samples for an empty B and one gate for a single-term B."""
    q0, q1 = trotter_set_size_probs(pp.probs)
    return q1 + max(0.0, 1.0 - q0 - q1) * n_b ** 2


def expected_cost_bound(weights, pp: ProbPartition, t: float, epsilon: float, order: int,
                        n_b: float) -> float:
    """``(sqrt E[L_A^2] + sqrt E[N_B^2]) (E[P]^(1/2k) / eps^(1/2k) + sqrt E[Q^2] / eps)``."""
    k = _k(order)
    m = moment_bounds(weights, pp, t, order, n_b)
    size = math.sqrt(max(m.e_LA2_bound, 0.0)) + math.sqrt(expected_nb_squared(pp, n_b))
    err = (m.e_P_bound / epsilon) ** (1 / (2 * k)) + math.sqrt(m.e_Q2_bound) / epsilon
    return size * err


def saturation_limit(order: int) -> float:
    """``U^(1/2k) / 2^(1 - 1/2k)``, the small-``c`` ratio to the Trotter reference."""
    k = _k(order)
    return stages(order) ** (1 / (2 * k)) / 2 ** (1 - 1 / (2 * k))


def trotter_reference(lam: float, L: int, t: float, epsilon: float, order: int) -> float:
    """Trotter cost in the form the saturation comparison uses.

    ``L (lam t)^(1+1/2k) eps^(-1/2k) U^(1+1/2k) 2^(2+1/2k) / (2k+1)^(1/2k)``.
    """
    k = _k(order)
    ups = stages(order)
    return (L * (lam * t) ** (1 + 1 / (2 * k)) / epsilon ** (1 / (2 * k))
            * ups ** (1 + 1 / (2 * k)) * 2 ** (2 + 1 / (2 * k)) / (2 * k + 1) ** (1 / (2 * k)))


def nb_for_c(lam: float, t: float, epsilon: float, order: int, c: float) -> float:
    """Real-valued ``(1 + c)^2 N_B_min``, which puts the threshold at ``c lam / L``."""
    return (1 + c) ** 2 * nb_lower_bound_from(lam, t, epsilon, order)


def saturation_point(weights, t: float, epsilon: float, order: int, c: float) -> dict:
    h = np.asarray(weights, dtype=float)
    lam, L = float(h.sum()), len(h)
    k = _k(order)
    n_b = nb_for_c(lam, t, epsilon, order, c)
    pp = prob_partition_weights(h, c * lam / L)
    e_cost = expected_cost_bound(h, pp, t, epsilon, order, n_b)
    c_qd = 4 * lam ** 2 * t ** 2 / epsilon
    c_ref = trotter_reference(lam, L, t, epsilon, order)
    c_full = trotter_cost_relaxed_from(L, 4.0 ** k * lam ** (2 * k + 1), order, t, epsilon)
    return {
        "c": c, "n_b": n_b, "chi": pp.chi, "size_S": len(pp.sampling_set),
        "e_cost_bound": e_cost, "c_qd": c_qd, "c_trott_ref": c_ref, "c_trott_cost": c_full,
        "ratio_qd": e_cost / c_qd, "ratio_trott_ref": e_cost / c_ref, "ratio_trott_cost": e_cost / c_full,
    }


# -- diagnostics --------------------------------------------------------------------------

def improvement_diagnostics(H: Hamiltonian, partition: Partition, t: float, epsilon: float,
                            order: int, n_b: float, budget: int = DEFAULT_BUDGET) -> dict:
    rep = composite_cost(H, partition, order, t, epsilon, int(math.ceil(n_b)), budget)
    k = max(1, order // 2)
    L, lam = H.L, H.lam
    L_A, lam_b, q_b = rep.l_a, rep.lambda_b, rep.q_B
    beta = rep.beta
    out = {
        "order": order, "t": t, "epsilon": epsilon, "n_b": n_b, "l_a": L_A, "L": L,
        "la_ratio": L_A * (1 - q_b) ** (1 / (2 * k)) / L,
        "lambda_b_ratio": lam_b / lam,
        "lambda_b_beta_ratio": (lam_b / (lam ** (1 / beta) * (math.sqrt(epsilon) / t) ** (1 - 1 / beta))
                                if beta else None),
        "nb_over_la": n_b / L_A if L_A else None,
        "nb_ratio": n_b * (1 - q_b) ** (1 / (2 * k)) / L,
        "beta": beta,
        "beta_defined": beta is not None,
        "cost_ratio": rep.c_comp / min(rep.c_trott, rep.c_qd),
        "q_B": q_b,
    }
    if order == 1:
        a = list(partition.a_indices)
        nz = int(np.count_nonzero(H.comm_norms[np.ix_(a, a)] > 1e-12)) if a else 0
        a_max = float(H.weights[a].max()) if a else 0.0
        out["n_nz_sq"] = nz
        out["n_nz_sq_over_la"] = nz / L_A if L_A else None
        out["lambda_b_sq_over_commutator_scale"] = (
            lam_b ** 2 * L_A ** 2 / (a_max ** 2 * nz ** 2) if nz else None)
        if lam_b > 0:
            try:
                out["optimal_n_b"] = optimal_nb_first(H, partition)
            except ValueError:
                out["optimal_n_b"] = None
    return out


def higher_order_trial_costs(ind: np.ndarray, h: np.ndarray, t: float, epsilon: float, order: int,
                             n_b: float) -> np.ndarray:
    """Relaxed composite cost per sampled partition using the 1-norm commutator bounds."""
    k = _k(order)
    ups = stages(order)
    L_A = ind.sum(axis=1)
    lam_a = (ind * h).sum(axis=1)
    lam_b = (~ind * h).sum(axis=1)
    out = np.empty(len(ind))
    for j in range(len(ind)):
        aa = 4.0 ** k * lam_a[j] ** (2 * k + 1)
        cr = cross_bound(lam_a[j], lam_b[j], order)
        P = t ** (2 * k + 1) * 4 * ups ** (2 * k + 1) / (2 * k + 1) * (ups * aa + cr)
        Q = 4 * ups * lam_b[j] ** 2 * t ** 2 / n_b if lam_b[j] > 0 else 0.0
        nb = n_b if lam_b[j] > 0 else 0.0
        out[j] = relaxed_higher_order_cost(int(L_A[j]), P, Q, order, epsilon, nb)
    return out


def first_order_split(H: Hamiltonian, partition: Partition) -> tuple[float, float]:
    return first_order_terms(H, partition)
