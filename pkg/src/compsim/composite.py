"""Composite channels: Trotter on partition A, QDrift on partition B.

The two partitions are interleaved by an outer product-formula schedule of the
same order as the inner Trotter formula.  Consecutive A blocks with no B block
between them are fused before compilation (``exp(iAx) exp(iAy) = exp(iA(x+y))``),
so an empty B reduces the channel to the plain Trotter formula.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable

import numpy as np

from .commutators import DEFAULT_BUDGET, AlphaReport, alpha_report, first_order_comm_sum
from .hamiltonian import Hamiltonian, Partition, dense_sum
from .metrics import Superoperator, unitary_channel
from .qdrift import qdrift_exact_channel, qdrift_sample
from .trotter import (GateSequence, _steps, check_order, expm_hermitian, stages, trotter_cost,
                      trotter_sequence, trotter_unitary)


def outer_loop_sequence(order: int, t: float) -> list[tuple[str, float]]:
    """Block schedule in application order; order 1 applies A then B."""
    check_order(order)
    return [("AB"[slot], x) for slot, x in _steps(2, order, t)]


def compiled_schedule(partition: Partition, order: int, t: float) -> list[tuple[str, float]]:
    """Outer schedule with empty blocks dropped and adjacent A blocks fused."""
    out: list[tuple[str, float]] = []
    for block, x in outer_loop_sequence(order, t):
        if block == "A" and not partition.a_indices:
            continue
        if block == "B" and not partition.b_indices:
            continue
        if block == "A" and out and out[-1][0] == "A":
            out[-1] = ("A", out[-1][1] + x)
        else:
            out.append((block, x))
    return out


@dataclass(frozen=True)
class CompositeParams:
    partition: Partition
    order: int
    t: float
    n_b: int = 1
    r: int = 1
    epsilon: float | None = None

    def __post_init__(self):
        check_order(self.order)
        if self.n_b < 1 or self.r < 1:
            raise ValueError("n_b and r must be >= 1")


def composite_segment_channel(H: Hamiltonian, partition: Partition, order: int, tau: float,
                              n_b: int) -> Superoperator:
    S = Superoperator.identity(H.dim)
    for block, x in compiled_schedule(partition, order, tau):
        if block == "A":
            step = unitary_channel(trotter_unitary(H, partition.a_indices, order, x))
        else:
            step = qdrift_exact_channel(H, partition.b_indices, x, n_b)
        S = step @ S
    return S


def composite_exact_channel(H: Hamiltonian, params: CompositeParams) -> Superoperator:
    params.partition.validate(H)
    seg = composite_segment_channel(H, params.partition, params.order, params.t / params.r, params.n_b)
    return seg.power(params.r)


def composite_sequence(H: Hamiltonian, params: CompositeParams, seed: int) -> GateSequence:
    """One sampled gate sequence of the composite channel (weighted-op convention)."""
    params.partition.validate(H)
    tau = params.t / params.r
    gates: list[tuple[int, float]] = []
    draw = 0
    w = H.weights
    for _ in range(params.r):
        for block, x in compiled_schedule(params.partition, params.order, tau):
            if block == "A":
                gates += trotter_sequence(H, params.partition.a_indices, params.order, x).gates
            else:
                qs = qdrift_sample(H, params.partition.b_indices, x, params.n_b, seed, start=draw)
                draw += params.n_b
                gates += [(i, y / w[i]) for i, y in qs.gates]
    return GateSequence(tuple(gates), params.t, H.dim, params.order)


def ideal_channel(H: Hamiltonian, t: float) -> Superoperator:
    return unitary_channel(expm_hermitian(dense_sum(H), t))


# -- cost model ----------------------------------------------------------------

@dataclass(frozen=True)
class CostReport:
    order: int
    t: float
    epsilon: float
    n_b: float
    l_a: int
    l_b: int
    lambda_a: float
    lambda_b: float
    r: int
    c_trott: int
    c_qd: int
    c_comp: int
    c_trott_relaxed: float
    c_qd_relaxed: float
    c_comp_relaxed: float
    c_comp_reexpressed: float | None
    P_t: float
    Q_t: float
    P_max: float | None
    q_B: float
    beta: float | None
    beta_relaxed: float | None
    exact_alpha: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _beta(c_qd: float, c_trott: float) -> float | None:
    if c_trott <= 1 or c_qd <= 0:
        return None
    return math.log(c_qd) / math.log(c_trott)


def _parts(H: Hamiltonian, partition: Partition):
    partition.validate(H)
    la = H.subset_lambda(partition.a_indices)
    lb = H.subset_lambda(partition.b_indices)
    return len(partition.a_indices), len(partition.b_indices), la, lb


def first_order_terms(H: Hamiltonian, partition: Partition) -> tuple[float, float]:
    """``(sum over ordered A-A pairs, sum over A-B pairs)`` of weighted commutator norms."""
    a, b = partition.a_indices, partition.b_indices
    return first_order_comm_sum(H, a, a), first_order_comm_sum(H, a, b)


def relaxed_first_order_cost(L_A: int, lam_b: float, s_aa: float, s_ab: float,
                             t: float, epsilon: float, n_b: float) -> float:
    q = 4 * lam_b ** 2 / n_b if lam_b > 0 else 0.0
    nb = n_b if lam_b > 0 else 0.0
    return (L_A + nb) * t ** 2 / epsilon * (s_aa + s_ab + q)


def first_order_cost(H: Hamiltonian, partition: Partition, t: float, epsilon: float,
                     n_b: int) -> CostReport:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    L_A, L_B, la, lb = _parts(H, partition)
    s_aa, s_ab = first_order_terms(H, partition)
    q = 4 * lb ** 2 / n_b if L_B else 0.0
    r_real = t ** 2 / epsilon * (s_aa + s_ab + q)
    r = max(1, math.ceil(r_real))
    nb = n_b if L_B else 0
    tc = trotter_cost(H, 1, t, epsilon)
    s_hh = first_order_comm_sum(H, range(H.L), range(H.L))
    s_bb = first_order_comm_sum(H, partition.b_indices, partition.b_indices)
    c_qd_relaxed = 4 * H.lam ** 2 * t ** 2 / epsilon
    c_qd = math.ceil(c_qd_relaxed)
    return CostReport(
        order=1, t=t, epsilon=epsilon, n_b=n_b, l_a=L_A, l_b=L_B, lambda_a=la, lambda_b=lb,
        r=r, c_trott=tc.cost, c_qd=c_qd, c_comp=(L_A + nb) * r,
        c_trott_relaxed=tc.cost_relaxed, c_qd_relaxed=c_qd_relaxed,
        c_comp_relaxed=(L_A + nb) * r_real, c_comp_reexpressed=None,
        P_t=t ** 2 * (s_aa + s_ab), Q_t=q * t ** 2, P_max=None,
        q_B=s_bb / s_hh if s_hh > 0 else 0.0,
        beta=_beta(c_qd, tc.cost), beta_relaxed=_beta(c_qd_relaxed, tc.cost_relaxed),
        exact_alpha=True,
    )


def product_error_P(alpha: AlphaReport, order: int, t: float) -> float:
    """``P(t) = t^(2k+1) 4 U^(2k+1) / (2k+1) (U alpha_A + alpha_cross)``."""
    ups = stages(order)
    return abs(t) ** (order + 1) * 4 * ups ** (order + 1) / (order + 1) * (ups * alpha.alpha_A + alpha.alpha_cross)


def qdrift_error_Q(lam_b: float, order: int, t: float, n_b: float) -> float:
    """``Q(t) = 4 U lambda_B^2 t^2 / N_B``."""
    return 4 * stages(order) * lam_b ** 2 * t ** 2 / n_b


def p_max(lam: float, order: int, t: float) -> float:
    ups = stages(order)
    return 2 * (order + ups) / (order + 1) * (2 * ups * lam * abs(t)) ** (order + 1)


def composite_segments_real(P: float, Q: float, order: int, epsilon: float) -> float:
    k = order // 2
    return (P / epsilon) ** (1 / (2 * k)) + Q / epsilon


def relaxed_higher_order_cost(L_A: int, P: float, Q: float, order: int, epsilon: float,
                              n_b: float) -> float:
    """``U (U L_A + N_B) ((P/eps)^(1/2k) + Q/eps)`` with real-valued ``N_B``."""
    ups = stages(order)
    return ups * (ups * L_A + n_b) * composite_segments_real(P, Q, order, epsilon)


def higher_order_cost(H: Hamiltonian, partition: Partition, order: int, t: float, epsilon: float,
                      n_b: int, budget: int = DEFAULT_BUDGET, alpha: AlphaReport | None = None) -> CostReport:
    check_order(order)
    if order < 2:
        raise ValueError("use first_order_cost for order 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    L_A, L_B, la, lb = _parts(H, partition)
    k = order // 2
    ups = stages(order)
    if alpha is None:
        alpha = alpha_report(H, partition, order, budget)
    P = product_error_P(alpha, order, t)
    Q = qdrift_error_Q(lb, order, t, n_b) if L_B else 0.0
    r_real = composite_segments_real(P, Q, order, epsilon)
    r = max(1, math.ceil(r_real))
    nb = n_b if L_B else 0
    tc = trotter_cost(H, order, t, epsilon, alpha=alpha.alpha_H)
    c_qd_relaxed = 4 * H.lam ** 2 * t ** 2 / epsilon
    c_qd = math.ceil(c_qd_relaxed)
    q_b = alpha.q_B
    reexp = None
    if L_B:
        inner = (tc.cost_relaxed * (1 - q_b) ** (1 / (2 * k)) / (ups ** (1 - 1 / (2 * k)) * H.L)
                 + c_qd_relaxed * ups * lb ** 2 / (n_b * H.lam ** 2))
        reexp = float(ups * (ups * L_A + nb) * max(1, math.ceil(inner)))
    return CostReport(
        order=order, t=t, epsilon=epsilon, n_b=n_b, l_a=L_A, l_b=L_B, lambda_a=la, lambda_b=lb,
        r=r, c_trott=tc.cost, c_qd=c_qd, c_comp=ups * (ups * L_A + nb) * r,
        c_trott_relaxed=tc.cost_relaxed, c_qd_relaxed=c_qd_relaxed,
        c_comp_relaxed=ups * (ups * L_A + nb) * r_real, c_comp_reexpressed=reexp,
        P_t=P, Q_t=Q, P_max=p_max(H.lam, order, t), q_B=q_b,
        beta=_beta(c_qd, tc.cost), beta_relaxed=_beta(c_qd_relaxed, tc.cost_relaxed),
        exact_alpha=alpha.exact,
    )


def composite_cost(H: Hamiltonian, partition: Partition, order: int, t: float, epsilon: float,
                   n_b: int, budget: int = DEFAULT_BUDGET) -> CostReport:
    if order == 1:
        return first_order_cost(H, partition, t, epsilon, n_b)
    return higher_order_cost(H, partition, order, t, epsilon, n_b, budget)


# -- optimal QDrift sample counts ---------------------------------------------------

class DegeneratePartitionError(ValueError):
    pass


def optimal_nb_first(H: Hamiltonian, partition: Partition) -> float:
    """Minimiser over ``N_B`` of the relaxed first-order cost: ``sqrt(4 lambda_B^2 L_A / S)``."""
    L_A, L_B, la, lb = _parts(H, partition)
    if lb == 0:
        return 0.0
    s_aa, s_ab = first_order_terms(H, partition)
    if s_aa + s_ab == 0:
        raise DegeneratePartitionError("A commutes internally and with B; the cost has no interior optimum")
    return math.sqrt(4 * lb ** 2 * L_A / (s_aa + s_ab))


def optimal_nb_higher(H: Hamiltonian, partition: Partition, order: int, t: float, epsilon: float,
                      budget: int = DEFAULT_BUDGET, alpha: AlphaReport | None = None) -> float:
    """Stationary point in ``N_B`` of the relaxed higher-order cost.

    ``N_B = 2 U lambda_B sqrt(L_A t^2 / (eps^(1-1/2k) P^(1/2k)))``.
    """
    L_A, L_B, la, lb = _parts(H, partition)
    if lb == 0:
        return 0.0
    if alpha is None:
        alpha = alpha_report(H, partition, order, budget)
    P = product_error_P(alpha, order, t)
    return optimal_nb_from(L_A, lb, P, order, t, epsilon)


def optimal_nb_from(L_A: int, lam_b: float, P: float, order: int, t: float, epsilon: float) -> float:
    if P <= 0:
        raise DegeneratePartitionError("P(t) = 0: no Trotter error to balance against")
    k = order // 2
    ups = stages(order)
    return 2 * ups * lam_b * math.sqrt(L_A * t ** 2 / (epsilon ** (1 - 1 / (2 * k)) * P ** (1 / (2 * k))))


# -- error decomposition -------------------------------------------------------------

def segment_error_terms(H: Hamiltonian, partition: Partition, order: int, tau: float,
                        n_b: int) -> dict[str, float]:
    """Measured pieces of the per-segment triangle inequality.

    ``measured`` is the entangled-input distance of one segment; the other three
    are upper estimates: worst A block and outer-loop error by ``2||U - V||`` and
    worst B block by ``d`` times the entangled-input distance.
    """
    from .metrics import diamond_lower_bound, diamond_upper_estimate, unitary_spectral_distance

    a, b = partition.a_indices, partition.b_indices
    ideal_seg = ideal_channel(H, tau)
    seg = composite_segment_channel(H, partition, order, tau, n_b)
    Ha, Hb = dense_sum(H, a), dense_sum(H, b)
    err_a = err_b = 0.0
    exact = np.eye(H.dim, dtype=complex)
    for block, x in compiled_schedule(partition, order, tau):
        if block == "A":
            err_a = max(err_a, unitary_spectral_distance(expm_hermitian(Ha, x), trotter_unitary(H, a, order, x)))
        else:
            err_b = max(err_b, diamond_upper_estimate(unitary_channel(expm_hermitian(Hb, x)),
                                                      qdrift_exact_channel(H, b, x, n_b)))
    for block, x in outer_loop_sequence(order, tau):
        exact = expm_hermitian(Ha if block == "A" else Hb, x) @ exact
    outer = unitary_spectral_distance(expm_hermitian(dense_sum(H), tau), exact)
    return {
        "measured": diamond_lower_bound(seg, ideal_seg),
        "a_error": err_a,
        "b_error": err_b,
        "outer_error": outer,
        "bound": stages(order) * (err_a + err_b) + outer,
    }
