"""Numerical checks of every bound and identity against exact desk-scale channels.

Each check draws its instances from a fixed seed and returns a ``CheckResult``;
the CLI ``verify`` command and the acceptance tests share these functions.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import experiments
from .commutators import alpha_report
from .composite import (CompositeParams, composite_cost, composite_exact_channel, ideal_channel,
                        first_order_terms, optimal_nb_first, optimal_nb_higher, product_error_P,
                        qdrift_error_Q, relaxed_first_order_cost, relaxed_higher_order_cost)
from .framework import (multiproduct_coeffs, multiproduct_error_check, qdrift_instance,
                        randomized_trotter_channel, randomized_trotter_template, template_channel)
from .hamiltonian import Hamiltonian, Partition, dense_sum, random_hamiltonian
from .metrics import diamond_lower_bound, fit_scaling_exponent, unitary_spectral_distance
from .partition import (descend_weights, guarantee_lambda_b_bound, lambda_b_ratio_bound,
                        lambda_b_ratio_bound_alt, moment_report, nb_lower_bound, prob_partition,
                        relaxed_weighted_cost, weight_gradient)
from .qdrift import qdrift_error_bound, qdrift_exact_channel
from .rng import TAG_INSTANCES, stream
from .trotter import expm_hermitian, trotter_channel, trotter_error_bound, trotter_unitary

# tolerance for floating-point noise when an exact bound is compared with a measurement
SLACK = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    n_checked: int
    n_violations: int = 0
    worst: float = 0.0  # largest measured / allowed ratio, or largest deviation
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        return (f"{'PASS' if self.passed else 'FAIL'} {self.name}: checked={self.n_checked} "
                f"violations={self.n_violations} worst={self.worst:.6g}")


def _rng(seed: int, check_id: int) -> np.random.Generator:
    return stream(seed, TAG_INSTANCES, check_id)


def _random_instance(rng: np.random.Generator, max_qubits: int = 3, max_L: int = 4) -> Hamiltonian:
    n = int(rng.integers(1, max_qubits + 1))
    L = int(rng.integers(2, max_L + 1))
    kind = ["pauli", "dense", "mixed"][int(rng.integers(3))]
    return random_hamiltonian(rng, n, L, lam=1.0, kind=kind)


def _random_partition(rng: np.random.Generator, L: int) -> Partition:
    mask = rng.random(L) < 0.5
    return Partition(tuple(np.flatnonzero(mask).tolist()), tuple(np.flatnonzero(~mask).tolist()))


# -- bound validity --------------------------------------------------------------------

def check_trotter_bounds(n_instances: int = 200, seed: int = 0) -> CheckResult:
    """``2 ||exp(iHt) - S(t/r)^r|| <= bound`` for orders 1, 2, 4 and ``r`` in 1, 2, 4."""
    rng = _rng(seed, 1)
    worst, bad, n = 0.0, 0, 0
    for _ in range(n_instances):
        H = _random_instance(rng)
        t = float(rng.uniform(0.05, 1.0)) / H.lam
        order = int(rng.choice([1, 2, 4]))
        exact = expm_hermitian(dense_sum(H), t)
        for r in (1, 2, 4):
            meas = unitary_spectral_distance(exact, trotter_unitary(H, None, order, t, r))
            bound = trotter_error_bound(H, None, order, t, r)
            n += 1
            if bound > 0:
                worst = max(worst, meas / bound)
            if meas > bound + SLACK:
                bad += 1
    return CheckResult("trotter_bound_validity", bad == 0, n, bad, worst)


def check_qdrift_bounds(n_instances: int = 100, seed: int = 0) -> CheckResult:
    rng = _rng(seed, 2)
    worst, bad = 0.0, 0
    for _ in range(n_instances):
        H = _random_instance(rng)
        t = float(rng.uniform(0.05, 1.0))
        N = int(rng.integers(1, 17))
        meas = diamond_lower_bound(qdrift_exact_channel(H, None, t, N), ideal_channel(H, t))
        bound = qdrift_error_bound(H.lam, t, N)
        worst = max(worst, meas / bound)
        bad += meas > bound + SLACK
    return CheckResult("qdrift_bound_validity", bad == 0, n_instances, int(bad), worst)


def check_composite_compliance(n_instances: int = 100, seed: int = 0) -> CheckResult:
    """Channels built with the segment count from the cost model stay within ``epsilon``."""
    rng = _rng(seed, 3)
    worst, bad = 0.0, 0
    for _ in range(n_instances):
        H = _random_instance(rng)
        part = _random_partition(rng, H.L)
        order = int(rng.choice([1, 2, 4]))
        t = float(rng.uniform(0.1, 1.0))
        eps = float(10 ** rng.uniform(-2.5, -1))
        n_b = int(rng.integers(1, 11))
        rep = composite_cost(H, part, order, t, eps, n_b)
        params = CompositeParams(part, order, t, n_b=n_b, r=rep.r, epsilon=eps)
        meas = diamond_lower_bound(composite_exact_channel(H, params), ideal_channel(H, t))
        worst = max(worst, meas / eps)
        bad += meas > eps + SLACK
    return CheckResult("composite_epsilon_compliance", bad == 0, n_instances, int(bad), worst)


def check_collapse(n_instances: int = 20, seed: int = 0) -> CheckResult:
    """Empty B gives the Trotter channel; empty A at first order gives the QDrift channel."""
    rng = _rng(seed, 4)
    worst = 0.0
    for _ in range(n_instances):
        H = _random_instance(rng)
        t = float(rng.uniform(0.1, 1.0))
        r = int(rng.integers(1, 4))
        n_b = int(rng.integers(1, 5))
        everything = tuple(range(H.L))
        for order in (1, 2, 4):
            comp = composite_exact_channel(H, CompositeParams(Partition(everything, ()), order, t, n_b, r))
            ref = trotter_channel(H, None, order, t, r)
            worst = max(worst, diamond_lower_bound(comp, ref))
        comp = composite_exact_channel(H, CompositeParams(Partition((), everything), 1, t, n_b, r))
        ref = qdrift_exact_channel(H, None, t, r * n_b)
        worst = max(worst, diamond_lower_bound(comp, ref))
    return CheckResult("collapse_exactness", worst <= 1e-10, n_instances, int(worst > 1e-10), worst)


# -- scaling exponents ---------------------------------------------------------------------

SCALING_TIMES = [2.0 ** -j for j in range(6, 0, -1)]


def check_scaling(seed: int = 0) -> CheckResult:
    H = Hamiltonian.from_paulis([1.0, 1.0], ["X", "Z"])
    Hs = dense_sum(H)
    slopes = {}
    ok = True
    for order in (2, 4):
        pts = [(t, unitary_spectral_distance(expm_hermitian(Hs, t), trotter_unitary(H, None, order, t)))
               for t in SCALING_TIMES]
        slopes[f"trotter_order_{order}"] = s = fit_scaling_exponent(pts)
        ok &= s >= order - 0.3
    t = 0.5
    ideal = ideal_channel(H, t)
    ns = [2 ** j for j in range(3, 9)]
    pts = [(N, diamond_lower_bound(qdrift_exact_channel(H, None, t, N), ideal)) for N in ns]
    slopes["qdrift_vs_N"] = s = fit_scaling_exponent(pts)
    ok &= abs(s + 1) <= 0.1
    worst = max(abs(slopes["qdrift_vs_N"] + 1), *(order - 0.3 - slopes[f"trotter_order_{order}"] for order in (2, 4)))
    return CheckResult("scaling_exponents", bool(ok), 3, 0 if ok else 1, worst, slopes)


# -- probabilistic scheme --------------------------------------------------------------------

def check_saturation(seed: int = 0) -> CheckResult:
    rng = _rng(seed, 6)
    weights = rng.uniform(0.1, 1.0, 6)
    weights /= weights.sum()
    detail, ok = {}, True
    worst = 0.0
    for order in (2, 4, 6, 8):
        rows, checks = experiments.saturation_experiment(weights, 10.0, 1e-3, order, [1e-12, 1e12])
        limit = experiments.saturation_limit(order)
        small, large = rows[0]["ratio_trott_ref"], rows[-1]["ratio_qd"]
        detail[f"order_{order}"] = {"small_c_ratio": small, "limit": limit, "large_c_ratio": large}
        ok &= all(checks.values())
        if order == 2:
            ok &= 1.0 - 1e-9 <= small <= 1.01
        worst = max(worst, abs(small - limit), abs(large - 1))
    return CheckResult("saturation_limits", bool(ok), 4, 0 if ok else 1, worst, detail)


def check_prob_guarantees(n_configs: int = 1000, seed: int = 0) -> CheckResult:
    rng = _rng(seed, 7)
    bad, worst = 0, 0.0
    for _ in range(n_configs):
        L = int(rng.integers(1, 30))
        H = _weights_only_hamiltonian(rng.uniform(0.01, 1.0, L))
        order = int(rng.choice([2, 4, 6]))
        t = float(10 ** rng.uniform(-1, 2))
        eps = float(10 ** rng.uniform(-4, -1))
        n_b = nb_lower_bound(H, t, eps, order) * float(rng.uniform(1.0, 10.0))
        pp = prob_partition(H, t, eps, order, n_b)
        p = np.asarray(pp.probs)
        e_lb = float(((1 - p) * H.weights).sum())
        bound = H.lam * guarantee_lambda_b_bound(H.lam, t, eps, order, n_b)
        same_form = math.isclose(lambda_b_ratio_bound(H.lam, t, eps, order, n_b),
                                 lambda_b_ratio_bound_alt(H.lam, t, eps, order, n_b), rel_tol=1e-12)
        ok = bool(np.all((p >= 0) & (p <= 1))) and e_lb <= bound * (1 + SLACK) and same_form
        worst = max(worst, e_lb / bound)
        bad += not ok
    return CheckResult("probabilistic_guarantees", bad == 0, n_configs, int(bad), worst)


def _weights_only_hamiltonian(weights) -> Hamiltonian:
    """Commuting diagonal stand-in when only the weights matter."""
    ops = [np.diag([1.0, -1.0]) for _ in weights]
    return Hamiltonian.from_ops(weights, ops)


def check_moments(n_configs: int = 50, n_trials: int = 10_000, seed: int = 0) -> CheckResult:
    rng = _rng(seed, 8)
    bad, worst = 0, 0.0
    failures = []
    for j in range(n_configs):
        H = _random_instance(rng, max_qubits=2, max_L=5)
        order = int(rng.choice([2, 4]))
        t = float(rng.uniform(0.1, 1.0))
        eps = float(10 ** rng.uniform(-4, -2))
        c = float(rng.uniform(0.05, 1.0))
        n_b = (1 + c) ** 2 * nb_lower_bound(H, t, eps, order)
        pp = prob_partition(H, t, eps, order, n_b)
        rep = moment_report(H, pp, t, order, n_b, n_trials, seed + j)
        for name, cmp in rep.comparisons().items():
            if cmp is None:
                continue
            mean, bound, se, ok = cmp
            if bound > 0:
                worst = max(worst, mean / bound)
            if not ok:
                bad += 1
                failures.append({"config": j, "moment": name, "mc": mean, "bound": bound, "se": se})
    return CheckResult("moment_dominance", bad == 0, n_configs, bad, worst, {"failures": failures})


def check_exp_decay(l_grid=(16, 32, 64, 128, 256), trials: int = 10_000, seed: int = 0) -> CheckResult:
    rows, checks = experiments.exp_decay_experiment(list(l_grid), c=1, trials=trials, seed=seed)
    ok = all(checks.values())
    return CheckResult("exp_decay_family", ok, len(rows), sum(not v for v in checks.values()), 0.0, checks)


# -- partition optimisation -------------------------------------------------------------------

def check_gradient(n_instances: int = 50, seed: int = 0) -> CheckResult:
    rng = _rng(seed, 10)
    worst, bad = 0.0, 0
    for _ in range(n_instances):
        H = _random_instance(rng, max_qubits=2, max_L=5)
        t = float(rng.uniform(0.1, 1.0))
        eps = float(10 ** rng.uniform(-3, -1))
        n_b = float(rng.uniform(1, 20))
        w = rng.uniform(0.05, 0.95, H.L)
        L_A = H.L
        g = weight_gradient(H, w, t, eps, n_b, L_A)
        fd = np.empty(H.L)
        step = 1e-5
        for m in range(H.L):
            e = np.zeros(H.L)
            e[m] = step
            fd[m] = (relaxed_weighted_cost(H, w + e, t, eps, n_b, L_A)
                     - relaxed_weighted_cost(H, w - e, t, eps, n_b, L_A)) / (2 * step)
        rel = float(np.abs(g - fd).max() / max(np.abs(g).max(), 1e-300))
        res = descend_weights(H, t, eps, n_b, init=rng.uniform(0, 1, H.L), max_iters=500)
        worst = max(worst, rel)
        bad += rel > 1e-6 or res.final_cost > res.initial_cost
    return CheckResult("gradient_correctness", bad == 0, n_instances, int(bad), worst)


def _log_derivative(f: Callable[[float], float], x: float, h: float = 1e-4) -> float:
    """``x f'(x) / f(x)`` by central differences in ``log x``."""
    return (f(x * (1 + h)) - f(x * (1 - h))) / (2 * h * f(x))


def check_optimal_nb(n_instances: int = 50, seed: int = 0) -> CheckResult:
    rng = _rng(seed, 11)
    worst, bad, n = 0.0, 0, 0
    while n < n_instances:
        H = _random_instance(rng, max_qubits=2, max_L=5)
        part = _random_partition(rng, H.L)
        if not part.a_indices or not part.b_indices:
            continue
        t = float(rng.uniform(0.1, 1.0))
        eps = float(10 ** rng.uniform(-3, -1))
        s_aa, s_ab = first_order_terms(H, part)
        lam_b = H.subset_lambda(part.b_indices)
        L_A = len(part.a_indices)
        if s_aa + s_ab > 0:
            nb1 = optimal_nb_first(H, part)
            d1 = _log_derivative(lambda x: relaxed_first_order_cost(L_A, lam_b, s_aa, s_ab, t, eps, x), nb1)
            worst = max(worst, abs(d1))
            bad += abs(d1) > 1e-6
        order = int(rng.choice([2, 4]))
        alpha = alpha_report(H, part, order)
        P = product_error_P(alpha, order, t)
        if P > 0:
            nbh = optimal_nb_higher(H, part, order, t, eps, alpha=alpha)
            dh = _log_derivative(
                lambda x: relaxed_higher_order_cost(L_A, P, qdrift_error_Q(lam_b, order, t, x), order, eps, x), nbh)
            worst = max(worst, abs(dh))
            bad += abs(dh) > 1e-6
        n += 1
    return CheckResult("optimal_nb_stationarity", bad == 0, n_instances, int(bad), worst)


# -- framework -------------------------------------------------------------------------------

MULTIPRODUCT_TIMES = [2.0 ** -j for j in range(6, 1, -1)]


def check_framework(seed: int = 0) -> CheckResult:
    """Template equals direct constructions, multiproduct coefficients, two-term error order.

    The slope gain of the two-term combination over the single formula is recorded
    in ``detail`` but not asserted here; the acceptance tests assert it separately.
    """
    rng = _rng(seed, 12)
    dev = cov = 0.0
    for _ in range(10):
        H = _random_instance(rng, max_qubits=2, max_L=4)
        t = float(rng.uniform(0.1, 1.0))
        one = qdrift_instance(H, None, t)
        dev = max(dev, float(np.abs(template_channel([one], H.dim).mat
                                    - qdrift_exact_channel(H, None, t, 1).mat).max()))
        dev = max(dev, float(np.abs(template_channel([one, one], H.dim).mat
                                    - qdrift_exact_channel(H, None, 2 * t, 2).mat).max()))
        dev = max(dev, float(np.abs(randomized_trotter_template(H, None, t).mat
                                    - randomized_trotter_channel(H, None, t).mat).max()))
        perm = rng.permutation(H.L)
        relabeled = Hamiltonian(tuple(H.terms[i] for i in perm))
        cov = max(cov, float(np.abs(randomized_trotter_channel(relabeled, None, t).mat
                                    - randomized_trotter_channel(H, None, t).mat).max()))
    coeff_err = float(np.abs(multiproduct_coeffs([1, 2]) - np.array([-1.0, 2.0])).max())
    for n in range(1, 5):
        c = multiproduct_coeffs(list(range(1, n + 1)))
        coeff_err = max(coeff_err, abs(float(c.sum()) - 1.0))
    X_Z = Hamiltonian.from_paulis([1.0, 1.0], ["X", "Z"])
    s1 = multiproduct_error_check(X_Z, [1], MULTIPRODUCT_TIMES)
    s2 = multiproduct_error_check(X_Z, [1, 2], MULTIPRODUCT_TIMES)
    parts = {"template_ok": dev <= 1e-10, "relabel_ok": cov <= 1e-10,
             "coeffs_ok": coeff_err <= 1e-10, "two_term_slope_ok": s2 >= 2.7}
    detail = {"template_deviation": dev, "relabel_deviation": cov, "coeff_error": coeff_err,
              "slope_N1": s1, "slope_N2": s2, "slope_gain": s2 - s1, **parts}
    return CheckResult("framework", all(parts.values()), len(parts),
                       sum(not v for v in parts.values()), max(dev, cov, coeff_err), detail)


def check_hamiltonians(hams: dict[str, Hamiltonian], seed: int = 0) -> CheckResult:
    """Bound validity, epsilon compliance and collapse on user-supplied Hamiltonians."""
    rng = _rng(seed, 14)
    worst, bad, n = 0.0, 0, 0
    failures = []

    def record(name, what, meas, bound):
        nonlocal worst, bad, n
        n += 1
        if bound > 0:
            worst = max(worst, meas / bound)
        if meas > bound + SLACK:
            bad += 1
            failures.append({"hamiltonian": name, "check": what, "measured": meas, "bound": bound})

    for name, H in hams.items():
        for lt in (0.25, 1.0):
            t = lt / H.lam
            exact = expm_hermitian(dense_sum(H), t)
            ideal = ideal_channel(H, t)
            for order in (1, 2, 4):
                for r in (1, 2, 4):
                    record(name, f"trotter_order_{order}_r{r}",
                           unitary_spectral_distance(exact, trotter_unitary(H, None, order, t, r)),
                           trotter_error_bound(H, None, order, t, r))
            for N in (1, 4, 16):
                record(name, f"qdrift_N{N}", diamond_lower_bound(qdrift_exact_channel(H, None, t, N), ideal),
                       qdrift_error_bound(H.lam, t, N))
            for _ in range(4):
                part = _random_partition(rng, H.L)
                order = int(rng.choice([1, 2, 4]))
                eps, n_b = 1e-2, int(rng.integers(1, 6))
                rep = composite_cost(H, part, order, t, eps, n_b)
                comp = composite_exact_channel(H, CompositeParams(part, order, t, n_b, rep.r, eps))
                record(name, f"composite_order_{order}", diamond_lower_bound(comp, ideal), eps)
            everything = tuple(range(H.L))
            comp = composite_exact_channel(H, CompositeParams(Partition(everything, ()), 2, t, 1, 2))
            record(name, "collapse_trotter", diamond_lower_bound(comp, trotter_channel(H, None, 2, t, 2)), 1e-10)
    return CheckResult("hamiltonian_set", bad == 0, n, bad, worst, {"failures": failures})


def check_cptp(n_instances: int = 20, seed: int = 0) -> CheckResult:
    rng = _rng(seed, 13)
    bad = 0
    for _ in range(n_instances):
        H = _random_instance(rng, max_qubits=2)
        part = _random_partition(rng, H.L)
        order = int(rng.choice([1, 2, 4]))
        t = float(rng.uniform(0.1, 1.0))
        chans = [trotter_channel(H, None, order, t), qdrift_exact_channel(H, None, t, 3),
                 composite_exact_channel(H, CompositeParams(part, order, t, 2, 2))]
        bad += sum(not ch.is_cptp() for ch in chans)
    return CheckResult("channels_cptp", bad == 0, 3 * n_instances, bad)


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "trotter": check_trotter_bounds,
    "qdrift": check_qdrift_bounds,
    "composite": check_composite_compliance,
    "collapse": check_collapse,
    "scaling": check_scaling,
    "saturation": check_saturation,
    "prob": check_prob_guarantees,
    "moments": check_moments,
    "exp_decay": check_exp_decay,
    "gradient": check_gradient,
    "optimal_nb": check_optimal_nb,
    "framework": check_framework,
    "cptp": check_cptp,
}


def run_suite(seed: int = 0, quick: bool = False, only=None,
              hams: dict[str, Hamiltonian] | None = None) -> list[CheckResult]:
    """Run all checks, plus ``check_hamiltonians`` when ``hams`` is given.

    ``quick`` trims instance counts for smoke runs.
    """
    small = {"trotter": dict(n_instances=20), "qdrift": dict(n_instances=20),
             "composite": dict(n_instances=20), "collapse": dict(n_instances=5),
             "prob": dict(n_configs=100), "moments": dict(n_configs=5, n_trials=2000),
             "exp_decay": dict(l_grid=(16, 32, 64), trials=2000), "gradient": dict(n_instances=10),
             "optimal_nb": dict(n_instances=10), "cptp": dict(n_instances=5)}
    out = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        kwargs = small.get(name, {}) if quick else {}
        out.append(fn(seed=seed, **kwargs))
    if hams and (not only or "hamiltonians" in only):
        out.append(check_hamiltonians(hams, seed=seed))
    return out
