"""Command-line front end.

Exit codes: 0 when every check passes, 2 on a bound violation or failed check,
3 on a configuration or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import experiments
from .commutators import alpha_full
from .composite import CompositeParams, CostReport, composite_cost, composite_exact_channel, composite_sequence, ideal_channel
from .hamiltonian import Hamiltonian, HamiltonianError, Partition, check_superop_dim, load_hamiltonian
from .metrics import BracketError, diamond_lower_bound, unitary_channel
from .partition import (descend_weights, fixed_point_weight, moment_report, nb_lower_bound,
                        nb_parametrized, prob_partition, relaxed_weighted_cost, sample_partition)
from .qdrift import EpsilonRangeError, qdrift_cost, qdrift_exact_channel
from .rng import DEFAULT_SEED
from .trotter import check_order, trotter_channel, trotter_cost
from .verify import run_suite

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 2, 3
MAX_SWEEP_TERMS = 12


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


# -- argument types ----------------------------------------------------------------------

def _positive(kind):
    def parse(text: str):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}")
        if not v > 0 or (kind is float and not math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    parse.__name__ = f"positive {kind.__name__}"
    return parse


def _grid(kind):
    def parse(text: str):
        try:
            vals = [kind(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a comma-separated list of {kind.__name__}: {text!r}")
        if not vals or any(not v > 0 for v in vals):
            raise argparse.ArgumentTypeError(f"grid entries must be positive: {text!r}")
        return vals
    return parse


def _indices(text: str) -> tuple[int, ...]:
    if text.strip() == "":
        return ()
    try:
        return tuple(sorted({int(x) for x in text.split(",")}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated index list: {text!r}")


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def bundled_hamiltonians() -> dict[str, Hamiltonian]:
    root = resources.files("compsim") / "data"
    return {p.name: load_hamiltonian(p) for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".json")}


def _load(path: str) -> Hamiltonian:
    try:
        return load_hamiltonian(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc


# -- output -----------------------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return " ".join(str(x) for x in v)
    if isinstance(v, np.generic):
        return v.item()
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def render(rows: list[dict], columns: Sequence[str], fmt: str, summary: dict | None = None) -> str:
    """CSV (summary as leading ``# key=value`` lines) or one JSON document."""
    if fmt == "json":
        doc = {"columns": list(columns), "rows": [{c: r.get(c) for c in columns} for r in rows]}
        if summary:
            doc["summary"] = summary
        return json.dumps(_jsonable(doc), indent=1) + "\n"
    buf = io.StringIO()
    for k, v in (summary or {}).items():
        buf.write(f"# {k}={json.dumps(_jsonable(v), sort_keys=False)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands ----------------------------------------------------------------------------

COST_COLUMNS = ["a_indices", "b_indices", *CostReport.field_names()]


def _nb(args, H: Hamiltonian, order: int) -> int:
    if args.c is not None:
        if order < 2:
            raise ConfigError("--c needs an even order >= 2")
        return max(1, nb_parametrized(H, args.time, args.eps, order, args.c))
    return args.nb


def cmd_cost(args) -> int:
    H = _load(args.ham)
    order = check_order(args.order)
    if args.a is not None:
        parts = [Partition.from_a(H, args.a)]
    else:
        if H.L > MAX_SWEEP_TERMS:
            raise ConfigError(f"sweeping all partitions needs L <= {MAX_SWEEP_TERMS}; pass --a")
        parts = [Partition.from_a(H, [i for i in range(H.L) if mask >> i & 1]) for mask in range(2 ** H.L)]
    n_b = _nb(args, H, order)
    rows = []
    for p in parts:
        rep = composite_cost(H, p, order, args.time, args.eps, n_b)
        rows.append({"a_indices": p.a_indices, "b_indices": p.b_indices, **rep.to_dict()})
    _emit(args, render(rows, COST_COLUMNS, args.format))
    return EXIT_OK


def cmd_partition(args) -> int:
    H = _load(args.ham)
    order = check_order(args.order)
    if args.scheme == "gradient":
        if order != 1:
            raise ConfigError("the gradient scheme works on the first-order cost; use --order 1")
        n_b = args.nb
        res = descend_weights(H, args.time, args.eps, n_b)
        w = np.asarray(res.weights.weights)
        rows = []
        for m in range(H.L):
            fp, clamped = fixed_point_weight(H, w, m, n_b)
            rows.append({"term": m, "h": float(H.weights[m]), "weight": float(w[m]),
                         "fixed_point_weight": fp, "clamped": clamped})
        summary = {"scheme": "gradient", "n_b": n_b, "initial_cost": res.initial_cost,
                   "final_cost": res.final_cost, "iterations": res.iterations, "converged": res.converged,
                   "all_half_cost": relaxed_weighted_cost(H, np.full(H.L, 0.5), args.time, args.eps, n_b)}
        _emit(args, render(rows, ["term", "h", "weight", "fixed_point_weight", "clamped"], args.format, summary))
        return EXIT_OK
    if order < 2:
        raise ConfigError("the probabilistic scheme needs an even order >= 2")
    n_b = _nb(args, H, order)
    pp = prob_partition(H, args.time, args.eps, order, n_b)
    sample = sample_partition(pp, args.seed)
    rows = [{"term": i, "h": float(H.weights[i]), "p_trotter": pp.probs[i], "in_S": i in pp.sampling_set,
             "sampled_in_A": i in sample.a_indices} for i in range(H.L)]
    summary = {"scheme": "probabilistic", "n_b": n_b, "n_b_lower_bound": nb_lower_bound(H, args.time, args.eps, order),
               "chi": pp.chi, "size_S": len(pp.sampling_set), "seed": args.seed}
    status = EXIT_OK
    if args.trials:
        if args.trials < 100:
            raise ConfigError("--trials must be 0 or >= 100")
        rep = moment_report(H, pp, args.time, order, n_b, args.trials, args.seed)
        summary["moments"] = {k: (None if v is None else {"mc": v[0], "bound": v[1], "se": v[2], "ok": v[3]})
                              for k, v in rep.comparisons().items()}
        if not rep.dominated():
            status = EXIT_VIOLATION
    _emit(args, render(rows, ["term", "h", "p_trotter", "in_S", "sampled_in_A"], args.format, summary))
    return status


SIMULATE_COLUMNS = ["method", "order", "r", "n_b", "gates", "epsilon", "measured", "within"]


def cmd_simulate(args) -> int:
    H = _load(args.ham)
    check_superop_dim(H.dim)
    order = check_order(args.order)
    t, eps = args.time, args.eps
    ideal = ideal_channel(H, t)
    rows = []
    tc = trotter_cost(H, order, t, eps)
    meas = diamond_lower_bound(trotter_channel(H, None, order, t, tc.r), ideal)
    rows.append({"method": "trotter", "order": order, "r": tc.r, "gates": tc.cost, "epsilon": eps,
                 "measured": meas, "within": meas <= eps})
    try:
        qc = qdrift_cost(H, None, t, eps)
        meas = diamond_lower_bound(qdrift_exact_channel(H, None, t, qc.n), ideal)
        rows.append({"method": "qdrift", "r": 1, "n_b": qc.n, "gates": qc.cost, "epsilon": eps,
                     "measured": meas, "within": meas <= eps})
    except EpsilonRangeError as exc:
        print(f"qdrift skipped: {exc}", file=sys.stderr)
    part = Partition.from_a(H, args.a if args.a is not None else range(H.L))
    n_b = _nb(args, H, order)
    rep = composite_cost(H, part, order, t, eps, n_b)
    params = CompositeParams(part, order, t, n_b, rep.r, eps)
    meas = diamond_lower_bound(composite_exact_channel(H, params), ideal)
    rows.append({"method": "composite", "order": order, "r": rep.r, "n_b": n_b, "gates": rep.c_comp,
                 "epsilon": eps, "measured": meas, "within": meas <= eps})
    if args.gates_out:
        composite_sequence(H, params, args.seed).save(args.gates_out)
    _emit(args, render(rows, SIMULATE_COLUMNS, args.format))
    return EXIT_OK if all(r["within"] for r in rows) else EXIT_VIOLATION


VERIFY_COLUMNS = ["name", "passed", "n_checked", "n_violations", "worst"]


def cmd_verify(args) -> int:
    hams = {Path(p).name: _load(p) for p in args.ham} if args.ham else bundled_hamiltonians()
    results = run_suite(seed=args.seed, quick=args.quick, only=args.only, hams=hams)
    rows = [r.to_dict() for r in results]
    summary = {"details": {r.name: r.detail for r in results if r.detail}} if args.format == "json" else None
    _emit(args, render(rows, VERIFY_COLUMNS, args.format, summary))
    failed = [r.to_dict() for r in results if not r.passed]
    if failed:
        sys.stderr.write(json.dumps({"failures": _jsonable(failed)}, indent=1) + "\n")
        return EXIT_VIOLATION
    return EXIT_OK


def _finish_experiment(args, rows, columns, checks) -> int:
    _emit(args, render(rows, columns, args.format, {"checks": checks}))
    failed = [k for k, v in checks.items() if not v]
    if failed:
        sys.stderr.write(json.dumps({"failed_checks": failed}) + "\n")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_exp_decay(args) -> int:
    if args.c is not None and args.c != int(args.c):
        raise ConfigError("exp-decay needs an integer --c")
    c = 1 if args.c is None else int(args.c)
    rows, checks = experiments.exp_decay_experiment(args.l_grid, c, args.eps, args.order, args.trials, args.seed)
    return _finish_experiment(args, rows, experiments.EXP_DECAY_COLUMNS, checks)


def cmd_saturation(args) -> int:
    weights = _load(args.ham).weights if args.ham else experiments.exp_decay_weights(8)
    rows, checks = experiments.saturation_experiment(weights, args.time, args.eps, args.order, args.c_grid)
    return _finish_experiment(args, rows, experiments.SATURATION_COLUMNS, checks)


def cmd_crossover(args) -> int:
    H = _load(args.ham) if args.ham else bundled_hamiltonians()["heisenberg2.json"]
    alpha, _ = alpha_full(H, args.order)
    rows, checks = experiments.crossover_experiment(H.lam, H.L, alpha, args.order, args.eps_grid)
    return _finish_experiment(args, rows, experiments.CROSSOVER_COLUMNS, checks)


# -- parser ------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="compsim", description="Trotter, QDrift and composite channel compiler and verifier.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, ham_required=False):
        sp.add_argument("--ham", required=ham_required, help="Hamiltonian JSON file")
        sp.add_argument("--seed", type=_nonneg_int, default=DEFAULT_SEED)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")

    def physics(sp, order_default=2):
        sp.add_argument("--time", type=_positive(float), default=1.0)
        sp.add_argument("--eps", type=_positive(float), default=1e-2)
        sp.add_argument("--order", type=_positive(int), default=order_default)

    def samples(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--nb", type=_positive(int), default=1, help="QDrift samples per B block")
        g.add_argument("--c", type=float, help="set N_B = ceil((1 + 2^-c)^2 N_B_min)")

    sp = sub.add_parser("cost", help="cost report for one partition or every partition")
    common(sp, ham_required=True)
    physics(sp)
    samples(sp)
    sp.add_argument("--a", type=_indices, help="comma-separated Trotter-partition indices")
    sp.set_defaults(func=cmd_cost)

    sp = sub.add_parser("partition", help="gradient or probabilistic partitioning")
    common(sp, ham_required=True)
    physics(sp)
    samples(sp)
    sp.add_argument("--scheme", choices=["gradient", "prob"], default="prob")
    sp.add_argument("--trials", type=_nonneg_int, default=0, help="Monte Carlo trials for the moment report")
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("simulate", help="build channels and compare measured distances with epsilon")
    common(sp, ham_required=True)
    physics(sp)
    samples(sp)
    sp.add_argument("--a", type=_indices, help="comma-separated Trotter-partition indices (default all)")
    sp.add_argument("--gates-out", help="write one sampled composite gate sequence here")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run the invariant suite")
    sp.add_argument("--ham", action="append", help="Hamiltonian JSON file (repeatable; default bundled set)")
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--quick", action="store_true", help="smaller instance counts")
    sp.add_argument("--only", type=lambda s: [x for x in s.split(",") if x], help="comma-separated check names")
    sp.set_defaults(func=cmd_verify)

    ex = sub.add_parser("experiment", help="named experiments")
    exs = ex.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    sp = exs.add_parser("exp-decay", help="h_i = 2^-i family at the crossover time")
    common(sp)
    sp.add_argument("--eps", type=_positive(float), default=1e-3)
    sp.add_argument("--order", type=_positive(int), default=2)
    sp.add_argument("--c", type=float, default=None, help="integer threshold parameter (default 1)")
    sp.add_argument("--trials", type=_positive(int), default=10_000)
    sp.add_argument("--l-grid", type=_grid(int), default=[16, 32, 64, 128, 256])
    sp.set_defaults(func=cmd_exp_decay)

    sp = exs.add_parser("saturation", help="expected composite cost across the threshold parameter c")
    common(sp)
    physics(sp)
    sp.set_defaults(time=10.0, eps=1e-3)
    sp.add_argument("--c-grid", type=_grid(float), default=[1e-12, 1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3, 1e6, 1e12])
    sp.set_defaults(func=cmd_saturation)

    sp = exs.add_parser("crossover", help="crossover time across an epsilon grid")
    common(sp)
    sp.add_argument("--order", type=_positive(int), default=2)
    sp.add_argument("--eps-grid", type=_grid(float), default=[1e-1, 1e-2, 1e-3, 1e-4])
    sp.set_defaults(func=cmd_crossover)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    order = getattr(args, "order", None)
    try:
        if order is not None:
            check_order(order)
        if args.command == "experiment" and args.order < 2:
            raise ConfigError("experiments need an even order >= 2")
        return args.func(args)
    except (ConfigError, HamiltonianError, BracketError, ValueError, IndexError) as exc:
        sys.stderr.write(f"compsim: error: {exc}\n")
        return EXIT_CONFIG
