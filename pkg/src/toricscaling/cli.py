"""Command-line front end.

Subcommands: ``simulate``, ``sweep``, ``fit``, ``predict``, ``overhead`` and
``exact``. Settings resolve as flag, then ``TORIC_*`` environment variable,
then built-in default. Exit status is 0 on success, 2 for invalid input or
insufficient data and 3 when a fit fails to converge.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
import warnings
from collections import defaultdict

import numpy as np

from .decoder import DEFAULT_TAU
from .io import FitReport, ResultRow, append_results, read_fit_report, read_results, write_results
from .montecarlo import (
    FailureEstimate,
    TrialConfig,
    default_max_weight,
    failure_weight_counts,
    iter_cells,
    probability_from_counts,
    run_batch,
    truncation_bound,
)
from .overhead import plan_overhead
from .scaling import (
    REFERENCE_DECAY,
    REFERENCE_THRESHOLD,
    FitError,
    QuadraticLogL,
    ThresholdScaling,
    UniversalScaling,
    UniversalScalingParams,
    classify_regime,
    p_fail_lowp,
    p_fail_ush,
    p_lp,
    p_ush,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3

ENV_PREFIX = "TORIC_"
DEFAULTS = {"workers": 1, "seed": 0, "tau": DEFAULT_TAU}
_CASTS = {"workers": int, "seed": int, "tau": float}

log = logging.getLogger("toricscaling")


def resolve(args: argparse.Namespace, environ=None) -> dict:
    """Effective workers/seed/tau: flag > environment > default."""
    environ = os.environ if environ is None else environ
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        env = environ.get(ENV_PREFIX + key.upper())
        if flag is not None:
            out[key] = flag
        elif env not in (None, ""):
            try:
                out[key] = _CASTS[key](env)
            except ValueError:
                raise ValueError(f"{ENV_PREFIX}{key.upper()}={env!r} is not a valid {_CASTS[key].__name__}")
        else:
            out[key] = default
    if out["workers"] < 1:
        raise ValueError("workers must be at least 1")
    return out


def cell_seed(master_seed: int, cell_index: int) -> int:
    seq = np.random.SeedSequence(master_seed, spawn_key=(cell_index,))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def p_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid, rounded to suppress float drift."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(n)]


def _kv(pairs: dict) -> str:
    parts = []
    for k, v in pairs.items():
        parts.append(f"{k}={float(v)!r}" if isinstance(v, float) else f"{k}={v}")
    return " ".join(parts)


# -- simulate / sweep ---------------------------------------------------------


def cmd_simulate(args, cfg) -> int:
    config = TrialConfig(args.L, args.p, args.N, cfg["tau"], cfg["seed"])
    t0 = time.perf_counter()
    est = run_batch(config, workers=cfg["workers"])
    row = ResultRow.from_estimate(config.L, config.p, config.tau, est, config.master_seed, time.perf_counter() - t0)
    if args.out:
        append_results(args.out, [row])
    else:
        write_results(sys.stdout, [row])
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    ps = list(args.p or [])
    if args.p_range:
        ps += p_grid(*args.p_range)
    if not args.L or not ps:
        raise ValueError("sweep needs at least one L and one p")
    cells = []
    for L in args.L:
        for p in ps:
            idx = len(cells)
            cells.append(TrialConfig(L, p, args.N, cfg["tau"], cell_seed(cfg["seed"], idx)))
    done = {row.key() for row in read_results(args.out)}
    pending = [c for c in cells if (c.L, c.p, c.tau, c.N, c.master_seed) not in done]
    log.info("sweep: %d cells, %d already present", len(cells), len(cells) - len(pending))
    for i, est, secs in iter_cells(pending, workers=cfg["workers"]):
        c = pending[i]
        append_results(args.out, [ResultRow.from_estimate(c.L, c.p, c.tau, est, c.master_seed, secs)])
        log.info("L=%d p=%g N_f=%d (%.1fs)", c.L, c.p, est.N_f, secs)
    return EXIT_OK


# -- fit ----------------------------------------------------------------------


def pool_rows(rows: list[ResultRow]) -> tuple[np.ndarray, list[str]]:
    """Merge rows sharing ``(L, p)`` by summing counts; returns ``(L, p, P, sigma)`` rows."""
    groups: dict = defaultdict(lambda: [0, 0])
    for r in rows:
        g = groups[(r.L, r.p)]
        g[0] += r.N
        g[1] += r.N_f
    notes = []
    taus = sorted({r.tau for r in rows})
    if len(taus) > 1:
        notes.append(f"warning: input mixes tau values {taus}")
    data = []
    for (L, p), (N, N_f) in sorted(groups.items()):
        est = FailureEstimate(N, N_f)
        data.append((L, p, est.P_fail, est.sigma))
    merged = len(rows) - len(groups)
    if merged:
        notes.append(f"pooled {merged} duplicate (L, p) row(s)")
    return np.array(data, dtype=float).reshape(-1, 4), notes


def _usp_from_report(path) -> UniversalScalingParams:
    rep = read_fit_report(path)
    need = ("A", "p_c0", "nu0")
    missing = [k for k in need if k not in rep.values]
    if missing:
        raise ValueError(f"{path}: report lacks {missing}")
    a = rep.value("a") if "a" in rep.values else REFERENCE_DECAY[0]
    return UniversalScalingParams(A=rep.value("A"), a=a, p_c0=rep.value("p_c0"), nu0=rep.value("nu0"))


def _reference_usp() -> UniversalScalingParams:
    return UniversalScalingParams(A=REFERENCE_THRESHOLD["A"][0], a=REFERENCE_DECAY[0],
                                  p_c0=REFERENCE_THRESHOLD["p_c0"][0], nu0=REFERENCE_THRESHOLD["nu0"][0])


def _select(data: np.ndarray, args) -> tuple[np.ndarray, list[str]]:
    keep = np.ones(len(data), dtype=bool)
    notes = []
    for i, (L, p, P, s) in enumerate(data):
        why = None
        if args.L_select and int(L) not in args.L_select:
            why = "L not selected"
        elif args.p_min is not None and p < args.p_min:
            why = f"p < p_min = {args.p_min:g}"
        elif args.p_max is not None and p > args.p_max:
            why = f"p > p_max = {args.p_max:g}"
        if why:
            keep[i] = False
            notes.append(f"excluded L={int(L)} p={p:g}: {why}")
    return data[keep], notes


def fit_threshold_report(data: np.ndarray, fix_mu=None, notes=()) -> FitReport:
    notes = list(notes)
    ok = data[:, 3] > 0
    for L, p, P, s in data[~ok]:
        notes.append(f"excluded L={int(L)} p={p:g}: sigma = 0")
    data = data[ok]
    est = ThresholdScaling(fix_mu=fix_mu).fit(data[:, :2], data[:, 2], sigma=data[:, 3])
    order = ("p_c0", "nu0", "mu", "A", "B", "C", "D")
    values = {k: (est.params_[k], est.errors_[k]) for k in order}
    if fix_mu is not None:
        notes.append(f"mu held fixed at {fix_mu:g}")
    notes.append(f"n_points = {est.n_points_}; converged starts = {est.n_converged_}")
    if est.at_bound_:
        notes.append(f"warning: {', '.join(est.at_bound_)} at a search bound; consider --fix-mu")
    return FitReport("threshold", values, est.chi2_per_dof_, notes)


def fit_decay_report(data: np.ndarray, usp: UniversalScalingParams, validity_filter=True, n_sigma=2.0,
                     notes=()) -> FitReport:
    notes = list(notes)
    ok = data[:, 3] > 0
    for L, p, P, s in data[~ok]:
        notes.append(f"excluded L={int(L)} p={p:g}: sigma = 0")
    data = data[ok]
    est = UniversalScaling(A=usp.A, p_c0=usp.p_c0, nu0=usp.nu0, n_sigma=n_sigma, validity_filter=validity_filter)
    est.fit(data[:, :2], data[:, 2], sigma=data[:, 3])
    notes += [f"excluded {r}" for r in est.excluded_]
    notes.append(f"n_points = {est.n_points_}")
    values = {"a": (est.a_, est.a_error_), "A": (usp.A, None), "p_c0": (usp.p_c0, None), "nu0": (usp.nu0, None)}
    return FitReport("decay", values, est.chi2_per_dof_, notes)


def fit_quadratic_report(data: np.ndarray, p: float, notes=()) -> FitReport:
    notes = list(notes)
    sel = np.isclose(data[:, 1], p, rtol=0, atol=1e-12)
    if not sel.any():
        raise ValueError(f"no rows at p = {p}")
    data = data[sel]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = QuadraticLogL().fit(data[:, 0], data[:, 2], sigma=data[:, 3])
    if est.n_excluded_:
        notes.append(f"excluded {est.n_excluded_} row(s) with P_fail = 0")
    a, b, c = est.coef_
    ea, eb, ec = est.coef_error_
    values = {"p": (p, None), "alpha": (a, ea), "beta": (b, eb), "gamma": (c, ec),
              "gamma_over_beta": (est.gamma_over_beta_, None)}
    return FitReport("quadratic", values, None, notes)


def cmd_fit(args, cfg) -> int:
    rows = read_results(args.input)
    if not rows:
        raise ValueError(f"{args.input}: no result rows")
    data, notes = pool_rows(rows)
    data, more = _select(data, args)
    notes += more
    if args.kind == "threshold":
        rep = fit_threshold_report(data, args.fix_mu, notes)
    elif args.kind == "decay":
        usp = _usp_from_report(args.threshold_report) if args.threshold_report else _reference_usp()
        notes.append("A, p_c0, nu0 from " + (str(args.threshold_report) if args.threshold_report else "reference values"))
        rep = fit_decay_report(data, usp, not args.no_filter, args.n_sigma, notes)
    else:
        if args.at_p is None:
            raise ValueError("quadratic fit needs --at-p")
        rep = fit_quadratic_report(data, args.at_p, notes)
    if args.out:
        rep.write(args.out)
    sys.stdout.write(rep.render())
    return EXIT_OK


# -- queries ------------------------------------------------------------------


def _params_for_query(args) -> UniversalScalingParams:
    if args.fit_report:
        return _usp_from_report(args.fit_report)
    if args.reference:
        return _reference_usp()
    raise ValueError("a fit report is required (--fit-report FILE, or --reference for the built-in reference constants)")


def cmd_predict(args, cfg) -> int:
    usp = _params_for_query(args)
    for L in args.L:
        for p in args.p:
            regime = classify_regime(L, p)
            out = {"L": L, "p": float(p), "regime": regime.value, "p_USH": p_ush(L), "p_LP": p_lp(L)}
            if p < usp.p_c0:
                out["P_fail_ush"] = p_fail_ush(L, p, usp)
                out["P_fail_ush_status"] = "applicable" if regime.value == "UniversalScaling" else "inapplicable"
            else:
                out["P_fail_ush"] = "nan"
                out["P_fail_ush_status"] = "above_threshold"
            out["P_fail_lowp"] = p_fail_lowp(L, p) if p > 0 else 0.0
            out["P_fail_lowp_status"] = "applicable" if regime.value == "LowP" else "inapplicable"
            print(_kv(out))
    return EXIT_OK


def cmd_overhead(args, cfg) -> int:
    usp = _params_for_query(args)
    for target in args.target:
        for p in args.p:
            res = plan_overhead(target, p, usp)
            out = {"target": float(target), "p": float(p)}
            out.update(res.as_row())
            for c in res.candidates:
                tag = "ush" if c.regime.value == "UniversalScaling" else "lp"
                out[f"omega_{tag}"] = c.omega
                out[f"L_code_{tag}"] = c.L_code
            print(_kv(out))
    return EXIT_OK


def cmd_exact(args, cfg) -> int:
    L, tau = args.L, cfg["tau"]
    mw = args.max_weight
    if mw is None and L != 3:
        mw = default_max_weight(L)
        log.info("L=%d: truncating at max_weight=%d", L, mw)
    counts = failure_weight_counts(L, tau, mw)
    n = 2 * L * L
    for p in args.p:
        line = {"L": L, "p": float(p), "tau": tau, "P_fail": probability_from_counts(counts, n, p)}
        if mw is not None:
            line["max_weight"] = mw
            line["truncation_bound"] = truncation_bound(L, p, mw) if p > 0 else 0.0
        print(_kv(line))
    for w, c in enumerate(counts):
        print(_kv({"weight": w, "failing": int(c), "total": math.comb(n, w)}))
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=None, help="Monte Carlo worker processes [TORIC_WORKERS, 1]")
    common.add_argument("--seed", type=int, default=None, help="master seed [TORIC_SEED, 0]")
    common.add_argument("--tau", type=float, default=None, help=f"degeneracy weight [TORIC_TAU, {DEFAULT_TAU}]")
    common.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="toric", description="Toric-code decoding simulations and scaling fits.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="one Monte Carlo cell")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--out", help="CSV to append to (stdout if omitted)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", parents=[common], help="grid of cells, resumable")
    s.add_argument("--L", type=int, nargs="+", required=True)
    s.add_argument("--p", type=float, nargs="+")
    s.add_argument("--p-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", parents=[common], help="fit a scaling law to result rows")
    s.add_argument("kind", choices=("threshold", "decay", "quadratic"))
    s.add_argument("--input", required=True)
    s.add_argument("--out", help="write the report here as well as to stdout")
    s.add_argument("--L", dest="L_select", type=int, nargs="+")
    s.add_argument("--p-min", type=float)
    s.add_argument("--p-max", type=float)
    s.add_argument("--fix-mu", type=float, help="threshold: hold mu at this value")
    s.add_argument("--threshold-report", help="decay: take A, p_c0, nu0 from this report")
    s.add_argument("--no-filter", action="store_true", help="decay: skip the p > p_USH(L) filter")
    s.add_argument("--n-sigma", type=float, default=2.0, help="decay: validity filter width")
    s.add_argument("--at-p", type=float, help="quadratic: the p to fit at")
    s.set_defaults(func=cmd_fit)

    for name, func, hlp in (("predict", cmd_predict, "regime and both failure-rate laws"),
                            ("overhead", cmd_overhead, "qubit overhead for a target failure rate")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        if name == "predict":
            s.add_argument("--L", type=int, nargs="+", required=True)
        else:
            s.add_argument("--target", type=float, nargs="+", required=True)
        s.add_argument("--p", type=float, nargs="+", required=True)
        s.add_argument("--fit-report")
        s.add_argument("--reference", action="store_true", help="use the built-in reference constants")
        s.set_defaults(func=func)

    s = sub.add_parser("exact", parents=[common], help="enumeration oracle")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--p", type=float, nargs="+", required=True)
    s.add_argument("--max-weight", type=int)
    s.set_defaults(func=cmd_exact)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        if args.dump_config:
            shown = {k: v for k, v in vars(args).items() if k not in ("func", "dump_config", "verbose") and k not in cfg}
            for k, v in {**cfg, **shown}.items():
                print(f"{k} = {v}")
            return EXIT_OK
        return args.func(args, cfg)
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ValueError, TypeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
