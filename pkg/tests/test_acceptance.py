"""Acceptance checks, one test per criterion.

Each test prints a line ``[criterion N] PASS|FAIL ...`` and the same lines
are repeated in the pytest terminal summary. The Monte Carlo criteria run
the real simulations at the stated sample sizes, so the module takes a few
minutes on one core.
"""

import itertools
import math
import time

import numpy as np
import pytest

from _acceptance_log import LINES
from oracles import min_pairing_weight
from toricscaling import cli
from toricscaling.decoder import build_defect_graph, decode, min_weight_perfect_matching
from toricscaling.io import read_results
from toricscaling.lattice import Syndrome, ToricLattice
from toricscaling.montecarlo import (
    TrialConfig,
    exact_failure_probability,
    failure_weight_counts,
    probability_from_counts,
    run_batch,
    truncation_bound,
)
from toricscaling.overhead import omega_lp, omega_ush
from toricscaling.scaling import (
    REFERENCE_DECAY,
    REFERENCE_THRESHOLD,
    QuadraticLogL,
    ThresholdScaling,
    UniversalScaling,
    UniversalScalingParams,
    lowp_coefficient,
    p_fail_lowp,
    p_fail_ush,
    p_lp,
    p_ush,
    validity_root,
)

THRESHOLD_L = [5, 7, 9, 11]
THRESHOLD_P = ("0.095", "0.112", "0.001")
SWEEP_SEED = 2024
DECAY_L = [5, 7, 9, 11, 13]
DECAY_P = [0.05, 0.06, 0.07, 0.08]


def report(capsys, n, ok, msg):
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}  {msg}"
    LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    return ok


def sweep(path, Ls, p_args, N, seed, workers, flag="--p-range"):
    argv = ["sweep", "--L", *map(str, Ls), flag, *map(str, p_args), "--N", str(N),
            "--seed", str(seed), "--workers", str(workers), "--out", str(path)]
    assert cli.main(argv) == 0
    return read_results(path)


@pytest.fixture(scope="module")
def threshold_rows(tmp_path_factory):
    path = tmp_path_factory.mktemp("thr") / "w1.csv"
    t0 = time.perf_counter()
    rows = sweep(path, THRESHOLD_L, THRESHOLD_P, 10_000, SWEEP_SEED, 1)
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def decay_rows(tmp_path_factory):
    path = tmp_path_factory.mktemp("decay") / "d.csv"
    return sweep(path, DECAY_L, DECAY_P, 100_000, 7, 1, flag="--p")


def test_criterion_1_exact_l3(capsys):
    t0 = time.perf_counter()
    exact = exact_failure_probability(3, 0.05)
    t_exact = time.perf_counter() - t0
    t0 = time.perf_counter()
    est = run_batch(TrialConfig(3, 0.05, 100_000, master_seed=1))
    t_mc = time.perf_counter() - t0
    z = abs(est.P_fail - exact) / est.sigma
    ok = z < 4 and t_exact < 300 and t_mc < 60
    report(capsys, 1, ok, f"P_exact = {exact:.6f}, MC = {est.P_fail:.5f} ± {est.sigma:.5f} "
                          f"({z:.2f} sigma, need < 4); oracle {t_exact:.1f}s, MC {t_mc:.1f}s")
    assert ok


def test_criterion_2_counting(capsys):
    t0 = time.perf_counter()
    c3 = failure_weight_counts(3, max_weight=2)[2]
    c5 = failure_weight_counts(5, max_weight=3)[3]
    lat = ToricLattice(5)
    spanning_fail = 0
    spanning_total = 0
    for loop in lat.straight_loops():
        for edges in itertools.combinations(sorted(loop.support), 3):
            err = lat.chain(edges)
            spanning_total += 1
            spanning_fail += not lat.homology_class(err ^ decode(lat.syndrome(err))).trivial
    elapsed = time.perf_counter() - t0
    ok = (c3 == 18 == lowp_coefficient(3) and c5 >= 100 == lowp_coefficient(5)
          and spanning_fail == spanning_total == 100 and elapsed < 600)
    report(capsys, 2, ok, f"L=3 weight-2 failing = {c3} (need 18); L=5 weight-3 failing = {c5} "
                          f"(need >= 100, surplus {c5 - 100}); spanning {spanning_fail}/{spanning_total} fail; "
                          f"{elapsed:.1f}s")
    assert ok


def test_criterion_3_threshold(capsys, threshold_rows):
    rows, elapsed = threshold_rows
    assert len(rows) == 4 * 18 and all(r.N == 10_000 for r in rows)
    X = np.array([[r.L, r.p] for r in rows])
    y = np.array([r.P_fail for r in rows])
    s = np.array([r.sigma for r in rows])
    est = ThresholdScaling(fix_mu=REFERENCE_THRESHOLD["mu"][0]).fit(X, y, sigma=s)
    pc, err = est.params_["p_c0"], est.errors_["p_c0"]
    ok = abs(pc - 0.1028) <= 0.005 and elapsed < 7200
    report(capsys, 3, ok, f"p_c0 = {pc:.5f} ± {err:.5f} (need 0.1028 ± 0.005), nu0 = {est.params_['nu0']:.3f}, "
                          f"chi2/dof = {est.chi2_per_dof_:.2f}, mu fixed at 1.15; sweep {elapsed:.0f}s")
    assert ok


def _quadratic(rows, p):
    sel = [r for r in rows if math.isclose(r.p, p)]
    L = np.array([r.L for r in sel])
    P = np.array([r.P_fail for r in sel])
    s = np.array([r.sigma for r in sel])
    return QuadraticLogL().fit(L, P, sigma=s)


def test_criterion_4_quadratic(capsys, decay_rows):
    parts = []
    ok = True
    for p in (0.05, 0.07):
        q = _quadratic(decay_rows, p)
        good = q.gamma_over_beta_ < 0.1 and q.beta_ < 0
        ok &= good
        parts.append(f"p={p}: beta = {q.beta_:.4f}, gamma = {q.gamma_:.2e}, |gamma|/|beta| = {q.gamma_over_beta_:.2e}")
    report(capsys, 4, ok, "; ".join(parts) + " (need ratio < 0.1, beta < 0)")
    assert ok


def test_criterion_5_decay_constant(capsys, decay_rows):
    X = np.array([[r.L, r.p] for r in decay_rows])
    y = np.array([r.P_fail for r in decay_rows])
    s = np.array([r.sigma for r in decay_rows])
    est = UniversalScaling().fit(X, y, sigma=s)
    raw = UniversalScaling(validity_filter=False).fit(X, y, sigma=s)
    rel = abs(est.a_ - REFERENCE_DECAY[0]) / REFERENCE_DECAY[0]
    ok = rel < 0.15
    report(capsys, 5, ok, f"a = {est.a_:.2f} ± {est.a_error_:.2f} from {est.n_points_} filtered points "
                          f"({100 * rel:.1f}% from 32.31, need < 15%); unfiltered a = {raw.a_:.2f}")
    assert ok


def test_criterion_6_lowp(capsys):
    t0 = time.perf_counter()
    counts = failure_weight_counts(5, max_weight=5)
    exact = probability_from_counts(counts, 50, 1e-3)
    analytic = p_fail_lowp(5, 1e-3)
    ratio = exact / analytic
    elapsed = time.perf_counter() - t0
    ok = 1.0 <= ratio <= 1.5 and elapsed < 600
    report(capsys, 6, ok, f"truncated exact = {exact:.6e} (tail bound {truncation_bound(5, 1e-3, 5):.1e}), "
                          f"formula = {analytic:.6e}, ratio = {ratio:.4f} (need [1.0, 1.5]); "
                          f"counts w<=5 = {counts.tolist()}; {elapsed:.0f}s")
    assert ok


def test_criterion_7_overhead(capsys):
    usp = UniversalScalingParams()
    worst_ush = 0.0
    for p in np.linspace(0.005, 0.1, 40):
        for t in np.logspace(-12, -2, 21):
            r = omega_ush(t, p, usp)
            worst_ush = max(worst_ush, abs(p_fail_ush(r.L_real, p, usp) - t) / t)
    ush_ok = worst_ush < 1e-6

    lp_parts = []
    lp_ok = True
    for L in (11, 15, 21):
        r = omega_lp(p_fail_lowp(L, 1e-3), 1e-3)
        dev = r.omega / (2 * L * L) - 1
        lp_ok &= abs(dev) <= 0.15
        lp_parts.append(f"L={L}: omega/2L^2 - 1 = {dev:+.3f}, L_real = {r.L_real:.2f}")

    order_bad = 0
    n_grid = 0
    for p in np.linspace(0.005, 0.08, 31):
        for t in np.logspace(-7, -3, 17):
            n_grid += 1
            order_bad += not omega_lp(t, p).omega < omega_ush(t, p, usp).omega
    ord_ok = order_bad == 0

    ok = ush_ok and lp_ok and ord_ok
    report(capsys, 7, ok, f"ush round trip max rel err {worst_ush:.1e} ({'ok' if ush_ok else 'FAIL'}); "
                          f"lp round trip within 15%: {'ok' if lp_ok else 'FAIL'} [{'; '.join(lp_parts)}]; "
                          f"omega_lp < omega_ush on {n_grid - order_bad}/{n_grid} grid points "
                          f"({'ok' if ord_ok else 'FAIL'})")
    assert ush_ok, "omega_ush forward-inverse consistency"
    assert ord_ok, "omega_lp < omega_ush ordering"
    assert lp_ok, "omega_lp round trip outside 15%"


def test_criterion_8_validity(capsys):
    worst = max(abs(validity_root(L, "ush") - p_ush(L)) / p_ush(L) for L in range(9, 102, 2))
    ordered = all(p_lp(L) < p_ush(L) for L in range(3, 102, 2))
    ok = worst < 0.10 and ordered
    report(capsys, 8, ok, f"max |root - closed form| / closed form over odd L in [9, 101] = {worst:.4f} "
                          f"(need < 0.10); p_LP < p_USH for all odd L in [3, 101]: {ordered}")
    assert ok


def test_criterion_9_matching_exactness(capsys):
    rng = np.random.default_rng(99)
    mismatches = 0
    t0 = time.perf_counter()
    for i in range(1000):
        L = int(rng.choice([5, 7, 9, 11]))
        lat = ToricLattice(L)
        k = 2 * int(rng.integers(1, 6))
        cells = rng.choice(lat.n_plaquettes, k, replace=False)
        syn = Syndrome.from_defects(lat, [lat.plaquette_coord(int(c)) for c in cells])
        g = build_defect_graph(syn)
        m = min_weight_perfect_matching(g)
        brute = min_pairing_weight(np.nan_to_num(g.weights))
        mismatches += not math.isclose(m.weight, brute, rel_tol=0, abs_tol=1e-9)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 300
    report(capsys, 9, ok, f"{1000 - mismatches}/1000 random syndromes (2-10 defects) match the brute-force "
                          f"minimum; {elapsed:.0f}s")
    assert ok


def test_criterion_10_determinism(capsys, threshold_rows, tmp_path):
    base = {(r.L, r.p): r.N_f for r in threshold_rows[0]}
    same = {}
    for w in (4, 8):
        rows = sweep(tmp_path / f"w{w}.csv", THRESHOLD_L, THRESHOLD_P, 10_000, SWEEP_SEED, w)
        same[w] = {(r.L, r.p): r.N_f for r in rows} == base
    ok = all(same.values())
    report(capsys, 10, ok, f"criterion-3 sweep ({len(base)} cells) rerun with workers 4 and 8: "
                           f"bit-identical N_f per cell vs workers 1: {same}")
    assert ok
