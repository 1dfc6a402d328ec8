import math

import mpmath
import numpy as np
import pytest
from sklearn.base import clone

from toricscaling.montecarlo import failure_weight_counts
from toricscaling.scaling import (
    REFERENCE_DECAY,
    REFERENCE_THRESHOLD,
    FitError,
    QuadraticLogL,
    Regime,
    ThresholdScaling,
    UniversalScaling,
    UniversalScalingParams,
    classify_regime,
    fit_decay_constant,
    fit_quadratic_logL,
    fit_threshold,
    lowp_coefficient,
    p_fail_lowp,
    p_fail_ush,
    p_lp,
    p_ush,
    rescale,
    threshold_ansatz,
    validity_root,
)

REF = {k: v[0] for k, v in REFERENCE_THRESHOLD.items()}


def threshold_grid():
    Ls = np.repeat([5, 7, 9, 11], 18)
    ps = np.tile(np.round(np.arange(0.095, 0.1125, 0.001), 6), 4)
    return Ls, ps


def test_rescale():
    assert rescale(11, 0.1028, 0.1028, 1.53) == 0.0
    assert rescale(11, 0.1128, 0.1028, 1.530) == pytest.approx(0.0479, abs=5e-5)
    assert rescale(7, 0.09, 0.1, 1.5) < 0
    assert rescale(9, 0.12, 0.1, 1.5) == pytest.approx(2 * rescale(9, 0.11, 0.1, 1.5))
    with pytest.raises(ValueError):
        rescale(5, 0.1, 0.1, 0.0)


def test_threshold_fit_zero_noise():
    Ls, ps = threshold_grid()
    y = threshold_ansatz(Ls, ps, **REF)
    data = np.c_[Ls, ps, y, np.full_like(y, 1e-3)]
    fit = fit_threshold(data)
    for k, v in REF.items():
        assert fit.params[k] == pytest.approx(v, abs=1e-6)
    assert fit.mu_fse == pytest.approx(1.15, abs=1e-6)
    assert fit.chi2_per_dof < 1e-12


def test_threshold_fit_binomial_noise():
    Ls, ps = threshold_grid()
    y = threshold_ansatz(Ls, ps, **REF)
    N = 10**6
    P = np.random.default_rng(8).binomial(N, y) / N
    s = np.sqrt(P * (1 - P) / N)
    est = ThresholdScaling(fix_mu=1.15).fit(np.c_[Ls, ps], P, sigma=s)
    assert abs(est.params_["p_c0"] - REF["p_c0"]) < 2 * est.errors_["p_c0"]
    assert est.chi2_per_dof_ < 2


def test_threshold_collapse():
    Ls, ps = threshold_grid()
    y = threshold_ansatz(Ls, ps, **REF)
    est = ThresholdScaling().fit(np.c_[Ls, ps], y, sigma=np.full_like(y, 1e-3))
    x, yc = est.collapse(np.c_[Ls, ps], y)
    assert np.allclose(yc, REF["A"] + REF["B"] * x + REF["C"] * x**2, atol=1e-8)


def test_threshold_fit_errors():
    with pytest.raises(ValueError):
        fit_threshold([[5, 0.1, 0.2, 0.01]] * 10)
    Ls, ps = threshold_grid()
    y = threshold_ansatz(Ls, ps, **REF)
    with pytest.raises(ValueError):
        ThresholdScaling().fit(np.c_[Ls, ps], y, sigma=np.zeros_like(y))
    with pytest.raises(FitError):
        ThresholdScaling(n_starts=2).fit(np.c_[Ls, ps], np.full_like(y, np.nan), sigma=np.ones_like(y))


def test_threshold_estimator_is_sklearn_compatible():
    est = ThresholdScaling(fix_mu=1.0)
    c = clone(est)
    assert c.get_params()["fix_mu"] == 1.0


def test_quadratic_exact_exponential():
    L = np.array([5, 7, 9, 11, 13])
    P = np.exp(-1 - 0.3 * L)
    fit = fit_quadratic_logL(np.c_[L, P, 0.01 * P])
    assert abs(fit.gamma) < 1e-10
    assert fit.beta == pytest.approx(-0.3, abs=1e-9)
    assert fit.alpha == pytest.approx(-1.0, abs=1e-8)


def test_quadratic_excludes_zeros():
    L = np.array([5, 7, 9, 11, 13, 15])
    P = np.exp(-1 - 0.3 * L)
    P[-1] = 0
    sigma = np.full_like(P, 1e-4)
    with pytest.warns(UserWarning):
        est = QuadraticLogL().fit(L, P, sigma=sigma)
    assert est.n_excluded_ == 1
    with pytest.raises(ValueError), pytest.warns(UserWarning):
        QuadraticLogL().fit(L[:4], np.r_[P[:3], 0.0], sigma=sigma[:4])


def test_decay_recovers_a():
    usp = UniversalScalingParams()
    rows = []
    for L in [7, 9, 11, 13, 15]:
        for p in [0.04, 0.05, 0.06, 0.07, 0.08]:
            P = p_fail_ush(L, p, usp)
            rows.append((L, p, P, 0.01 * P))
    fit = fit_decay_constant(rows)
    assert fit.a == pytest.approx(REFERENCE_DECAY[0], rel=1e-12)
    assert fit.excluded  # L=7 at low p is outside the validity window


def test_decay_filter_removes_sagging_points():
    usp = UniversalScalingParams()
    rows = []
    for L in [7, 9, 11]:
        for p in [0.03, 0.05, 0.08]:
            P = p_fail_ush(L, p, usp)
            if p < p_ush(L):
                P *= 0.3  # sag below the law at low p
            rows.append((L, p, P, 0.05 * P))
    filt = fit_decay_constant(rows)
    raw = fit_decay_constant(rows, validity_filter=False)
    assert filt.a == pytest.approx(REFERENCE_DECAY[0], rel=1e-9)
    assert raw.a > filt.a


def test_decay_empty_after_filter():
    with pytest.raises(ValueError):
        fit_decay_constant([(5, 0.05, 0.01, 0.001)])


def test_decay_estimator_predict():
    est = UniversalScaling().fit(np.array([[11, 0.08]]), [0.05], sigma=[0.001])
    assert est.predict(np.array([[11, 0.08]]))[0] == pytest.approx(0.05)


def test_ush_values():
    usp = UniversalScalingParams()
    assert p_fail_ush(11, 0.1028 - 1e-12, usp) == pytest.approx(0.246, rel=1e-9)
    r1 = p_fail_ush(7, 0.06, usp) / usp.A
    r2 = p_fail_ush(14, 0.06, usp) / usp.A
    assert r2 == pytest.approx(r1**2, rel=1e-12)
    with mpmath.workdps(50):
        ref = mpmath.mpf("0.246") * mpmath.exp(-mpmath.mpf("32.31") * mpmath.mpf("0.0228") ** mpmath.mpf("1.530") * 11)
    assert p_fail_ush(11, 0.08, usp) == pytest.approx(float(ref), rel=1e-12)
    with pytest.raises(ValueError):
        p_fail_ush(11, 0.11, usp)
    with pytest.raises(ValueError):
        UniversalScalingParams(a=-1)


def test_correlation_length():
    usp = UniversalScalingParams()
    assert usp.correlation_length(0.0928) == pytest.approx(0.01 ** -1.53)


def test_lowp_values():
    assert p_fail_lowp(3, 0.01) == pytest.approx(1.8e-3, rel=1e-12)
    assert p_fail_lowp(5, 0.01) == pytest.approx(1e-4, rel=1e-12)
    assert lowp_coefficient(3) == 18
    assert failure_weight_counts(3, max_weight=2)[2] == lowp_coefficient(3)
    assert 0.0 <= p_fail_lowp(1001, 0.01) < 1e-300
    assert p_fail_lowp(7, 0.002) > p_fail_lowp(7, 0.001)
    assert p_fail_lowp(9, 0.001) < p_fail_lowp(7, 0.001)
    with pytest.raises(ValueError):
        p_fail_lowp(4, 0.01)


def test_bounds():
    for L in range(3, 102, 2):
        assert p_lp(L) < p_ush(L)
        assert p_ush(L) - p_lp(L) == pytest.approx(math.sqrt(2) / (math.sqrt(L) * 2 * L))
    assert p_ush(10**6) * 4 * 10**6 == pytest.approx(1, rel=1e-2)


def test_validity_root_close_to_closed_form():
    for L in range(9, 60, 2):
        assert validity_root(L, "ush") == pytest.approx(p_ush(L), rel=0.10)


def test_classify():
    assert classify_regime(23, 0.08) is Regime.UNIVERSAL_SCALING
    assert classify_regime(5, 1e-4) is Regime.LOW_P
    assert classify_regime(11, 0.5 * (p_lp(11) + p_ush(11))) is Regime.CROSSOVER
    assert classify_regime(11, 1 / 44) is Regime.CROSSOVER
    assert str(Regime.LOW_P) == "LowP"
