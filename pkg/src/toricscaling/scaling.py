"""Scaling laws for the logical failure rate and the estimators that fit them.

Two regimes are modelled:

* near and below threshold, ``P = A exp(-a (p_c0 - p)**nu0 L)``, with
  ``A, p_c0, nu0`` taken from a fit of ``A + B x + C x**2 + D L**(-1/mu)`` in
  the rescaled variable ``x = (p - p_c0) L**(1/nu0)``;
* at low ``p``, the count of half-filled shortest loops,
  ``P = 2L C(L, ceil(L/2)) p**ceil(L/2)``.

Which regime applies is decided from the binomial error-weight statistics via
:func:`p_ush` and :func:`p_lp`.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d


class FitError(RuntimeError):
    """A nonlinear fit failed to converge from every starting point."""


class Regime(str, enum.Enum):
    UNIVERSAL_SCALING = "UniversalScaling"
    LOW_P = "LowP"
    CROSSOVER = "Crossover"

    def __str__(self) -> str:
        return self.value


THRESHOLD_PARAMS = ("A", "B", "C", "D", "p_c0", "nu0", "mu")

# reference fit of the near-threshold ansatz, value and one-sigma error
REFERENCE_THRESHOLD = {
    "p_c0": (0.1028, 0.0002),
    "nu0": (1.530, 0.006),
    "mu": (1.15, 0.8),
    "A": (0.246, 0.006),
    "B": (1.87, 0.01),
    "C": (2.16, 0.06),
    "D": (-0.026, 0.008),
}
REFERENCE_DECAY = (32.31, 0.13)

# restart spread around the reference values for the threshold fit
_START_SPREAD = {"A": 0.02, "B": 0.3, "C": 1.0, "D": 0.02, "p_c0": 0.002, "nu0": 0.15, "mu": 0.3}
_LOWER = {"A": -np.inf, "B": -np.inf, "C": -np.inf, "D": -np.inf, "p_c0": 1e-6, "nu0": 0.05, "mu": 0.05}
_UPPER = {"A": np.inf, "B": np.inf, "C": np.inf, "D": np.inf, "p_c0": 0.5, "nu0": 20.0, "mu": 50.0}


# -- closed forms -------------------------------------------------------------


def rescale(L, p, p_c0: float, nu0: float):
    """``x = (p - p_c0) L**(1/nu0)``; negative below threshold."""
    if nu0 <= 0:
        raise ValueError("nu0 must be positive")
    return (np.asarray(p, dtype=float) - p_c0) * np.asarray(L, dtype=float) ** (1.0 / nu0)


def threshold_ansatz(L, p, A, B, C, D, p_c0, nu0, mu):
    x = rescale(L, p, p_c0, nu0)
    return A + B * x + C * x**2 + D * np.asarray(L, dtype=float) ** (-1.0 / mu)


@dataclass(frozen=True)
class UniversalScalingParams:
    A: float = REFERENCE_THRESHOLD["A"][0]
    a: float = REFERENCE_DECAY[0]
    p_c0: float = REFERENCE_THRESHOLD["p_c0"][0]
    nu0: float = REFERENCE_THRESHOLD["nu0"][0]

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("decay constant a must be positive")
        if not 0 < self.p_c0 < 0.5:
            raise ValueError("p_c0 must lie in (0, 0.5)")
        if not self.nu0 > 0:
            raise ValueError("nu0 must be positive")

    def correlation_length(self, p):
        """``xi = |p - p_c0|**(-nu0)``."""
        return np.abs(np.asarray(p, dtype=float) - self.p_c0) ** (-self.nu0)


def p_fail_ush(L, p, params: UniversalScalingParams | None = None):
    """Universal-scaling failure rate, evaluated with ``(p_c0 - p)`` below threshold."""
    params = params or UniversalScalingParams()
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr >= params.p_c0):
        raise ValueError(f"universal scaling law needs p < p_c0 = {params.p_c0}")
    out = params.A * np.exp(-params.a * (params.p_c0 - p_arr) ** params.nu0 * np.asarray(L, dtype=float))
    return float(out) if out.ndim == 0 else out


def _check_odd_L(L) -> int:
    if int(L) != L or L < 3 or int(L) % 2 == 0:
        raise ValueError(f"L must be an odd integer >= 3, got {L}")
    return int(L)


def lowp_coefficient(L: int) -> int:
    """``2L * L! / (ceil(L/2)! floor(L/2)!)``: shortest loops times half-fillings."""
    L = _check_odd_L(L)
    return 2 * L * math.comb(L, (L + 1) // 2)


def log_p_fail_lowp(L: int, p: float) -> float:
    if not p > 0:
        raise ValueError("p must be positive")
    return math.log(lowp_coefficient(L)) + ((L + 1) // 2) * math.log(p)


def p_fail_lowp(L: int, p: float) -> float:
    """Low-``p`` counting formula, computed in the log domain."""
    return math.exp(log_p_fail_lowp(L, p))


def p_ush(L):
    """Smallest ``p`` at which the universal scaling law is trusted."""
    L = np.asarray(L, dtype=float)
    out = (L**2 + np.sqrt(2 * L**3) + 2 * L) / (4 * L**3)
    return float(out) if out.ndim == 0 else out


def p_lp(L):
    """Largest ``p`` at which the low-``p`` formula is trusted."""
    L = np.asarray(L, dtype=float)
    out = (L**2 - np.sqrt(2 * L**3) + 2 * L) / (4 * L**3)
    return float(out) if out.ndim == 0 else out


def validity_root(L: int, kind: str = "ush", n_sigma: float = 2.0) -> float:
    """Solve the error-weight condition for ``p`` numerically.

    ``kind="ush"`` solves ``mu_w - (n/2) sigma_w = ceil(L/2)`` and ``"lp"``
    solves ``mu_w + (n/2) sigma_w = ceil(L/2)``, with ``mu_w = 2 L**2 p`` and
    ``sigma_w**2 = 2 L**2 p (1 - p)``.
    """
    half = (L + 1) // 2
    n = 2 * L * L
    sign = {"ush": -1.0, "lp": 1.0}[kind]

    def f(p):
        return n * p + sign * 0.5 * n_sigma * math.sqrt(n * p * (1 - p)) - half

    lo, hi = 1e-15, 0.5
    if f(lo) * f(hi) > 0:
        raise ValueError(f"no root of the {kind} condition for L={L}, n_sigma={n_sigma}")
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-14)


def regime_bounds(L, n_sigma: float = 2.0) -> tuple[float, float]:
    """``(p_lp, p_ush)``; the closed forms for ``n_sigma = 2``, numerical roots otherwise."""
    if n_sigma == 2.0:
        return p_lp(L), p_ush(L)
    return validity_root(L, "lp", n_sigma), validity_root(L, "ush", n_sigma)


def classify_regime(L, p, n_sigma: float = 2.0) -> Regime:
    lo, hi = regime_bounds(L, n_sigma)
    if p > hi:
        return Regime.UNIVERSAL_SCALING
    if p < lo:
        return Regime.LOW_P
    return Regime.CROSSOVER


# -- estimators ---------------------------------------------------------------


def _check_Lp(X) -> np.ndarray:
    X = check_array(X, dtype=float)
    if X.shape[1] != 2:
        raise ValueError("X must have two columns: L and p")
    return X


def _check_sigma(sigma, n: int) -> np.ndarray:
    if sigma is None:
        raise ValueError("sigma (per-point standard errors) is required")
    sigma = column_or_1d(sigma).astype(float)
    if sigma.shape[0] != n:
        raise ValueError("sigma length does not match the data")
    if not np.all(sigma > 0):
        raise ValueError("all sigma must be positive; drop zero-count points first")
    return sigma


@dataclass(frozen=True)
class ThresholdFit:
    A: float
    B: float
    C: float
    D: float
    p_c0: float
    nu0: float
    mu_fse: float
    errors: dict
    chi2_per_dof: float
    n_points: int
    fixed: tuple = ()

    @property
    def params(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "D": self.D,
                "p_c0": self.p_c0, "nu0": self.nu0, "mu": self.mu_fse}

    def usp(self, a: float = REFERENCE_DECAY[0]) -> UniversalScalingParams:
        return UniversalScalingParams(A=self.A, a=a, p_c0=self.p_c0, nu0=self.nu0)


class ThresholdScaling(RegressorMixin, BaseEstimator):
    """Weighted fit of ``P = A + B x + C x**2 + D L**(-1/mu)``.

    ``X`` has columns ``(L, p)``; ``sigma`` gives the standard error of each
    ``P``. The fit is a bounded trust-region least-squares run from
    ``n_starts`` points scattered round the reference constants; the lowest
    residual wins (earliest start on ties). ``fix_mu`` pins the weakly
    identified finite-size exponent.
    """

    def __init__(self, n_starts: int = 16, fix_mu: float | None = None, xtol: float = 1e-9,
                 random_state: int = 0):
        self.n_starts = n_starts
        self.fix_mu = fix_mu
        self.xtol = xtol
        self.random_state = random_state

    def _free_names(self):
        return [k for k in THRESHOLD_PARAMS if not (k == "mu" and self.fix_mu is not None)]

    def _full(self, theta):
        vals = dict(zip(self._free_names(), theta))
        if self.fix_mu is not None:
            vals["mu"] = float(self.fix_mu)
        return vals

    def _starts(self, names):
        rng = np.random.default_rng(self.random_state)
        base = np.array([REFERENCE_THRESHOLD[k][0] for k in names])
        spread = np.array([_START_SPREAD[k] for k in names])
        lo = np.array([_LOWER[k] for k in names])
        hi = np.array([_UPPER[k] for k in names])
        starts = [base]
        for _ in range(self.n_starts - 1):
            starts.append(base + spread * rng.standard_normal(len(names)))
        margin = 1e-9
        return [np.clip(s, lo + margin, hi - margin) for s in starts], lo, hi

    def fit(self, X, y, sigma=None):
        X = _check_Lp(X)
        y = column_or_1d(y).astype(float)
        sigma = _check_sigma(sigma, len(y))
        L, p = X[:, 0], X[:, 1]
        if len(np.unique(L)) < 4:
            raise ValueError("threshold fit needs at least four lattice sizes")
        names = self._free_names()
        if len(y) <= len(names):
            raise ValueError(f"need more than {len(names)} points for the threshold fit")

        def residuals(theta):
            v = self._full(theta)
            return (threshold_ansatz(L, p, **v) - y) / sigma

        starts, lo, hi = self._starts(names)
        best = None
        n_ok = 0
        for i, start in enumerate(starts):
            try:
                res = least_squares(residuals, start, bounds=(lo, hi), method="trf", x_scale="jac",
                                    xtol=self.xtol, ftol=1e-15, gtol=1e-15, max_nfev=20000)
            except (ValueError, FloatingPointError):
                continue
            if res.status <= 0 or not np.isfinite(res.cost):
                continue
            n_ok += 1
            if best is None or res.cost < best.cost:
                best = res
        if best is None:
            raise FitError(f"threshold fit did not converge from any of {len(starts)} starts")

        J = best.jac
        cov = np.linalg.pinv(J.T @ J)
        errs = np.sqrt(np.clip(np.diag(cov), 0, None))
        dof = len(y) - len(names)
        self.params_ = self._full(best.x)
        self.errors_ = dict(zip(names, errs.tolist()))
        if self.fix_mu is not None:
            self.errors_["mu"] = 0.0
        self.covariance_ = cov
        self.chi2_per_dof_ = float(2 * best.cost / dof)
        self.n_points_ = len(y)
        self.n_converged_ = n_ok
        self.result_ = best
        span = np.where(np.isfinite(hi - lo), hi - lo, 1.0)
        pinned = (best.x - lo < 1e-6 * span) | (hi - best.x < 1e-6 * span)
        self.at_bound_ = [k for k, flag in zip(names, pinned) if flag]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = _check_Lp(X)
        return threshold_ansatz(X[:, 0], X[:, 1], **self.params_)

    def collapse(self, X, y):
        """Rescaled ``x`` and ``P - D L**(-1/mu)`` for a data-collapse plot."""
        check_is_fitted(self, "params_")
        X = _check_Lp(X)
        v = self.params_
        x = rescale(X[:, 0], X[:, 1], v["p_c0"], v["nu0"])
        return x, np.asarray(y, dtype=float) - v["D"] * X[:, 0] ** (-1.0 / v["mu"])

    def to_fit(self) -> ThresholdFit:
        check_is_fitted(self, "params_")
        fixed = ("mu",) if self.fix_mu is not None else ()
        v = self.params_
        return ThresholdFit(v["A"], v["B"], v["C"], v["D"], v["p_c0"], v["nu0"], v["mu"],
                            dict(self.errors_), self.chi2_per_dof_, self.n_points_, fixed)


class UniversalScaling(RegressorMixin, BaseEstimator):
    """One-parameter fit of the decay constant ``a``.

    ``A``, ``p_c0`` and ``nu0`` are held fixed (normally from a threshold
    fit). The model is linear in ``a`` after taking logs,
    ``ln(P/A) = -a (p_c0 - p)**nu0 L``, and is solved by weighted least
    squares with log-space errors ``sigma / P``. With ``validity_filter`` only
    points above ``p_ush(L)`` are used; the kept-row mask is ``mask_``.
    """

    def __init__(self, A: float = REFERENCE_THRESHOLD["A"][0], p_c0: float = REFERENCE_THRESHOLD["p_c0"][0],
                 nu0: float = REFERENCE_THRESHOLD["nu0"][0], n_sigma: float = 2.0, validity_filter: bool = True):
        self.A = A
        self.p_c0 = p_c0
        self.nu0 = nu0
        self.n_sigma = n_sigma
        self.validity_filter = validity_filter

    def row_filter(self, X, y) -> tuple[np.ndarray, list[str]]:
        """Boolean keep-mask plus a reason string for every dropped row."""
        X = _check_Lp(X)
        y = column_or_1d(y).astype(float)
        keep = np.ones(len(y), dtype=bool)
        reasons = []
        for i, (L, p) in enumerate(X):
            why = None
            if p >= self.p_c0:
                why = f"p >= p_c0 = {self.p_c0:g}"
            elif y[i] <= 0:
                why = "P_fail = 0"
            elif self.validity_filter:
                bound = regime_bounds(int(L), self.n_sigma)[1]
                if not p > bound:
                    why = f"p <= p_USH(L) = {bound:.6g}"
            if why:
                keep[i] = False
                reasons.append(f"L={int(L)} p={p:g}: {why}")
        return keep, reasons

    def fit(self, X, y, sigma=None):
        X = _check_Lp(X)
        y = column_or_1d(y).astype(float)
        sigma = _check_sigma(sigma, len(y))
        keep, reasons = self.row_filter(X, y)
        if not keep.any():
            raise ValueError("no data points left after the validity filter")
        L, p, P, s = X[keep, 0], X[keep, 1], y[keep], sigma[keep]
        u = (self.p_c0 - p) ** self.nu0 * L
        t = np.log(P / self.A)
        w = (P / s) ** 2
        S = float(np.sum(w * u * u))
        self.a_ = float(-np.sum(w * u * t) / S)
        self.a_error_ = float(1.0 / math.sqrt(S))
        r = t + self.a_ * u
        dof = max(int(keep.sum()) - 1, 1)
        self.chi2_per_dof_ = float(np.sum(w * r * r) / dof)
        self.mask_ = keep
        self.excluded_ = reasons
        self.n_points_ = int(keep.sum())
        return self

    def params(self) -> UniversalScalingParams:
        check_is_fitted(self, "a_")
        return UniversalScalingParams(A=self.A, a=self.a_, p_c0=self.p_c0, nu0=self.nu0)

    def predict(self, X):
        check_is_fitted(self, "a_")
        X = _check_Lp(X)
        return p_fail_ush(X[:, 0], X[:, 1], self.params())


class QuadraticLogL(RegressorMixin, BaseEstimator):
    """``ln P = alpha + beta L + gamma L**2`` at one fixed ``p``.

    ``X`` is the column of lattice sizes. Points with ``P = 0`` are dropped
    (counted in ``n_excluded_``, with a warning); the rest are weighted by
    ``P / sigma``, the delta-method error of ``ln P``.
    """

    def __init__(self, min_sizes: int = 4):
        self.min_sizes = min_sizes

    def fit(self, X, y, sigma=None):
        L = column_or_1d(check_array(np.asarray(X, dtype=float).reshape(len(X), -1), dtype=float)[:, 0])
        y = column_or_1d(y).astype(float)
        if sigma is None:
            raise ValueError("sigma (per-point standard errors) is required")
        sigma = column_or_1d(sigma).astype(float)
        keep = y > 0
        self.n_excluded_ = int((~keep).sum())
        if self.n_excluded_:
            warnings.warn(f"{self.n_excluded_} point(s) with P_fail = 0 excluded from the log fit", stacklevel=2)
        L, y, sigma = L[keep], y[keep], sigma[keep]
        if len(np.unique(L)) < self.min_sizes:
            raise ValueError(f"quadratic fit needs at least {self.min_sizes} lattice sizes with P_fail > 0")
        if not np.all(sigma > 0):
            raise ValueError("all sigma must be positive")
        coef, cov = np.polyfit(L, np.log(y), 2, w=y / sigma, cov="unscaled")
        gamma, beta, alpha = coef
        self.coef_ = np.array([alpha, beta, gamma])
        self.coef_error_ = np.sqrt(np.diag(cov))[::-1].copy()
        self.gamma_over_beta_ = float(abs(gamma) / abs(beta)) if beta != 0 else math.inf
        return self

    @property
    def alpha_(self):
        return self.coef_[0]

    @property
    def beta_(self):
        return self.coef_[1]

    @property
    def gamma_(self):
        return self.coef_[2]

    def predict(self, X):
        check_is_fitted(self, "coef_")
        L = np.asarray(X, dtype=float).reshape(-1)
        a, b, c = self.coef_
        return np.exp(a + b * L + c * L * L)


# -- functional front ends ----------------------------------------------------


def _unpack(data) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError("data must be rows of (L, p, P_fail, sigma)")
    return arr[:, :2], arr[:, 2], arr[:, 3]


def fit_threshold(data, **kwargs) -> ThresholdFit:
    X, y, s = _unpack(data)
    return ThresholdScaling(**kwargs).fit(X, y, sigma=s).to_fit()


@dataclass(frozen=True)
class QuadraticFit:
    alpha: float
    beta: float
    gamma: float
    errors: tuple[float, float, float]
    n_excluded: int = 0

    @property
    def gamma_over_beta(self) -> float:
        return abs(self.gamma) / abs(self.beta) if self.beta else math.inf


def fit_quadratic_logL(data) -> QuadraticFit:
    """``data`` rows are ``(L, P_fail, sigma)`` at a single ``p``."""
    arr = np.asarray(data, dtype=float)
    est = QuadraticLogL().fit(arr[:, 0], arr[:, 1], sigma=arr[:, 2])
    return QuadraticFit(*est.coef_.tolist(), tuple(est.coef_error_.tolist()), est.n_excluded_)


@dataclass(frozen=True)
class DecayFit:
    a: float
    a_error: float
    chi2_per_dof: float
    n_points: int
    excluded: list = field(default_factory=list)


def fit_decay_constant(data, A: float = REFERENCE_THRESHOLD["A"][0], p_c0: float = REFERENCE_THRESHOLD["p_c0"][0],
                       nu0: float = REFERENCE_THRESHOLD["nu0"][0], validity_filter: bool = True,
                       n_sigma: float = 2.0) -> DecayFit:
    X, y, s = _unpack(data)
    est = UniversalScaling(A=A, p_c0=p_c0, nu0=nu0, n_sigma=n_sigma, validity_filter=validity_filter)
    est.fit(X, y, sigma=s)
    return DecayFit(est.a_, est.a_error_, est.chi2_per_dof_, est.n_points_, est.excluded_)
