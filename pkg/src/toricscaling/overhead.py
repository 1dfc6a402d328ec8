"""Qubit overhead ``Omega = 2 L**2`` needed to reach a target failure rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scaling import Regime, UniversalScalingParams, p_fail_lowp, p_fail_ush, p_lp, p_ush


@dataclass(frozen=True)
class OverheadResult:
    """``omega = 2 L_real**2``; ``L_code`` is the smallest odd size ``>= L_real`` (at least 3).

    For a crossover result ``candidates`` holds the two single-regime results
    and the top-level fields copy the larger of them.
    """

    omega: float
    L_real: float
    L_code: int
    regime: Regime
    achieved_p_fail: float
    candidates: tuple["OverheadResult", ...] = ()

    def as_row(self) -> dict:
        return {
            "omega": self.omega,
            "L_real": self.L_real,
            "L_code": self.L_code,
            "regime": str(self.regime),
            "achieved_p_fail": self.achieved_p_fail,
        }


def code_size(L_real: float) -> int:
    L = max(3, math.ceil(L_real))
    return L if L % 2 else L + 1


def _check_target(target: float, upper: float, what: str) -> float:
    target = float(target)
    if not 0.0 < target < upper:
        raise ValueError(f"target P_fail must lie in (0, {what}), got {target}")
    return target


def omega_ush(target: float, p: float, params: UniversalScalingParams | None = None) -> OverheadResult:
    """Invert the universal scaling law exactly for ``L``."""
    params = params or UniversalScalingParams()
    target = _check_target(target, params.A, f"A = {params.A}")
    if not 0.0 < p < params.p_c0:
        raise ValueError(f"p must lie in (0, p_c0 = {params.p_c0}), got {p}")
    L_real = math.log(params.A / target) / (params.a * (params.p_c0 - p) ** params.nu0)
    L_code = code_size(L_real)
    return OverheadResult(2.0 * L_real**2, L_real, L_code, Regime.UNIVERSAL_SCALING,
                          p_fail_ush(L_code, p, params))


def omega_lp(target: float, p: float) -> OverheadResult:
    """Approximate inversion of the low-``p`` formula (Stirling plus the lower Lambert-W branch)."""
    target = _check_target(target, 1.0, "1")
    if not 0.0 < p < 0.25:
        raise ValueError(f"p must lie in (0, 1/4) for the low-p inversion, got {p}")
    log_sq = 2.0 * math.log(target)
    L_real = abs((log_sq - math.log(-log_sq)) / math.log(4.0 * p))
    L_code = code_size(L_real)
    return OverheadResult(2.0 * L_real**2, L_real, L_code, Regime.LOW_P, p_fail_lowp(L_code, p))


def plan_overhead(target: float, p: float, params: UniversalScalingParams | None = None) -> OverheadResult:
    """Pick the regime whose validity condition holds at its own candidate size.

    If both or neither hold the result is a crossover carrying both
    candidates; its top-level numbers are those of the larger overhead.
    """
    params = params or UniversalScalingParams()
    if p >= params.p_c0:
        raise ValueError(f"p = {p} is at or above threshold p_c0 = {params.p_c0}; no finite overhead")
    ush = omega_ush(target, p, params)
    lp = omega_lp(target, p)
    ush_ok = p > p_ush(ush.L_real)
    lp_ok = p < p_lp(lp.L_real)
    if ush_ok and not lp_ok:
        return ush
    if lp_ok and not ush_ok:
        return lp
    big = max(ush, lp, key=lambda r: r.omega)
    return OverheadResult(big.omega, big.L_real, big.L_code, Regime.CROSSOVER, big.achieved_p_fail, (ush, lp))
