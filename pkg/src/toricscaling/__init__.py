"""Toric-code decoding with a degeneracy-weighted matching decoder, Monte Carlo
failure estimation, finite-size scaling fits and qubit-overhead estimates."""

from .decoder import DEFAULT_TAU, DecoderConfig, MatchingDecoder, decode, decode_batch
from .lattice import ErrorChain, HomologyClass, Syndrome, ToricLattice
from .montecarlo import (
    FailureEstimate,
    TrialConfig,
    exact_failure_probability,
    failure_weight_counts,
    run_batch,
    run_trial,
)
from .noise import NoiseModel, RandomStream, sample_error
from .overhead import OverheadResult, omega_lp, omega_ush, plan_overhead
from .scaling import (
    FitError,
    QuadraticLogL,
    Regime,
    ThresholdFit,
    ThresholdScaling,
    UniversalScaling,
    UniversalScalingParams,
    classify_regime,
    fit_decay_constant,
    fit_quadratic_logL,
    fit_threshold,
    p_fail_lowp,
    p_fail_ush,
    p_lp,
    p_ush,
    rescale,
)

__version__ = "0.1.0"
