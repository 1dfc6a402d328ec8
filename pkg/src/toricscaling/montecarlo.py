"""Failure-rate estimation by sampling, plus an exact enumeration oracle.

A trial samples ``E``, decodes its syndrome to ``E'`` and fails when
``C = E + E'`` winds round the torus. Trial ``t`` always draws from Philox
substream ``t`` of the master seed, so batch results do not depend on block
size, worker count or scheduling.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.stats import binom

from .decoder import DEFAULT_TAU, DecoderConfig, decode_batch
from .lattice import ErrorChain, ToricLattice
from .noise import check_probability, enumerate_masks, sample_block, sample_mask

logger = logging.getLogger(__name__)

BLOCK_SIZE = 2**14
MAX_ENUMERATED_CHAINS = 10**8


@dataclass(frozen=True)
class TrialConfig:
    L: int
    p: float
    N: int
    tau: float = DEFAULT_TAU
    master_seed: int = 0

    def __post_init__(self):
        lattice = ToricLattice(self.L)
        object.__setattr__(self, "p", check_probability(self.p))
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        DecoderConfig(self.tau).check_lattice(lattice.L)
        object.__setattr__(self, "tau", float(self.tau))
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def lattice(self) -> ToricLattice:
        return ToricLattice(self.L)


@dataclass(frozen=True)
class FailureEstimate:
    N: int
    N_f: int

    def __post_init__(self):
        if not 0 <= self.N_f <= self.N:
            raise ValueError("need 0 <= N_f <= N")

    @property
    def P_fail(self) -> float:
        return self.N_f / self.N

    @property
    def sigma(self) -> float:
        p = self.P_fail
        return math.sqrt(p * (1.0 - p) / self.N)

    def __add__(self, other: "FailureEstimate") -> "FailureEstimate":
        return FailureEstimate(self.N + other.N, self.N_f + other.N_f)


def failure_flags(lattice: ToricLattice, chains: np.ndarray, tau: float = DEFAULT_TAU,
                  dedupe: bool = False) -> np.ndarray:
    """Decode every row of a ``(B, 2 L**2)`` error array; True where it fails.

    With ``dedupe`` each distinct syndrome is decoded once, which pays off
    when enumerating low-weight shells.
    """
    chains = np.asarray(chains, dtype=bool)
    syn = lattice.syndrome_array(chains)
    if dedupe and len(syn):
        uniq, inverse = np.unique(syn, axis=0, return_inverse=True)
        corr = decode_batch(lattice, uniq, tau)
        corr_parity = lattice.crossing_parities(corr)[inverse.reshape(-1)]
        check = lattice.syndrome_array(corr)[inverse.reshape(-1)]
    else:
        corr = decode_batch(lattice, syn, tau)
        corr_parity = lattice.crossing_parities(corr)
        check = lattice.syndrome_array(corr)
    if not np.array_equal(check, syn):
        raise RuntimeError("decoder returned a correction whose boundary differs from the syndrome")
    # crossing parity is additive, and E + E' is a cycle, so this is its homology
    return (lattice.crossing_parities(chains) ^ corr_parity).any(axis=-1)


def run_trial(config: TrialConfig, trial_index: int, error: ErrorChain | None = None) -> bool:
    """One decode; ``error`` overrides sampling (used to inject fixed patterns)."""
    lattice = config.lattice
    if error is None:
        mask = sample_mask(lattice.n, config.p, config.master_seed, trial_index)
    else:
        lattice._check_owner(error)
        mask = error.mask
    return bool(failure_flags(lattice, mask[None, :], config.tau)[0])


def run_block(config: TrialConfig, start: int, stop: int) -> int:
    """Failures among trials ``start <= t < stop``."""
    lattice = config.lattice
    if config.p == 0.0:
        return 0
    chains = sample_block(lattice, config.p, config.master_seed, start, stop)
    return int(failure_flags(lattice, chains, config.tau).sum())


def _run_block_args(args) -> int:
    return run_block(*args)


def _timed_block(args) -> tuple[int, float]:
    t0 = time.perf_counter()
    n_f = run_block(*args)
    return n_f, time.perf_counter() - t0


def _blocks(config: TrialConfig, block_size: int) -> list[tuple]:
    return [(config, s, min(s + block_size, config.N)) for s in range(0, config.N, block_size)]


def run_batch(config: TrialConfig, workers: int = 1, block_size: int = BLOCK_SIZE) -> FailureEstimate:
    blocks = _blocks(config, block_size)
    if workers <= 1 or len(blocks) == 1:
        n_f = sum(run_block(*b) for b in blocks)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            n_f = sum(pool.map(_run_block_args, blocks))
    return FailureEstimate(config.N, int(n_f))


def iter_cells(configs: Sequence[TrialConfig], workers: int = 1,
               block_size: int = BLOCK_SIZE) -> Iterator[tuple[int, FailureEstimate, float]]:
    """Run several configurations, yielding ``(index, estimate, cpu_seconds)`` in input order.

    All blocks of all cells share one worker pool, so small cells still
    spread across workers. Counts are integer sums over fixed trial
    indices and do not depend on ``workers``.
    """
    tasks = []
    owner = []
    for i, cfg in enumerate(configs):
        for b in _blocks(cfg, block_size):
            tasks.append(b)
            owner.append(i)
    remaining = [0] * len(configs)
    for i in owner:
        remaining[i] += 1
    n_f = [0] * len(configs)
    secs = [0.0] * len(configs)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 and len(tasks) > 1 else None
    try:
        results = pool.map(_timed_block, tasks) if pool else map(_timed_block, tasks)
        for i, (nf, dt) in zip(owner, results):
            n_f[i] += nf
            secs[i] += dt
            remaining[i] -= 1
            if remaining[i] == 0:
                yield i, FailureEstimate(configs[i].N, n_f[i]), secs[i]
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)


# -- exact oracle ------------------------------------------------------------


def default_max_weight(L: int) -> int:
    return (L + 1) // 2 + 2


def failure_weight_counts(L: int, tau: float = DEFAULT_TAU, max_weight: int | None = None,
                          chunk_size: int = 1 << 16) -> np.ndarray:
    """Number of failing chains in each weight shell ``0..max_weight``.

    Full enumeration (``max_weight=None``) is only allowed for ``L = 3``.
    """
    lattice = ToricLattice(L)
    DecoderConfig(tau).check_lattice(L)
    n = lattice.n
    if max_weight is None:
        if L != 3:
            raise ValueError("full enumeration is limited to L = 3; pass max_weight")
        return _full_counts_l3(lattice, tau)
    if not 0 <= max_weight <= n:
        raise ValueError(f"max_weight must lie in [0, {n}]")
    total = sum(math.comb(n, w) for w in range(max_weight + 1))
    if total > MAX_ENUMERATED_CHAINS:
        raise ValueError(f"enumeration of {total} chains exceeds the limit of {MAX_ENUMERATED_CHAINS}")
    counts = np.zeros(max_weight + 1, dtype=np.int64)
    for w in range(max_weight + 1):
        for masks in enumerate_masks(lattice, w, chunk_size):
            counts[w] += int(failure_flags(lattice, masks, tau, dedupe=True).sum())
        logger.debug("L=%d weight %d: %d failing", L, w, counts[w])
    return counts


def _full_counts_l3(lattice: ToricLattice, tau: float) -> np.ndarray:
    n = lattice.n
    ints = np.arange(2**n, dtype=np.int64)
    masks = ((ints[:, None] >> np.arange(n)) & 1).astype(bool)
    fails = failure_flags(lattice, masks, tau, dedupe=True)
    weights = masks.sum(axis=1)
    return np.bincount(weights[fails], minlength=n + 1).astype(np.int64)


def probability_from_counts(counts: np.ndarray, n: int, p: float) -> float:
    p = check_probability(p)
    if p == 0.0:
        return 0.0
    w = np.arange(len(counts))
    terms = counts * np.exp(w * math.log(p) + (n - w) * math.log1p(-p))
    return float(math.fsum(terms.tolist()))


def truncation_bound(L: int, p: float, max_weight: int) -> float:
    """Probability of more than ``max_weight`` errors: bounds what truncation omits."""
    return float(binom.sf(max_weight, 2 * L * L, p))


def exact_failure_probability(L: int, p: float, tau: float = DEFAULT_TAU,
                              max_weight: int | None = None) -> float:
    """Failure probability summed over enumerated chains.

    With ``max_weight`` set the value is a lower bound, short by at most
    :func:`truncation_bound`.
    """
    p = check_probability(p)
    ToricLattice(L)
    if max_weight is None and L != 3:
        raise ValueError("full enumeration is limited to L = 3; pass max_weight")
    if p == 0.0:
        return 0.0
    counts = failure_weight_counts(L, tau, max_weight)
    return probability_from_counts(counts, 2 * L * L, p)
