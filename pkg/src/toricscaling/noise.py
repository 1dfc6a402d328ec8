"""Independent bit-flip noise and exhaustive enumeration of error chains."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .lattice import ErrorChain, ToricLattice


def check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"error rate p must lie in [0, 0.5], got {p}")
    return p


@dataclass(frozen=True)
class NoiseModel:
    """Each edge suffers an X flip independently with probability ``p``."""

    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", check_probability(self.p))


@dataclass(frozen=True)
class RandomStream:
    """Counter-addressed Philox substream ``stream_index`` of ``master_seed``.

    The stream for a trial depends only on the pair of integers, never on
    which worker draws it or in what order, which keeps batch results
    identical under any parallel schedule.
    """

    master_seed: int
    stream_index: int

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not 0 <= self.stream_index < 2**64:
            raise ValueError("stream_index must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        return substream(self.master_seed, self.stream_index)


def substream(master_seed: int, stream_index: int) -> np.random.Generator:
    # counter word 1 selects the stream; word 0 advances within it
    bitgen = np.random.Philox(key=int(master_seed), counter=[0, int(stream_index), 0, 0])
    return np.random.Generator(bitgen)


def sample_mask(n: int, p: float, master_seed: int, stream_index: int) -> np.ndarray:
    """Boolean flip mask of length ``n`` for one trial."""
    if p == 0.0:
        return np.zeros(n, dtype=bool)
    return substream(master_seed, stream_index).random(n) < p


def sample_error(lattice: ToricLattice, model: NoiseModel | float, stream: RandomStream) -> ErrorChain:
    p = model.p if isinstance(model, NoiseModel) else check_probability(model)
    return ErrorChain(lattice, sample_mask(lattice.n, p, stream.master_seed, stream.stream_index))


def sample_block(lattice: ToricLattice, p: float, master_seed: int, start: int, stop: int) -> np.ndarray:
    """Masks for trials ``start <= t < stop`` as a ``(stop - start, 2 L**2)`` array."""
    out = np.zeros((stop - start, lattice.n), dtype=bool)
    if p > 0.0:
        for row, t in enumerate(range(start, stop)):
            out[row] = substream(master_seed, t).random(lattice.n) < p
    return out


def _check_weight(lattice: ToricLattice, weight: int) -> int:
    if not 0 <= weight <= lattice.n:
        raise ValueError(f"weight must lie in [0, {lattice.n}], got {weight}")
    return int(weight)


def enumerate_chains(lattice: ToricLattice, weight: int) -> Iterator[ErrorChain]:
    """Every chain of the given weight, once each, in lexicographic edge order."""
    weight = _check_weight(lattice, weight)
    for combo in itertools.combinations(range(lattice.n), weight):
        mask = np.zeros(lattice.n, dtype=bool)
        mask[list(combo)] = True
        yield ErrorChain(lattice, mask)


def enumerate_masks(lattice: ToricLattice, weight: int, chunk_size: int = 1 << 16) -> Iterator[np.ndarray]:
    """Same order as :func:`enumerate_chains`, as boolean mask chunks."""
    weight = _check_weight(lattice, weight)
    n = lattice.n
    combos = itertools.combinations(range(n), weight)
    rows = np.arange(chunk_size)[:, None]
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, chunk_size)),
            dtype=np.intp,
        )
        if weight == 0:
            yield np.zeros((1, n), dtype=bool)
            return
        if flat.size == 0:
            return
        idx = flat.reshape(-1, weight)
        masks = np.zeros((idx.shape[0], n), dtype=bool)
        masks[rows[: idx.shape[0]], idx] = True
        yield masks
        if idx.shape[0] < chunk_size:
            return


def count_chains(lattice: ToricLattice, weight: int) -> int:
    return math.comb(lattice.n, _check_weight(lattice, weight))
