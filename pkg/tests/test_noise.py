import math

import numpy as np
import pytest

from toricscaling.lattice import ToricLattice
from toricscaling.noise import (
    NoiseModel,
    RandomStream,
    count_chains,
    enumerate_chains,
    enumerate_masks,
    sample_block,
    sample_error,
)


@pytest.mark.parametrize("p", [-0.1, 0.51, 1.0, float("nan")])
def test_rejects_bad_p(p):
    with pytest.raises(ValueError):
        NoiseModel(p)


def test_zero_p_gives_empty_chain():
    lat = ToricLattice(5)
    for i in range(20):
        assert sample_error(lat, NoiseModel(0.0), RandomStream(3, i)).weight == 0


def test_same_stream_same_chain():
    lat = ToricLattice(7)
    a = sample_error(lat, 0.1, RandomStream(42, 7))
    b = sample_error(lat, 0.1, RandomStream(42, 7))
    c = sample_error(lat, 0.1, RandomStream(42, 8))
    assert a == b
    assert a != c


def test_block_matches_individual_streams():
    lat = ToricLattice(5)
    block = sample_block(lat, 0.2, 9, 10, 20)
    for row, t in zip(block, range(10, 20)):
        assert np.array_equal(row, sample_error(lat, 0.2, RandomStream(9, t)).mask)


def test_stream_rejects_negative():
    with pytest.raises(ValueError):
        RandomStream(-1, 0)


@pytest.mark.parametrize("p", [0.5, 0.1])
def test_weight_is_binomial(p):
    lat = ToricLattice(5)
    N = 100_000
    w = sample_block(lat, p, 2024, 0, N).sum(axis=1)
    n = lat.n
    mean, var = n * p, n * p * (1 - p)
    assert abs(w.mean() - mean) < 4 * math.sqrt(var / N)
    assert abs(w.var() - var) / var < 0.10


@pytest.mark.parametrize("weight,count", [(0, 1), (1, 18), (2, 153)])
def test_enumeration_counts(weight, count):
    lat = ToricLattice(3)
    chains = list(enumerate_chains(lat, weight))
    assert len(chains) == count == count_chains(lat, weight)
    assert len({c.support for c in chains}) == count
    assert all(c.weight == weight for c in chains)


def test_masks_match_chains():
    lat = ToricLattice(3)
    masks = np.concatenate(list(enumerate_masks(lat, 3, chunk_size=100)))
    chains = list(enumerate_chains(lat, 3))
    assert masks.shape == (816, 18)
    for m, c in zip(masks, chains):
        assert np.array_equal(m, c.mask)


def test_enumeration_rejects_bad_weight():
    with pytest.raises(ValueError):
        list(enumerate_chains(ToricLattice(3), 19))
