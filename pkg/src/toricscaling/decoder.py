"""Degeneracy-weighted minimum-weight perfect matching decoder.

Defects are paired on the complete graph with edge weight
``d - tau * ln(D)``, where ``d`` is the torus Manhattan distance and ``D`` the
number of shortest lattice paths between the two defects. The matching is
solved exactly by the blossom algorithm in :mod:`toricscaling._blossom`.

Weights are handed to the solver as int64 fixed-point numbers with
:data:`WEIGHT_SCALE` units per lattice step, so the primal-dual updates are
exact and results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from ._blossom import min_weight_perfect_matching_int
from .lattice import ErrorChain, Syndrome, ToricLattice

WEIGHT_SCALE = 2**32
DEFAULT_TAU = 0.02


def max_degeneracy(L: int) -> int:
    """Largest single-pair path count on an L x L torus, ``C(2m, m)`` with ``m = L // 2``."""
    m = L // 2
    return math.comb(2 * m, m)


@dataclass(frozen=True)
class DecoderConfig:
    """Degeneracy weighting ``tau`` (``tau = 0`` is plain MWPM)."""

    tau: float = DEFAULT_TAU

    def __post_init__(self):
        tau = float(self.tau)
        if not (tau >= 0.0 and math.isfinite(tau)):
            raise ValueError(f"tau must be a finite non-negative number, got {self.tau}")
        object.__setattr__(self, "tau", tau)

    def check_lattice(self, L: int) -> None:
        """Reject weightings strong enough to override a unit of distance."""
        if self.tau * math.log(max_degeneracy(L)) >= 1.0:
            raise ValueError(
                f"tau={self.tau} too large for L={L}: tau * ln C(2m, m) must stay below 1"
            )


def torus_displacement(a: Sequence[int], b: Sequence[int], L: int) -> tuple[int, int]:
    dx = abs(int(b[0]) - int(a[0])) % L
    dy = abs(int(b[1]) - int(a[1])) % L
    return min(dx, L - dx), min(dy, L - dy)


def torus_distance(a: Sequence[int], b: Sequence[int], L: int) -> int:
    return sum(torus_displacement(a, b, L))


def path_degeneracy(dx: int, dy: int) -> int:
    """Number of shortest lattice paths spanning a ``dx`` by ``dy`` box."""
    if dx < 0 or dy < 0:
        raise ValueError("displacements must be non-negative")
    return math.comb(dx + dy, dx)


def weight_table(L: int, tau: float) -> np.ndarray:
    """Fixed-point edge weight indexed by ``[dx, dy]`` for ``0 <= dx, dy <= L // 2``."""
    m = L // 2
    table = np.empty((m + 1, m + 1), dtype=np.int64)
    for dx in range(m + 1):
        for dy in range(m + 1):
            table[dx, dy] = _fixed_point(dx + dy, tau * math.log(path_degeneracy(dx, dy)))
    return table


def _fixed_point(distance: int, bonus: float) -> int:
    return distance * WEIGHT_SCALE - int(round(bonus * WEIGHT_SCALE))


@dataclass(frozen=True, eq=False)
class DefectGraph:
    """Complete graph on an even number of defects.

    ``weights`` holds the real weights (diagonal is NaN); ``fixed_weights`` the
    int64 values given to the solver.
    """

    defects: tuple[tuple[int, int], ...]
    weights: np.ndarray = field(repr=False)
    fixed_weights: np.ndarray = field(repr=False)

    @classmethod
    def from_weights(cls, weights, defects: Iterable[tuple[int, int]] | None = None) -> "DefectGraph":
        """Graph from an arbitrary symmetric weight matrix (used for testing the solver)."""
        w = np.array(weights, dtype=float)
        n = w.shape[0]
        if w.shape != (n, n):
            raise ValueError("weights must be a square matrix")
        if n % 2:
            raise ValueError(f"a perfect matching needs an even number of vertices, got {n}")
        off = ~np.eye(n, dtype=bool)
        if not np.allclose(w[off], w.T[off]):
            raise ValueError("weights must be symmetric")
        if not np.isfinite(w[off]).all():
            raise ValueError("weights must be finite")
        scale = float(WEIGHT_SCALE)
        top = float(np.abs(w[off]).max()) if n else 0.0
        while top * scale * (n + 2) * 4 >= 2.0**62:
            scale /= 2
        fixed = np.zeros((n, n), dtype=np.int64)
        fixed[off] = np.rint(w[off] * scale).astype(np.int64)
        w[~off] = np.nan
        defects = tuple(defects) if defects is not None else tuple((i, 0) for i in range(n))
        return cls(defects, w, fixed)

    @property
    def n(self) -> int:
        return len(self.defects)


@dataclass(frozen=True)
class Matching:
    """Perfect matching as index pairs ``(i, j)`` with ``i < j``, sorted."""

    defects: tuple[tuple[int, int], ...]
    pairs: tuple[tuple[int, int], ...]
    weight: float

    def partner(self, i: int) -> int:
        for a, b in self.pairs:
            if a == i:
                return b
            if b == i:
                return a
        raise KeyError(i)


def build_defect_graph(syndrome: Syndrome, config: DecoderConfig | None = None) -> DefectGraph:
    config = config or DecoderConfig()
    L = syndrome.lattice.L
    config.check_lattice(L)
    defects = tuple(syndrome.defects)
    n = len(defects)
    if n % 2:
        raise ValueError(f"syndrome has an odd number of defects ({n})")
    table = weight_table(L, config.tau)
    w = np.full((n, n), np.nan)
    fixed = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy = torus_displacement(defects[i], defects[j], L)
            w[i, j] = w[j, i] = (dx + dy) - config.tau * math.log(path_degeneracy(dx, dy))
            fixed[i, j] = fixed[j, i] = table[dx, dy]
    return DefectGraph(defects, w, fixed)


def min_weight_perfect_matching(graph: DefectGraph) -> Matching:
    n = graph.n
    if n % 2:
        raise ValueError("odd vertex count")
    if n == 0:
        return Matching(graph.defects, (), 0.0)
    iu, ju = np.triu_indices(n, 1)
    mate = min_weight_perfect_matching_int(
        n, iu.astype(np.int64), ju.astype(np.int64), graph.fixed_weights[iu, ju].copy()
    )
    pairs = tuple((i, int(mate[i])) for i in range(n) if mate[i] > i)
    if len(pairs) * 2 != n:
        raise RuntimeError("solver returned an imperfect matching")
    total = float(sum(graph.weights[i, j] for i, j in pairs))
    return Matching(graph.defects, pairs, total)


def correction_chain(matching: Matching, lattice: ToricLattice) -> ErrorChain:
    """Join each pair by the x-then-y staircase, starting from the lower-index defect."""
    mask = np.zeros(lattice.n, dtype=bool)
    for i, j in matching.pairs:
        a = lattice.plaquette_index(*matching.defects[i])
        b = lattice.plaquette_index(*matching.defects[j])
        _write_path(mask, a, b, lattice.L, True)
    return ErrorChain(lattice, mask)


def decode(syndrome: Syndrome, lattice: ToricLattice | None = None, config: DecoderConfig | None = None) -> ErrorChain:
    lattice = lattice or syndrome.lattice
    lattice._check_owner(syndrome)
    config = config or DecoderConfig()
    corr = decode_batch(lattice, syndrome.mask[None, :], config.tau)
    return ErrorChain(lattice, corr[0])


def decode_batch(lattice: ToricLattice, syndromes: np.ndarray, tau: float = DEFAULT_TAU,
                 x_first: bool = True) -> np.ndarray:
    """Corrections for a ``(B, L**2)`` stack of syndrome masks.

    ``x_first=False`` walks each pair along y before x; homology of the
    result is unchanged, which the tests rely on.
    """
    DecoderConfig(tau).check_lattice(lattice.L)
    syn = np.ascontiguousarray(syndromes, dtype=np.bool_)
    if syn.ndim != 2 or syn.shape[1] != lattice.n_plaquettes:
        raise ValueError(f"expected shape (B, {lattice.n_plaquettes}), got {syn.shape}")
    odd = syn.sum(axis=1) % 2 == 1
    if odd.any():
        raise ValueError(f"{int(odd.sum())} syndrome(s) with an odd number of defects")
    out = np.zeros((syn.shape[0], lattice.n), dtype=np.bool_)
    _decode_kernel(syn, lattice.L, weight_table(lattice.L, tau), out, x_first)
    return out


@njit(cache=True)
def _write_path(row, a, b, L, x_first):
    x = a % L
    y = a // L
    tx = b % L
    ty = b // L
    nsq = L * L
    for phase in range(2):
        along_x = (phase == 0) == x_first
        if along_x:
            fwd = (tx - x) % L
            if fwd <= L // 2:
                for _ in range(fwd):
                    x = (x + 1) % L
                    row[nsq + y * L + x] ^= True  # v(x+1, y) after the step
            else:
                for _ in range(L - fwd):
                    row[nsq + y * L + x] ^= True  # v(x, y)
                    x = (x - 1) % L
        else:
            fwd = (ty - y) % L
            if fwd <= L // 2:
                for _ in range(fwd):
                    y = (y + 1) % L
                    row[y * L + x] ^= True  # h(x, y+1) after the step
            else:
                for _ in range(L - fwd):
                    row[y * L + x] ^= True  # h(x, y)
                    y = (y - 1) % L


@njit(cache=True)
def _decode_kernel(syn, L, table, out, x_first):
    nplaq = L * L
    half = L // 2
    defects = np.empty(nplaq, np.int64)
    for b in range(syn.shape[0]):
        nd = 0
        for q in range(nplaq):
            if syn[b, q]:
                defects[nd] = q
                nd += 1
        if nd == 0:
            continue
        ne = nd * (nd - 1) // 2
        eu = np.empty(ne, np.int64)
        ev = np.empty(ne, np.int64)
        ew = np.empty(ne, np.int64)
        k = 0
        for i in range(nd):
            xi = defects[i] % L
            yi = defects[i] // L
            for j in range(i + 1, nd):
                dx = abs(defects[j] % L - xi)
                if dx > half:
                    dx = L - dx
                dy = abs(defects[j] // L - yi)
                if dy > half:
                    dy = L - dy
                eu[k] = i
                ev[k] = j
                ew[k] = table[dx, dy]
                k += 1
        mate = min_weight_perfect_matching_int(nd, eu, ev, ew)
        for i in range(nd):
            j = mate[i]
            if j > i:
                _write_path(out[b], defects[i], defects[j], L, x_first)


class MatchingDecoder(BaseEstimator):
    """Stateless estimator wrapper around the matching decoder.

    ``predict`` maps a ``(n_samples, L**2)`` array of syndrome masks to the
    ``(n_samples, 2 L**2)`` array of correction masks; ``L`` is inferred from
    the feature count.
    """

    def __init__(self, tau: float = DEFAULT_TAU):
        self.tau = tau

    def fit(self, X=None, y=None):
        DecoderConfig(self.tau)
        return self

    def predict(self, X) -> np.ndarray:
        X = check_array(X, dtype=None, ensure_min_samples=0)
        L = math.isqrt(X.shape[1])
        if L * L != X.shape[1]:
            raise ValueError(f"{X.shape[1]} features is not a square plaquette count")
        return decode_batch(ToricLattice(L), X.astype(bool), self.tau)

    def decode(self, syndrome: Syndrome) -> ErrorChain:
        return decode(syndrome, config=DecoderConfig(self.tau))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags
