"""Geometry of the L x L toric code with qubits on edges.

Vertices sit at integer points ``(x, y)``; plaquette ``(x, y)`` is the face
whose lower-left corner is vertex ``(x, y)``. Only X errors are tracked, so
syndromes live on plaquettes and error chains are paths on the dual lattice.

Edge ``h(x, y)`` joins vertex ``(x, y)`` to ``(x + 1, y)`` and borders
plaquettes ``(x, y)`` and ``(x, y - 1)``. Edge ``v(x, y)`` joins ``(x, y)`` to
``(x, y + 1)`` and borders plaquettes ``(x, y)`` and ``(x - 1, y)``. All
coordinates are taken modulo ``L``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np


class Orientation(enum.IntEnum):
    HORIZONTAL = 0
    VERTICAL = 1


class EdgeCoord(NamedTuple):
    orientation: Orientation
    x: int
    y: int


class HomologyClass(NamedTuple):
    """Winding parities of a cycle.

    ``h1`` counts crossings of the primal column ``x = 0`` (set by cycles that
    run horizontally round the torus), ``h2`` crossings of the primal row
    ``y = 0`` (set by cycles that run vertically).
    """

    h1: int
    h2: int

    @property
    def trivial(self) -> bool:
        return self.h1 == 0 and self.h2 == 0


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ToricLattice:
    """Periodic L x L lattice with ``2 L**2`` edge qubits.

    Only odd ``L >= 3`` is accepted: even sizes admit two inequivalent
    shortest displacements along an axis, which the decoder does not define.
    """

    L: int

    def __post_init__(self):
        if isinstance(self.L, bool) or not isinstance(self.L, (int, np.integer)):
            raise TypeError(f"L must be an integer, got {type(self.L).__name__}")
        if self.L < 3 or self.L % 2 == 0:
            raise ValueError(f"L must be an odd integer >= 3, got {self.L}")
        object.__setattr__(self, "L", int(self.L))

    @property
    def n(self) -> int:
        return 2 * self.L * self.L

    @property
    def n_plaquettes(self) -> int:
        return self.L * self.L

    # -- indexing ---------------------------------------------------------

    def index(self, coord: EdgeCoord | tuple) -> int:
        orientation, x, y = coord
        L = self.L
        return int(orientation) * L * L + (y % L) * L + (x % L)

    def coord(self, index: int) -> EdgeCoord:
        if not 0 <= index < self.n:
            raise IndexError(f"edge index {index} out of range [0, {self.n})")
        L = self.L
        orientation, rest = divmod(int(index), L * L)
        y, x = divmod(rest, L)
        return EdgeCoord(Orientation(orientation), x, y)

    def h(self, x: int, y: int) -> int:
        return self.index((Orientation.HORIZONTAL, x, y))

    def v(self, x: int, y: int) -> int:
        return self.index((Orientation.VERTICAL, x, y))

    def plaquette_index(self, x: int, y: int) -> int:
        return (y % self.L) * self.L + (x % self.L)

    def plaquette_coord(self, index: int) -> tuple[int, int]:
        y, x = divmod(int(index), self.L)
        return x, y

    # -- cached incidence tables --------------------------------------------

    @cached_property
    def plaquette_edges(self) -> np.ndarray:
        """``(L**2, 4)`` array: the edges bordering each plaquette."""
        L = self.L
        out = np.empty((L * L, 4), dtype=np.intp)
        for y in range(L):
            for x in range(L):
                out[y * L + x] = (
                    self.h(x, y),
                    self.h(x, y + 1),
                    self.v(x, y),
                    self.v(x + 1, y),
                )
        return _readonly(out)

    @cached_property
    def edge_plaquettes(self) -> np.ndarray:
        """``(2 L**2, 2)`` array: the two plaquettes sharing each edge."""
        L = self.L
        out = np.empty((self.n, 2), dtype=np.intp)
        for y in range(L):
            for x in range(L):
                out[self.h(x, y)] = (self.plaquette_index(x, y), self.plaquette_index(x, y - 1))
                out[self.v(x, y)] = (self.plaquette_index(x, y), self.plaquette_index(x - 1, y))
        return _readonly(out)

    @cached_property
    def column_crossing(self) -> np.ndarray:
        """Edges of the primal column ``x = 0`` (vertical edges ``v(0, y)``)."""
        return _readonly(np.array([self.v(0, y) for y in range(self.L)], dtype=np.intp))

    @cached_property
    def row_crossing(self) -> np.ndarray:
        """Edges of the primal row ``y = 0`` (horizontal edges ``h(x, 0)``)."""
        return _readonly(np.array([self.h(x, 0) for x in range(self.L)], dtype=np.intp))

    # -- vectorised kernels over many chains -----------------------------------

    def syndrome_array(self, chains: np.ndarray) -> np.ndarray:
        """Plaquette parities for a ``(..., 2 L**2)`` boolean chain array."""
        chains = np.asarray(chains, dtype=bool)
        pe = self.plaquette_edges
        return chains[..., pe[:, 0]] ^ chains[..., pe[:, 1]] ^ chains[..., pe[:, 2]] ^ chains[..., pe[:, 3]]

    def crossing_parities(self, chains: np.ndarray) -> np.ndarray:
        """``(..., 2)`` array of crossing parities with the two primal reference loops.

        For cycles these are the homology parities ``(h1, h2)``.
        """
        chains = np.asarray(chains, dtype=bool)
        h1 = np.bitwise_xor.reduce(chains[..., self.column_crossing], axis=-1)
        h2 = np.bitwise_xor.reduce(chains[..., self.row_crossing], axis=-1)
        return np.stack([h1, h2], axis=-1)

    # -- chain-level operations ------------------------------------------------

    def chain(self, edges: Iterable[int] = ()) -> "ErrorChain":
        return ErrorChain.from_indices(self, edges)

    def empty_chain(self) -> "ErrorChain":
        return ErrorChain(self, np.zeros(self.n, dtype=bool))

    def syndrome(self, chain: "ErrorChain") -> "Syndrome":
        self._check_owner(chain)
        return Syndrome(self, self.syndrome_array(chain.mask))

    def is_cycle(self, chain: "ErrorChain") -> bool:
        self._check_owner(chain)
        return not self.syndrome_array(chain.mask).any()

    def homology_class(self, cycle: "ErrorChain") -> HomologyClass:
        if not self.is_cycle(cycle):
            raise ValueError("homology class is only defined for cycles")
        h1, h2 = self.crossing_parities(cycle.mask)
        return HomologyClass(int(h1), int(h2))

    def logical_supports(self) -> tuple["ErrorChain", "ErrorChain"]:
        """The fixed minimal non-trivial X-type loops.

        The first runs horizontally along plaquette row ``y = 0`` (edges
        ``v(x, 0)``) and has class (1, 0); the second runs vertically along
        plaquette column ``x = 0`` (edges ``h(0, y)``) and has class (0, 1).
        """
        L = self.L
        row = self.chain(self.v(x, 0) for x in range(L))
        col = self.chain(self.h(0, y) for y in range(L))
        return row, col

    def conjugate_supports(self) -> tuple["ErrorChain", "ErrorChain"]:
        """Primal loops used for the homology parity checks (column ``x=0``, row ``y=0``)."""
        return self.chain(self.column_crossing), self.chain(self.row_crossing)

    def straight_loops(self) -> list["ErrorChain"]:
        """All ``2L`` minimal-weight non-trivial loops, horizontal ones first."""
        L = self.L
        loops = [self.chain(self.v(x, y) for x in range(L)) for y in range(L)]
        loops += [self.chain(self.h(x, y) for y in range(L)) for x in range(L)]
        return loops

    def star(self, x: int, y: int) -> "ErrorChain":
        """The four edges meeting at vertex ``(x, y)``: a plaquette of the dual lattice."""
        return self.chain([self.h(x, y), self.h(x - 1, y), self.v(x, y), self.v(x, y - 1)])

    def _check_owner(self, obj) -> None:
        if obj.lattice != self:
            raise ValueError(f"object belongs to L={obj.lattice.L}, not L={self.L}")


@dataclass(frozen=True, eq=False)
class ErrorChain:
    """A set of flipped edges, stored as a read-only boolean mask.

    Chains add modulo 2: ``a ^ b`` (or ``a + b``) is the symmetric difference.
    """

    lattice: ToricLattice
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool).reshape(-1)
        if mask.shape[0] != self.lattice.n:
            raise ValueError(f"mask has {mask.shape[0]} entries, lattice has {self.lattice.n} edges")
        object.__setattr__(self, "mask", _readonly(mask))

    @classmethod
    def from_indices(cls, lattice: ToricLattice, edges: Iterable[int]) -> "ErrorChain":
        mask = np.zeros(lattice.n, dtype=bool)
        for e in edges:
            e = int(e)
            if not 0 <= e < lattice.n:
                raise ValueError(f"edge index {e} out of range [0, {lattice.n})")
            mask[e] ^= True
        return cls(lattice, mask)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.mask).tolist())

    @property
    def weight(self) -> int:
        return int(self.mask.sum())

    def __len__(self) -> int:
        return self.weight

    def __xor__(self, other: "ErrorChain") -> "ErrorChain":
        if other.lattice != self.lattice:
            raise ValueError("cannot add chains from different lattices")
        return ErrorChain(self.lattice, self.mask ^ other.mask)

    __add__ = __xor__

    def __eq__(self, other) -> bool:
        if not isinstance(other, ErrorChain):
            return NotImplemented
        return self.lattice == other.lattice and np.array_equal(self.mask, other.mask)

    def __hash__(self) -> int:
        return hash((self.lattice.L, np.packbits(self.mask).tobytes()))

    def __repr__(self) -> str:
        return f"ErrorChain(L={self.lattice.L}, support={sorted(self.support)})"


@dataclass(frozen=True, eq=False)
class Syndrome:
    """Plaquettes whose stabilizer reads -1, as a mask over plaquette indices."""

    lattice: ToricLattice
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool).reshape(-1)
        if mask.shape[0] != self.lattice.n_plaquettes:
            raise ValueError("syndrome mask has the wrong length")
        object.__setattr__(self, "mask", _readonly(mask))

    @classmethod
    def from_defects(cls, lattice: ToricLattice, defects: Iterable[tuple[int, int]]) -> "Syndrome":
        mask = np.zeros(lattice.n_plaquettes, dtype=bool)
        for x, y in defects:
            mask[lattice.plaquette_index(x, y)] ^= True
        return cls(lattice, mask)

    @property
    def defects(self) -> list[tuple[int, int]]:
        """Defect coordinates ``(x, y)`` in plaquette-index order."""
        return [self.lattice.plaquette_coord(i) for i in np.flatnonzero(self.mask)]

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __xor__(self, other: "Syndrome") -> "Syndrome":
        if other.lattice != self.lattice:
            raise ValueError("cannot combine syndromes from different lattices")
        return Syndrome(self.lattice, self.mask ^ other.mask)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Syndrome):
            return NotImplemented
        return self.lattice == other.lattice and np.array_equal(self.mask, other.mask)

    def __hash__(self) -> int:
        return hash((self.lattice.L, np.packbits(self.mask).tobytes()))

    def __repr__(self) -> str:
        return f"Syndrome(L={self.lattice.L}, defects={self.defects})"
