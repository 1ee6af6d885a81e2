"""
Protograph types for single-chain and connected-chain SC-LDPC ensembles.

A protograph is stored as a dense ``cn_count x vn_count`` grid of edge
multiplicities plus the (chain id, chain-position) label of every node.
Chain-positions are 1-based; chain ids are 0-based. VNs are numbered
chain-major, then by position, then by index inside the position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import permutations
from typing import Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from scbicm.exceptions import InvalidParametersError

NodeLabel = Tuple[int, int]
Spreading = Tuple[Tuple[Tuple[int, ...], ...], ...]


class ChainEnd(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class SingleChainParams:
    """
    Parameters of C(J, K, L, w).

    ``spreading`` optionally lists the w+1 component matrices (each
    b_c x b_v) that spread the underlying block protograph over w+1
    consecutive CN positions. Without it, J = w+1 and b_c = 1 are required
    and every component is all-ones.
    """

    J: int
    K: int
    L: int
    w: int
    b_c: int = 1
    b_v: int = 2
    spreading: Optional[Spreading] = None

    def __post_init__(self) -> None:
        if self.J < 2:
            raise InvalidParametersError(f"J must be >= 2, got {self.J}")
        if self.L < 1 or self.w < 1:
            raise InvalidParametersError("L and w must be >= 1")
        if self.b_c < 1 or self.b_v < 1:
            raise InvalidParametersError("b_c and b_v must be >= 1")
        if self.K * self.b_c != self.J * self.b_v:
            raise InvalidParametersError(
                f"K={self.K} is not J*b_v/b_c for J={self.J}, b_v={self.b_v}, b_c={self.b_c}"
            )
        if self.spreading is None:
            if self.J != self.w + 1 or self.b_c != 1:
                raise InvalidParametersError(
                    f"(J={self.J}, w={self.w}, b_c={self.b_c}) needs an explicit "
                    "edge-spreading table: one edge per offset requires J = w+1 and b_c = 1"
                )
            return
        comps = self.components()
        if comps.shape != (self.w + 1, self.b_c, self.b_v):
            raise InvalidParametersError(
                f"spreading must hold {self.w + 1} matrices of shape ({self.b_c}, {self.b_v})"
            )
        if np.any(comps < 0):
            raise InvalidParametersError("spreading entries must be nonnegative")
        base = comps.sum(axis=0)
        if np.any(base.sum(axis=0) != self.J) or np.any(base.sum(axis=1) != self.K):
            raise InvalidParametersError(
                "spreading components must sum to a (J, K)-regular base matrix"
            )

    def components(self) -> np.ndarray:
        """Return the (w+1, b_c, b_v) stack of spreading matrices B_0..B_w."""
        if self.spreading is None:
            return np.ones((self.w + 1, self.b_c, self.b_v), dtype=np.int64)
        return np.asarray(self.spreading, dtype=np.int64)

    @property
    def label(self) -> str:
        return f"({self.J},{self.K},{self.L},{self.w})"


@dataclass(frozen=True)
class ConnectionEdge:
    """
    ``multiplicity`` parallel edges from terminal CN ``cn_slot`` of
    ``source_chain`` to chain-local VN ``target_vn`` of ``target_chain``.

    Slot 0 is the outermost CN of the end; ``end`` defaults to the source
    chain's connecting end.
    """

    source_chain: int
    cn_slot: int
    target_chain: int
    target_vn: int
    multiplicity: int = 1
    end: Optional[ChainEnd] = None


@dataclass(frozen=True)
class ConnectionSpec:
    num_chains: int
    connecting_end: Tuple[ChainEnd, ...]
    edges: Tuple[ConnectionEdge, ...] = ()

    def __post_init__(self) -> None:
        if self.num_chains < 2:
            raise InvalidParametersError("a connection needs at least two chains")
        if len(self.connecting_end) != self.num_chains:
            raise InvalidParametersError("connecting_end needs one entry per chain")
        object.__setattr__(
            self, "connecting_end", tuple(ChainEnd(e) for e in self.connecting_end)
        )
        object.__setattr__(self, "edges", tuple(self.edges))

    def pattern(self, chain: int) -> Tuple[Tuple[int, int, int], ...]:
        """(slot, target VN, multiplicity) triples contributed by ``chain``, sorted."""
        return tuple(
            sorted(
                (e.cn_slot, e.target_vn, e.multiplicity)
                for e in self.edges
                if e.source_chain == chain
            )
        )


@dataclass(frozen=True, eq=False)
class Protograph:
    multiplicity: np.ndarray
    position_of_vn: Tuple[NodeLabel, ...]
    position_of_cn: Tuple[NodeLabel, ...]
    max_check_degree: int
    variable_degree: int
    num_chains: int = 1
    family: str = "custom"
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        grid = np.array(self.multiplicity, dtype=np.int64)
        if grid.ndim != 2:
            raise InvalidParametersError("multiplicity must be a 2-D grid")
        if np.any(grid < 0):
            raise InvalidParametersError("edge multiplicities must be nonnegative")
        if len(self.position_of_vn) != grid.shape[1] or len(self.position_of_cn) != grid.shape[0]:
            raise InvalidParametersError("position maps do not match the grid shape")
        grid.setflags(write=False)
        object.__setattr__(self, "multiplicity", grid)
        object.__setattr__(self, "position_of_vn", tuple(tuple(p) for p in self.position_of_vn))
        object.__setattr__(self, "position_of_cn", tuple(tuple(p) for p in self.position_of_cn))
        object.__setattr__(self, "flags", tuple(self.flags))

    @classmethod
    def from_base_matrix(cls, matrix) -> "Protograph":
        """Uncoupled block protograph, e.g. ``[[3, 3]]`` for the (3,6) code."""
        grid = np.asarray(matrix, dtype=np.int64)
        return cls(
            multiplicity=grid,
            position_of_vn=tuple((0, 1) for _ in range(grid.shape[1])),
            position_of_cn=tuple((0, 1) for _ in range(grid.shape[0])),
            max_check_degree=int(grid.sum(axis=1).max()),
            variable_degree=int(grid.sum(axis=0).min()),
            family="block",
        )

    @property
    def cn_count(self) -> int:
        return self.multiplicity.shape[0]

    @property
    def vn_count(self) -> int:
        return self.multiplicity.shape[1]

    V = vn_count

    @property
    def cn_degrees(self) -> np.ndarray:
        return self.multiplicity.sum(axis=1)

    @property
    def vn_degrees(self) -> np.ndarray:
        return self.multiplicity.sum(axis=0)

    @property
    def edge_count(self) -> int:
        return int(self.multiplicity.sum())

    @property
    def design_rate(self) -> Fraction:
        return 1 - Fraction(self.cn_count, self.vn_count)

    @property
    def is_connected(self) -> bool:
        n_cn, n_vn = self.multiplicity.shape
        adj = np.zeros((n_cn + n_vn, n_cn + n_vn), dtype=np.int8)
        adj[:n_cn, n_cn:] = self.multiplicity > 0
        count, _ = connected_components(csr_matrix(adj), directed=False)
        return count == 1

    def edge_instances(self) -> Tuple[np.ndarray, np.ndarray]:
        """Expand the grid to one (cn, vn) pair per edge instance, CN-major order."""
        rows, cols = np.nonzero(self.multiplicity)
        counts = self.multiplicity[rows, cols]
        return np.repeat(rows, counts), np.repeat(cols, counts)

    def chain_vns(self, chain: int) -> np.ndarray:
        return np.array([j for j, (c, _) in enumerate(self.position_of_vn) if c == chain])

    def chain_cns(self, chain: int) -> np.ndarray:
        return np.array([k for k, (c, _) in enumerate(self.position_of_cn) if c == chain])

    def permuted(self, cn_order, vn_order) -> "Protograph":
        """Relabel nodes: new CN k is old CN cn_order[k], likewise for VNs."""
        cn_order = np.asarray(cn_order)
        vn_order = np.asarray(vn_order)
        return Protograph(
            multiplicity=self.multiplicity[np.ix_(cn_order, vn_order)],
            position_of_vn=tuple(self.position_of_vn[j] for j in vn_order),
            position_of_cn=tuple(self.position_of_cn[k] for k in cn_order),
            max_check_degree=self.max_check_degree,
            variable_degree=self.variable_degree,
            num_chains=self.num_chains,
            family=self.family,
            flags=self.flags,
        )

    def canonical_form(self) -> Tuple:
        """
        Labelled canonical form, stable across runs.

        Minimises over chain relabelings; within each (chain, position) group
        nodes are ordered by their sorted adjacency signature.
        """
        best = None
        for perm in permutations(range(self.num_chains)):
            vn_labels = [(perm[c], t) for c, t in self.position_of_vn]
            cn_labels = [(perm[c], t) for c, t in self.position_of_cn]
            vn_order = sorted(
                range(self.vn_count),
                key=lambda j: (vn_labels[j], _signature(self.multiplicity[:, j], cn_labels)),
            )
            cn_order = sorted(
                range(self.cn_count),
                key=lambda k: (cn_labels[k], _signature(self.multiplicity[k, :], vn_labels)),
            )
            grid = self.multiplicity[np.ix_(cn_order, vn_order)]
            form = (
                tuple(vn_labels[j] for j in vn_order),
                tuple(cn_labels[k] for k in cn_order),
                tuple(map(tuple, grid.tolist())),
            )
            if best is None or form < best:
                best = form
        return best


def _signature(line: np.ndarray, labels) -> Tuple:
    return tuple(sorted((labels[i], int(line[i])) for i in np.nonzero(line)[0]))
