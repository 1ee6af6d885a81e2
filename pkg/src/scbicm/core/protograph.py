"""
Construction and validation of single-chain and connected-chain protographs.

Connections follow four design constraints:

1. no CN degree exceeds K;
2. each chain connects only the CNs of one of its two termination ends, and
   only to another chain;
3. the connection pattern (slots, target VNs, edge counts) is the same for
   every chain;
4. no nodes are added, so the design rate equals the single-chain rate.

Connections fill the spare sockets (K - degree) of terminal CNs with edges to
VNs of another chain, which raises those VN degrees above J.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from scbicm.exceptions import (
    BudgetMismatchError,
    ConstraintViolationError,
    InvalidParametersError,
)
from scbicm.models.ensemble import (
    ChainEnd,
    ConnectionEdge,
    ConnectionSpec,
    Protograph,
    SingleChainParams,
)

logger = logging.getLogger(__name__)

ALL_CONSTRAINTS = (1, 2, 3, 4)


@dataclass(frozen=True)
class EnumerationOptions:
    max_window_positions: int = 4
    max_vn_increment: int = 2


def design_rate(params: SingleChainParams) -> Fraction:
    """R = 1 - ((L + w) b_c) / (L b_v)."""
    return 1 - Fraction((params.L + params.w) * params.b_c, params.L * params.b_v)


def build_single_chain(params: SingleChainParams) -> Protograph:
    L, w, b_c, b_v = params.L, params.w, params.b_c, params.b_v
    comps = params.components()
    grid = np.zeros(((L + w) * b_c, L * b_v), dtype=np.int64)
    for t in range(L):
        cols = slice(t * b_v, (t + 1) * b_v)
        for offset in range(w + 1):
            rows = slice((t + offset) * b_c, (t + offset + 1) * b_c)
            grid[rows, cols] += comps[offset]
    return Protograph(
        multiplicity=grid,
        position_of_vn=tuple((0, t // b_v + 1) for t in range(L * b_v)),
        position_of_cn=tuple((0, k // b_c + 1) for k in range((L + w) * b_c)),
        max_check_degree=params.K,
        variable_degree=params.J,
        num_chains=1,
        family="single",
    )


def terminal_slots(params: SingleChainParams, end: ChainEnd) -> List[Tuple[int, int]]:
    """(chain-local CN index, spare sockets) for each terminal slot, outermost first."""
    degrees = build_single_chain(params).cn_degrees
    count = params.w * params.b_c
    last = len(degrees) - 1
    slots = []
    for s in range(count):
        local = s if ChainEnd(end) is ChainEnd.LEFT else last - s
        slots.append((local, int(params.K - degrees[local])))
    return slots


def spare_budget(params: SingleChainParams, end: ChainEnd = ChainEnd.RIGHT) -> int:
    return sum(spare for _, spare in terminal_slots(params, end))


def build_connected(
    params: SingleChainParams,
    spec: ConnectionSpec,
    constraints: Iterable[int] = ALL_CONSTRAINTS,
    family: str = "custom",
) -> Protograph:
    """
    Union of ``spec.num_chains`` copies of C(J,K,L,w) plus the connection edges.

    ``constraints`` selects which of the numbered constraints are enforced;
    a violation raises ConstraintViolationError naming it.
    """
    enforced = set(constraints)
    chain = build_single_chain(params)
    M = spec.num_chains
    n_cn, n_vn = chain.cn_count, chain.vn_count
    grid = np.kron(np.eye(M, dtype=np.int64), chain.multiplicity)
    slot_tables = {end: terminal_slots(params, end) for end in ChainEnd}

    for edge in spec.edges:
        _check_edge_indices(edge, M, len(slot_tables[ChainEnd.LEFT]), n_vn)
        chosen = spec.connecting_end[edge.source_chain]
        end = ChainEnd(edge.end) if edge.end is not None else chosen
        if 2 in enforced and end is not chosen:
            raise ConstraintViolationError(
                2,
                f"chain {edge.source_chain} connects from its {end.value} end "
                f"but its connecting end is {chosen.value}",
            )
        if 2 in enforced and edge.target_chain == edge.source_chain:
            raise ConstraintViolationError(
                2, f"chain {edge.source_chain} connects to itself; it must connect to another chain"
            )
        local_cn, _ = slot_tables[end][edge.cn_slot]
        row = edge.source_chain * n_cn + local_cn
        col = edge.target_chain * n_vn + edge.target_vn
        grid[row, col] += edge.multiplicity

    if 1 in enforced:
        overflow = np.nonzero(grid.sum(axis=1) > params.K)[0]
        if overflow.size:
            k = int(overflow[0])
            raise ConstraintViolationError(
                1,
                f"CN {k} has degree {int(grid[k].sum())} > K={params.K}",
            )
    if 3 in enforced:
        reference = spec.pattern(0)
        for c in range(1, M):
            if spec.pattern(c) != reference:
                raise ConstraintViolationError(
                    3, f"chain {c} connects differently from chain 0"
                )

    flags = []
    graph = Protograph(
        multiplicity=grid,
        position_of_vn=tuple((c, pos) for c in range(M) for _, pos in chain.position_of_vn),
        position_of_cn=tuple((c, pos) for c in range(M) for _, pos in chain.position_of_cn),
        max_check_degree=params.K,
        variable_degree=params.J,
        num_chains=M,
        family=family,
    )
    if 4 in enforced and graph.design_rate != design_rate(params):
        raise ConstraintViolationError(
            4, f"design rate {graph.design_rate} differs from {design_rate(params)}"
        )
    if not graph.is_connected:
        flags.append("disconnected")
    if _unfilled_ends(graph, params, spec):
        flags.append("unconsumed-budget")
    if flags:
        graph = Protograph(
            multiplicity=graph.multiplicity,
            position_of_vn=graph.position_of_vn,
            position_of_cn=graph.position_of_cn,
            max_check_degree=graph.max_check_degree,
            variable_degree=graph.variable_degree,
            num_chains=M,
            family=family,
            flags=tuple(flags),
        )
    return graph


def default_loop_positions(L: int) -> List[int]:
    centre = math.ceil(L / 2)
    return [t for t in (centre - 1, centre, centre + 1) if 1 <= t <= L]


def build_loop_connected(
    params: SingleChainParams,
    connect_positions: Optional[Sequence[int]] = None,
    end: ChainEnd = ChainEnd.RIGHT,
) -> Protograph:
    """
    Two chains whose ``end`` terminals feed each other's VNs at ``connect_positions``.

    Every VN of a connect-position receives the same number of edges; the
    spare sockets of each end must be consumed exactly.
    """
    if connect_positions is None:
        connect_positions = default_loop_positions(params.L)
    positions = sorted(set(int(t) for t in connect_positions))
    if any(t < 1 or t > params.L for t in positions):
        raise InvalidParametersError(f"connect positions must lie in 1..{params.L}")
    sockets = _sockets(params, end)
    if not positions:
        raise BudgetMismatchError(
            None, f"no connect positions given; {len(sockets)} spare sockets left unconsumed"
        )
    targets = [(t - 1) * params.b_v + k for t in positions for k in range(params.b_v)]
    if len(sockets) % len(targets):
        raise BudgetMismatchError(
            None,
            f"{len(sockets)} spare sockets cannot be spread uniformly over {len(targets)} VNs",
        )
    share = len(sockets) // len(targets)
    pattern = Counter(zip(sockets, np.repeat(targets, share).tolist()))
    edges = [
        ConnectionEdge(c, slot, 1 - c, vn, count)
        for c in range(2)
        for (slot, vn), count in sorted(pattern.items())
    ]
    spec = ConnectionSpec(2, (end, end), tuple(edges))
    return build_connected(params, spec, family="loop")


def build_continuous_connected(params: SingleChainParams, start: int = 5) -> Protograph:
    """
    Chain 0 connects both termination ends into chain 1 around ``start``.

    Left-end slot s feeds position start + s//b_c, right-end slot s feeds
    position start + 2w - 1 - s//b_c; each VN of the position receives
    spare/b_v edges. Chain 0 keeps VN degree J.
    """
    window = 2 * params.w
    if start < 1 or start + window - 1 > params.L:
        raise InvalidParametersError(
            f"L={params.L} too short for connect positions {start}..{start + window - 1}"
        )
    edges = []
    for end in (ChainEnd.LEFT, ChainEnd.RIGHT):
        for s, (_, spare) in enumerate(terminal_slots(params, end)):
            if spare % params.b_v:
                raise BudgetMismatchError(
                    None, f"slot {s} spare {spare} is not divisible by b_v={params.b_v}"
                )
            offset = s // params.b_c
            position = start + offset if end is ChainEnd.LEFT else start + window - 1 - offset
            per_vn = spare // params.b_v
            if per_vn == 0:
                continue
            for k in range(params.b_v):
                vn = (position - 1) * params.b_v + k
                edges.append(ConnectionEdge(0, s, 1, vn, per_vn, end=end))
    spec = ConnectionSpec(2, (ChainEnd.LEFT, ChainEnd.RIGHT), tuple(edges))
    return build_connected(params, spec, constraints=(1, 4), family="continuous")


def enumerate_connections(
    params: SingleChainParams,
    M: int,
    options: EnumerationOptions = EnumerationOptions(),
) -> List[ConnectionSpec]:
    """
    All constraint-compliant connections under the canonical reduction.

    Each chain deals its end's spare sockets (slot order) onto a contiguous run
    of VNs of the next chain, the run spanning at most
    ``options.max_window_positions`` positions and every VN in it gaining
    between 1 and ``options.max_vn_increment`` edges.
    """
    if M < 2:
        raise InvalidParametersError("enumerate_connections needs M >= 2")
    vn_per_chain = params.L * params.b_v
    sockets_by_end = {end: _sockets(params, end) for end in ChainEnd}
    specs: List[ConnectionSpec] = []
    seen = set()
    for ends in _end_choices(M):
        profiles = {tuple(s for _, s in terminal_slots(params, e)) for e in ends}
        if len(profiles) != 1:
            continue
        sockets = sockets_by_end[ends[0]]
        budget = len(sockets)
        for k in range(1, budget + 1):
            for first in range(vn_per_chain - k + 1):
                span = (first + k - 1) // params.b_v - first // params.b_v + 1
                if span > options.max_window_positions:
                    continue
                for parts in _compositions(budget, k, options.max_vn_increment):
                    vn_seq = [first + i for i, part in enumerate(parts) for _ in range(part)]
                    pattern = sorted(Counter(zip(sockets, vn_seq)).items())
                    key = (ends, tuple(pattern))
                    if key in seen:
                        continue
                    seen.add(key)
                    edges = tuple(
                        ConnectionEdge(c, slot, (c + 1) % M, vn, count)
                        for c in range(M)
                        for (slot, vn), count in pattern
                    )
                    specs.append(ConnectionSpec(M, ends, edges))
    logger.debug("enumerated %d connection candidates for %s, M=%d", len(specs), params.label, M)
    return specs


def _sockets(params: SingleChainParams, end: ChainEnd) -> List[int]:
    return [s for s, (_, spare) in enumerate(terminal_slots(params, end)) for _ in range(spare)]


def _end_choices(M: int) -> Iterator[Tuple[ChainEnd, ...]]:
    """End tuples up to cyclic chain relabeling, lexicographically smallest rotation kept."""
    for ends in product((ChainEnd.LEFT, ChainEnd.RIGHT), repeat=M):
        values = tuple(e.value for e in ends)
        rotations = [values[i:] + values[:i] for i in range(M)]
        if values == min(rotations):
            yield ends


def _compositions(total: int, parts: int, cap: int) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    low = max(1, total - cap * (parts - 1))
    high = min(cap, total - (parts - 1))
    for first in range(low, high + 1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


def _check_edge_indices(edge: ConnectionEdge, M: int, slot_count: int, n_vn: int) -> None:
    if not (0 <= edge.source_chain < M and 0 <= edge.target_chain < M):
        raise InvalidParametersError(f"chain index out of range in {edge}")
    if not 0 <= edge.cn_slot < slot_count:
        raise InvalidParametersError(f"terminal slot {edge.cn_slot} out of range 0..{slot_count - 1}")
    if not 0 <= edge.target_vn < n_vn:
        raise InvalidParametersError(f"target VN {edge.target_vn} out of range 0..{n_vn - 1}")
    if edge.multiplicity < 1:
        raise InvalidParametersError("connection multiplicity must be >= 1")


def _unfilled_ends(graph: Protograph, params: SingleChainParams, spec: ConnectionSpec) -> bool:
    n_cn = graph.cn_count // graph.num_chains
    degrees = graph.cn_degrees
    for c, end in enumerate(spec.connecting_end):
        if not any(e.source_chain == c for e in spec.edges):
            continue
        for local, _ in terminal_slots(params, end):
            if degrees[c * n_cn + local] < params.K:
                return True
    return False
