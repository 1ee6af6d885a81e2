"""
Finite-length realization: circulant lifting of a protograph and the
bit-to-channel assignment of a fractional bit mapping.
"""

from __future__ import annotations

import logging

import numpy as np

from scbicm.exceptions import InvalidParametersError, LiftingError
from scbicm.models.bit_mapping import BitMapping
from scbicm.models.ensemble import Protograph
from scbicm.models.results import ChannelAssignment, LiftedCode

logger = logging.getLogger(__name__)

SHIFT_RETRIES = 100


def _shifts_ok(shifts: np.ndarray, Q: int) -> bool:
    if np.unique(shifts).size != shifts.size:
        return False
    if Q % 2:
        return True
    diff = np.abs(shifts[:, None] - shifts[None, :])
    return not np.any(diff == Q // 2)


def lift(graph: Protograph, Q: int, seed: int, max_retries: int = SHIFT_RETRIES) -> LiftedCode:
    """
    Replace every edge instance with a Q x Q circulant: bit vn*Q + i meets
    check cn*Q + (i + s) mod Q.

    Parallel instances of one protograph edge get distinct shifts, never two
    apart by Q/2.
    """
    if Q < 2:
        raise InvalidParametersError(f"lift factor must be >= 2, got {Q}")
    rng = np.random.default_rng(seed)
    grid = graph.multiplicity
    rows, cols = np.nonzero(grid)
    cn_parts, vn_parts, shift_parts = [], [], []
    for cn, vn in zip(rows, cols):
        count = int(grid[cn, vn])
        for _ in range(max_retries):
            shifts = rng.choice(Q, size=count, replace=False) if count <= Q else None
            if shifts is not None and _shifts_ok(shifts, Q):
                break
        else:
            raise LiftingError(
                f"no admissible shifts for {count} parallel edges at (CN {cn}, VN {vn}) with Q={Q}"
            )
        cn_parts.append(np.full(count, cn))
        vn_parts.append(np.full(count, vn))
        shift_parts.append(shifts)
    cn_of_edge = np.concatenate(cn_parts)
    vn_of_edge = np.concatenate(vn_parts)
    shifts = np.concatenate(shift_parts).astype(np.int64)
    offsets = np.arange(Q)
    checks = (cn_of_edge[:, None] * Q + (offsets[None, :] + shifts[:, None]) % Q).ravel()
    bits = (vn_of_edge[:, None] * Q + offsets[None, :]).ravel()
    code = LiftedCode(
        checks=checks.astype(np.int64),
        bits=bits.astype(np.int64),
        n=graph.vn_count * Q,
        n_checks=graph.cn_count * Q,
        Q=Q,
        seed=seed,
        shifts=shifts,
    )
    logger.info("lifted %s protograph Q=%d n=%d checks=%d", graph.family, Q, code.n, code.n_checks)
    return code


def apportion(fractions, Q: int) -> np.ndarray:
    """Largest-remainder rounding of ``fractions * Q`` to integers summing to Q."""
    weights = np.clip(np.asarray(fractions, dtype=float), 0.0, None)
    total = weights.sum()
    if total <= 0:
        raise InvalidParametersError("cannot apportion an all-zero column")
    quota = weights / total * Q
    counts = np.floor(quota).astype(np.int64)
    remainder = quota - counts
    order = np.lexsort((np.arange(remainder.size), -remainder))
    counts[order[: Q - counts.sum()]] += 1
    return counts


def assign_channels(mapping: BitMapping, Q: int, seed: int) -> ChannelAssignment:
    """
    Realize the mapping on Q copies of each VN. Per-channel totals are
    repaired to exactly n/m by moving single bits where rounding hurts least.
    """
    m, V = mapping.m, mapping.V
    n = Q * V
    if n % m:
        raise LiftingError(f"m={m} does not divide the code length n={n}")
    counts = np.array([apportion(mapping.column(j), Q) for j in range(V)])
    quota = mapping.a.T * Q
    target = n // m
    totals = counts.sum(axis=0)
    moves = 0
    while np.any(totals != target):
        over = int(np.argmax(totals - target))
        under = int(np.argmin(totals - target))
        cost = (counts[:, under] + 1 - quota[:, under]) + (quota[:, over] - counts[:, over] + 1)
        cost[counts[:, over] == 0] = np.inf
        j = int(np.argmin(cost))
        counts[j, over] -= 1
        counts[j, under] += 1
        totals[over] -= 1
        totals[under] += 1
        moves += 1
    if moves:
        logger.debug("channel apportionment repaired with %d single-bit moves", moves)
    rng = np.random.default_rng(seed)
    channel_of_bit = np.empty(n, dtype=np.int64)
    for j in range(V):
        channel_of_bit[j * Q:(j + 1) * Q] = rng.permutation(np.repeat(np.arange(m), counts[j]))
    return ChannelAssignment(channel_of_bit, m)


def interleave(assignment: ChannelAssignment, seed: int) -> np.ndarray:
    """(n/m, m) frame: entry [s, i] is the code bit sent on level i of symbol s."""
    counts = assignment.counts()
    if np.any(counts != counts[0]):
        raise LiftingError(f"unequal per-channel bit counts {counts.tolist()}")
    rng = np.random.default_rng(seed)
    columns = [rng.permutation(np.nonzero(assignment.channel_of_bit == i)[0]) for i in range(assignment.m)]
    return np.column_stack(columns)
