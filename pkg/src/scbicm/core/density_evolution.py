"""
Protograph density evolution over parallel BECs.

One message per edge instance; parallel edges exchange independent messages.
With erasure p on VN-to-CN messages and q on CN-to-VN messages:

    q_e = 1 - prod_{e' at CN(e), e' != e} (1 - p_e')
    p_e = eps'_v prod_{e' at VN(e), e' != e} q_e'
    P_v = eps'_v prod_{e at v} q_e

starting from p_e = eps'_v.
"""

from __future__ import annotations

import logging
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from scbicm.core.bitmap import effective_erasures
from scbicm.core.channel import ebn0_db, erasures_for_avg
from scbicm.exceptions import ChannelRangeError, InvalidParametersError
from scbicm.models.bit_mapping import BitMapping
from scbicm.models.constellation import ErasureProfile
from scbicm.models.ensemble import Protograph
from scbicm.models.results import DEOptions, DEResult, ThresholdResult

logger = logging.getLogger(__name__)

MAX_BISECTIONS = 30


class EdgeLayout:
    """Edge instances grouped per CN and per VN as padded index matrices."""

    def __init__(self, graph: Protograph) -> None:
        cn, vn = graph.edge_instances()
        self.edge_count = cn.size
        self.cn_slots = _padded_slots(cn, graph.cn_count, self.edge_count)
        self.vn_slots = _padded_slots(vn, graph.vn_count, self.edge_count)
        self.vn_of_edge = vn


def _padded_slots(owner: np.ndarray, count: int, pad: int) -> np.ndarray:
    degrees = np.bincount(owner, minlength=count)
    order = np.argsort(owner, kind="stable")
    starts = np.concatenate([[0], np.cumsum(degrees)[:-1]])
    slots = np.full((count, max(int(degrees.max(initial=0)), 1)), pad, dtype=np.int64)
    sorted_owner = owner[order]
    slots[sorted_owner, np.arange(owner.size) - starts[sorted_owner]] = order
    return slots


def _exclusive_products(values: np.ndarray) -> np.ndarray:
    """Row-wise product of all entries but the one in each position."""
    ones = np.ones((values.shape[0], 1))
    prefix = np.cumprod(np.hstack([ones, values[:, :-1]]), axis=1)
    reverse = values[:, ::-1]
    suffix = np.cumprod(np.hstack([ones, reverse[:, :-1]]), axis=1)[:, ::-1]
    return prefix * suffix


def iterate_de(
    graph: Protograph,
    vn_erasures: Sequence[float],
    max_iters: Optional[int] = None,
    layout: Optional[EdgeLayout] = None,
) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
    """Yield (iteration, p per edge instance, P per VN) after every update."""
    eps = np.asarray(vn_erasures, dtype=float)
    if eps.shape != (graph.vn_count,):
        raise InvalidParametersError(f"expected {graph.vn_count} VN erasures, got {eps.shape}")
    if np.any(eps < 0) or np.any(eps > 1):
        raise InvalidParametersError("VN erasures must lie in [0, 1]")
    layout = layout or EdgeLayout(graph)
    E = layout.edge_count
    p = np.append(eps[layout.vn_of_edge], 0.0)
    q = np.ones(E + 1)
    iteration = 0
    while max_iters is None or iteration < max_iters:
        iteration += 1
        keep = _exclusive_products(1.0 - p[layout.cn_slots])
        q[layout.cn_slots] = 1.0 - keep
        q[E] = 1.0
        incoming = q[layout.vn_slots]
        p[layout.vn_slots] = eps[:, None] * _exclusive_products(incoming)
        p[E] = 0.0
        P = eps * np.prod(incoming, axis=1)
        yield iteration, p[:E].copy(), P


def run_de(
    graph: Protograph,
    vn_erasures: Sequence[float],
    opts: DEOptions = DEOptions(),
    layout: Optional[EdgeLayout] = None,
) -> DEResult:
    previous = None
    iteration, P = 0, np.asarray(vn_erasures, dtype=float)
    for iteration, _, P in iterate_de(graph, vn_erasures, opts.max_iters, layout):
        if np.max(P) < opts.zero_tol:
            return DEResult(True, iteration, P)
        if previous is not None and np.array_equal(P, previous):
            break
        previous = P
    return DEResult(False, iteration, P)


def _rate_of(graph: Protograph) -> Optional[float]:
    rate = float(graph.design_rate)
    return rate if 0 < rate <= 1 else None


def threshold(
    graph: Protograph,
    mapping: BitMapping,
    profile: ErasureProfile,
    opts: DEOptions = DEOptions(),
) -> ThresholdResult:
    """
    Largest average erasure (lowest SNR) at which DE converges, by bisection
    on SNR between the profile endpoints.
    """
    if mapping.V != graph.vn_count or mapping.m != profile.m:
        raise InvalidParametersError(
            f"mapping is {mapping.m}x{mapping.V}; graph has {graph.vn_count} VNs, profile {profile.m} channels"
        )
    layout = EdgeLayout(graph)

    def converges(snr: float) -> bool:
        eps, _ = profile.at(snr)
        return run_de(graph, effective_erasures(mapping, eps), opts, layout).converged

    low, high = profile.snr_range
    if not converges(high):
        raise ChannelRangeError(f"DE does not converge at the top of the profile ({high} dB)")
    if converges(low):
        raise ChannelRangeError(f"DE already converges at the bottom of the profile ({low} dB)")
    for step in range(MAX_BISECTIONS):
        if profile.at(low)[1] - profile.at(high)[1] < opts.bisect_tol:
            break
        mid = 0.5 * (low + high)
        if converges(mid):
            high = mid
        else:
            low = mid
        logger.debug("bisection step=%d bracket=[%.5f, %.5f] dB", step, low, high)
    avg = profile.at(high)[1]
    rate = _rate_of(graph)
    ebn0 = ebn0_db(high, rate, profile.m) if rate else None
    return ThresholdResult(avg_erasure=avg, snr_db=high, ebn0_db=ebn0)


def threshold_scalar(graph: Protograph, opts: DEOptions = DEOptions()) -> ThresholdResult:
    """Threshold of a single BEC applied to every VN, by bisection on the erasure probability."""
    layout = EdgeLayout(graph)
    low, high = 0.0, 1.0
    for _ in range(MAX_BISECTIONS):
        if high - low < opts.bisect_tol:
            break
        mid = 0.5 * (low + high)
        if run_de(graph, np.full(graph.vn_count, mid), opts, layout).converged:
            low = mid
        else:
            high = mid
    return ThresholdResult(avg_erasure=low)


def convergence_iterations(
    graph: Protograph,
    mapping: BitMapping,
    profile: ErasureProfile,
    avg_erasure: float,
    opts: DEOptions = DEOptions(),
    layout: Optional[EdgeLayout] = None,
) -> Optional[int]:
    """Iterations to converge at ``avg_erasure``; None when DE does not converge."""
    eps = erasures_for_avg(profile, avg_erasure)
    result = run_de(graph, effective_erasures(mapping, eps), opts, layout)
    return result.iterations if result.converged else None
