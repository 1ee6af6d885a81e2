"""
End-to-end reproductions: the decoding-threshold table of the baseline and
designed ensembles, and the finite-length BER comparison.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from scbicm.core.bitmap import uniform_mapping
from scbicm.core.channel import gray_qam
from scbicm.core.density_evolution import threshold
from scbicm.core.lifting import assign_channels, lift
from scbicm.core.protograph import (
    build_continuous_connected,
    build_loop_connected,
    build_single_chain,
)
from scbicm.models.bit_mapping import BitMapping
from scbicm.models.constellation import ErasureProfile
from scbicm.models.ensemble import Protograph, SingleChainParams
from scbicm.models.results import BERRecord, DEHyperParams, DEOptions, SimConfig, ThresholdResult
from scbicm.services.optimizer import JointDesigner
from scbicm.services.simulator import BERSimulator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TableRow:
    """
    One threshold row. A row with a tolerance passes inside its target band,
    or, when ``fallback`` is set, by clearing that bar instead (strictly when
    ``fallback_strict``). A row without a tolerance only has to reach ``floor``.
    """

    name: str
    result: ThresholdResult
    target: float
    tolerance: Optional[float]
    floor: Optional[float] = None
    fallback: Optional[float] = None
    fallback_strict: bool = False

    @property
    def on_target(self) -> bool:
        return self.tolerance is not None and abs(self.result.avg_erasure - self.target) <= self.tolerance

    @property
    def passed(self) -> bool:
        value = self.result.avg_erasure
        if self.tolerance is None:
            return self.floor is None or value >= self.floor
        if self.on_target:
            return True
        if self.fallback is None:
            return False
        return value > self.fallback if self.fallback_strict else value >= self.fallback

    @property
    def status(self) -> str:
        if not self.passed:
            return "FAIL"
        return "pass" if self.tolerance is None or self.on_target else "pass(bound)"


# (name, target average erasure, tolerance)
TABLE2_TARGETS = {
    "C uniform": (0.5036, 0.003),
    "L1 uniform": (0.5365, 0.005),
    "L2 uniform": (0.5036, 0.005),
    "C optimized": (0.5187, 0.005),
    "L1 optimized": (0.5456, 0.008),
    "L2 optimized": (0.5518, 0.008),
    "L* joint": (0.5697, None),
}

# the joint design has to beat the tabulated L1 uniform threshold
JOINT_FLOOR = 0.5365
# reconstructed L2 may trail the single chain by this much
L2_SLACK = 0.002


def baseline_graphs(params: SingleChainParams) -> Dict[str, Protograph]:
    return {
        "C": build_single_chain(params),
        "L1": build_loop_connected(params),
        "L2": build_continuous_connected(params),
    }


def reproduce_table2(
    params: SingleChainParams,
    profile: ErasureProfile,
    hyper: DEHyperParams = DEHyperParams(),
    opts: DEOptions = DEOptions(),
    include_optimized: bool = True,
) -> List[TableRow]:
    """
    Threshold table. The connected baselines are reconstructions, so their
    rows fall back to ordering bounds: L1 above the single chain, L2 no more
    than ``L2_SLACK`` below it, and every optimized row at or above its own
    uniform row.
    """
    graphs = baseline_graphs(params)
    rows = []

    def add(name: str, result: ThresholdResult, **bounds) -> None:
        target, tolerance = TABLE2_TARGETS[name]
        rows.append(TableRow(name, result, target, tolerance, **bounds))
        logger.info("table2 row=%r avg_erasure=%.4f target=%.4f", name, result.avg_erasure, target)

    uniform = {
        key: threshold(graph, uniform_mapping(profile.m, graph.vn_count), profile, opts)
        for key, graph in graphs.items()
    }
    chain = uniform["C"].avg_erasure
    add("C uniform", uniform["C"])
    add("L1 uniform", uniform["L1"], fallback=chain, fallback_strict=True)
    add("L2 uniform", uniform["L2"], fallback=chain - L2_SLACK)
    if include_optimized:
        designer = JointDesigner(profile, hyper, opts)
        for key, graph in graphs.items():
            found = designer.optimize_mapping_only(graph).threshold
            add(f"{key} optimized", found, fallback=None if key == "C" else uniform[key].avg_erasure)
        joint = designer.joint_design(params, 2)
        add("L* joint", joint.threshold, floor=JOINT_FLOOR)
    return rows


def format_table2(rows: Sequence[TableRow]) -> str:
    lines = ["ensemble          avg_erasure  ebn0_db  target  status"]
    for row in rows:
        ebn0 = f"{row.result.ebn0_db:7.2f}" if row.result.ebn0_db is not None else "    n/a"
        lines.append(
            f"{row.name:<17} {row.result.avg_erasure:11.4f}  {ebn0}  {row.target:.4f}  "
            f"{row.status}"
        )
    return "\n".join(lines) + "\n"


def reproduce_fig6(
    ensembles: Dict[str, Tuple[Protograph, BitMapping]],
    Q: int,
    config: SimConfig,
    lift_seed: int,
    constellation=None,
) -> List[Tuple[str, BERRecord]]:
    """
    BER sweep over every ensemble at matched seeds. Single-chain graphs are
    lifted by 2Q so all codes share one length.
    """
    results = []
    lengths = {
        name: graph.vn_count * (2 * Q if graph.num_chains == 1 else Q)
        for name, (graph, _) in ensembles.items()
    }
    if len(set(lengths.values())) > 1:
        logger.warning("ensembles yield different code lengths: %s", lengths)
    for name, (graph, mapping) in ensembles.items():
        factor = 2 * Q if graph.num_chains == 1 else Q
        code = lift(graph, factor, lift_seed)
        assignment = assign_channels(mapping, factor, lift_seed)
        simulator = BERSimulator(code, assignment, config, constellation or gray_qam(16))
        for record in simulator.run():
            results.append((name, record))
        logger.info("fig6 ensemble=%s done n=%d", name, code.n)
    return results


def fig6_csv(results: Sequence[Tuple[str, BERRecord]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["ensemble", "ebn0_db", "frames", "bit_errors", "ber", "frame_errors", "ber_low", "ber_high"])
    for name, r in results:
        writer.writerow(
            [name, f"{r.ebn0_db:.2f}", r.frames, r.bit_errors, f"{r.ber:.6e}", r.frame_errors,
             f"{r.ber_low:.6e}", f"{r.ber_high:.6e}"]
        )
    return buffer.getvalue()
