"""
Joint design of chain connections and bit mapping.

The connection is a discrete choice, enumerated up front; differential
evolution searches only the continuous mapping genes, one fraction per VN
for the first channel group (the rest goes to the second group). The outer
loop raises the design erasure level while the winner's threshold keeps
improving on it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.special import expit, logit

from scbicm.core.bitmap import default_groups, effective_erasures, expand_groups, uniform_mapping
from scbicm.core.channel import erasures_for_avg
from scbicm.core.density_evolution import EdgeLayout, run_de, threshold
from scbicm.core.protograph import build_connected, build_single_chain, enumerate_connections
from scbicm.exceptions import InvalidParametersError
from scbicm.models.bit_mapping import BitMapping
from scbicm.models.constellation import ErasureProfile
from scbicm.models.ensemble import ConnectionSpec, Protograph, SingleChainParams
from scbicm.models.results import DEHyperParams, DEOptions, DesignResult, Genome, ThresholdResult
from scbicm.utils.helpers import spawn_seeds

logger = logging.getLogger(__name__)

IPF_ROUNDS = 50
REGULARIZE = 1e-6
RESIDUAL_WEIGHT = 100.0
MIN_INIT_ROWS = 5


def repair(mapping_params: Sequence[float], m: int = 4, groups=None) -> BitMapping:
    """
    Turn genes into a valid mapping: clamp, fit the group totals to V/m per
    channel by proportional fitting, and fall back to an exact odds shift
    when fitting stalls.
    """
    groups = groups or default_groups(m)
    if len(groups) != 2:
        raise InvalidParametersError(f"mapping genes need exactly two channel groups, got {groups}")
    x = np.clip(np.asarray(mapping_params, dtype=float), 0.0, 1.0)
    V = x.size
    target = V * len(groups[0]) / m
    tol = 1e-12 * max(V, 1)
    for _ in range(IPF_ROUNDS):
        first, second = x.sum(), (1.0 - x).sum()
        if abs(first - target) <= tol:
            break
        a = x * (target / first) if first > 0 else x
        b = (1.0 - x) * ((V - target) / second) if second > 0 else 1.0 - x
        x = a / (a + b)
    if abs(x.sum() - target) > 1e-9:
        z = logit(np.clip(x, REGULARIZE, 1.0 - REGULARIZE))
        shift = optimize.brentq(lambda t: expit(z + t).sum() - target, -50.0, 50.0, xtol=1e-14)
        x = expit(z + shift)
    return expand_groups(np.vstack([x, 1.0 - x]), groups, m)


class Objective:
    """Iterations to converge at a fixed average erasure, with a residual penalty above threshold."""

    def __init__(self, graph: Protograph, channel_erasures: np.ndarray, m: int, opts: DEOptions) -> None:
        self.graph = graph
        self.channel_erasures = np.asarray(channel_erasures, dtype=float)
        self.m = m
        self.opts = opts
        self.layout = EdgeLayout(graph)

    def __call__(self, genes: np.ndarray) -> float:
        mapping = repair(genes, self.m)
        result = run_de(
            self.graph, effective_erasures(mapping, self.channel_erasures), self.opts, self.layout
        )
        if result.converged:
            return float(result.iterations)
        return float(self.opts.max_iters + RESIDUAL_WEIGHT * np.mean(result.residuals))


def objective(
    genome: Genome,
    graphs: Sequence[Protograph],
    avg_erasure: float,
    profile: ErasureProfile,
    opts: DEOptions = DEOptions(),
) -> float:
    eps = erasures_for_avg(profile, avg_erasure)
    return Objective(graphs[genome.connection_index], eps, profile.m, opts)(genome.mapping_params)


def _screen(
    graphs: Sequence[Protograph], eps: np.ndarray, m: int, opts: DEOptions, top: Optional[int]
) -> List[int]:
    if top is None or top >= len(graphs):
        return list(range(len(graphs)))
    scores = [Objective(g, eps, m, opts)(np.full(g.vn_count, 0.5)) for g in graphs]
    order = sorted(range(len(graphs)), key=lambda k: (scores[k], k))
    return sorted(order[:top])


class _Progress:
    """Per-generation progress hook; scipy passes the running best as ``intermediate_result``."""

    def __init__(self, candidate: int, avg_erasure: float, trace) -> None:
        self.candidate = candidate
        self.avg_erasure = avg_erasure
        self.trace = trace
        self.generation = 0

    def __call__(self, intermediate_result) -> None:
        self.generation += 1
        value = float(intermediate_result.fun)
        if self.trace is not None:
            self.trace.append((self.candidate, self.generation, value))
        logger.info(
            "candidate=%d generation=%d best_objective=%.4f avg_erasure=%.5f",
            self.candidate, self.generation, value, self.avg_erasure,
        )


def differential_evolution(
    avg_erasure: float,
    graphs: Sequence[Protograph],
    hyper: DEHyperParams,
    profile: ErasureProfile,
    opts: DEOptions = DEOptions(),
    trace: Optional[List[Tuple[int, int, float]]] = None,
) -> Tuple[Genome, float]:
    """
    rand/1/bin DE over the mapping genes of every candidate graph; returns the
    best genome across candidates. The uniform genome is always in the
    initial population.
    """
    if not graphs:
        raise InvalidParametersError("differential evolution needs at least one candidate")
    eps = erasures_for_avg(profile, avg_erasure)
    selected = _screen(graphs, eps, profile.m, opts, hyper.screen_top)
    seeds = spawn_seeds(hyper.seed, len(graphs))
    best: Optional[Tuple[Genome, float]] = None
    for index in selected:
        graph = graphs[index]
        V = graph.vn_count
        rng = np.random.default_rng(seeds[index])
        init = rng.uniform(size=(max(hyper.population, MIN_INIT_ROWS), V))
        init[0] = 0.5
        result = optimize.differential_evolution(
            Objective(graph, eps, profile.m, opts),
            bounds=[(0.0, 1.0)] * V,
            strategy="rand1bin",
            maxiter=hyper.generations,
            init=init,
            mutation=hyper.weight,
            recombination=hyper.crossover,
            seed=seeds[index],
            polish=False,
            tol=0.0,
            atol=0.0,
            workers=hyper.workers,
            updating="deferred" if hyper.workers != 1 else "immediate",
            callback=_Progress(index, avg_erasure, trace),
        )
        genome = Genome(index, np.asarray(result.x, dtype=float))
        if best is None or result.fun < best[1]:
            best = (genome, float(result.fun))
    return best


@dataclass
class JointDesigner:
    """Runs the outer design loop for a profile with fixed DE and search settings."""

    profile: ErasureProfile
    hyper: DEHyperParams = field(default_factory=DEHyperParams)
    opts: DEOptions = field(default_factory=DEOptions)

    def _uniform_threshold(self, graph: Protograph) -> ThresholdResult:
        return threshold(graph, uniform_mapping(self.profile.m, graph.vn_count), self.profile, self.opts)

    def _loop(
        self,
        graphs: Sequence[Protograph],
        specs: Sequence[Optional[ConnectionSpec]],
        start: float,
    ) -> DesignResult:
        avg = start
        history = [avg]
        best: Optional[DesignResult] = None
        round_seeds = spawn_seeds(self.hyper.seed, self.hyper.max_rounds)
        for round_index in range(self.hyper.max_rounds):
            hyper = replace(self.hyper, seed=round_seeds[round_index])
            genome, score = differential_evolution(avg, graphs, hyper, self.profile, self.opts)
            graph = graphs[genome.connection_index]
            mapping = repair(genome.mapping_params, self.profile.m)
            found = threshold(graph, mapping, self.profile, self.opts)
            logger.info(
                "round=%d candidate=%d objective=%.4f threshold=%.5f design_point=%.5f",
                round_index, genome.connection_index, score, found.avg_erasure, avg,
            )
            if best is None or found.avg_erasure > best.threshold.avg_erasure:
                best = DesignResult(
                    graph=graph,
                    mapping=mapping,
                    threshold=found,
                    uniform_threshold=found,
                    connection=specs[genome.connection_index],
                    objective=score,
                )
            if score >= self.opts.max_iters:
                logger.warning(
                    "no converging genome at average erasure %.5f; keeping the best design so far", avg
                )
                break
            if found.avg_erasure <= avg:
                break
            avg = found.avg_erasure
            history.append(avg)

        uniform = self._uniform_threshold(best.graph)
        mapping, final = best.mapping, best.threshold
        if uniform.avg_erasure > final.avg_erasure:
            logger.info("uniform mapping beats the optimized one on the winning graph")
            mapping, final = uniform_mapping(self.profile.m, best.graph.vn_count), uniform
        return DesignResult(
            graph=best.graph,
            mapping=mapping,
            threshold=final,
            uniform_threshold=uniform,
            history=history,
            connection=best.connection,
            objective=best.objective,
        )

    def joint_design(self, params: SingleChainParams, M: int) -> DesignResult:
        if M < 1:
            raise InvalidParametersError(f"number of chains must be >= 1, got {M}")
        single = build_single_chain(params)
        start = self._uniform_threshold(single).avg_erasure
        logger.info("single-chain uniform threshold %.5f for %s", start, params.label)
        if M == 1:
            return self._loop([single], [None], start)
        specs = enumerate_connections(params, M)
        graphs = [build_connected(params, spec, family="designed") for spec in specs]
        logger.info("searching %d connection candidates", len(graphs))
        return self._loop(graphs, specs, start)

    def optimize_mapping_only(self, graph: Protograph) -> DesignResult:
        start = self._uniform_threshold(graph).avg_erasure
        return self._loop([graph], [None], start)


def joint_design(
    params: SingleChainParams,
    M: int,
    profile: ErasureProfile,
    hyper: DEHyperParams = DEHyperParams(),
    opts: DEOptions = DEOptions(),
) -> DesignResult:
    return JointDesigner(profile, hyper, opts).joint_design(params, M)


def optimize_mapping_only(
    graph: Protograph,
    profile: ErasureProfile,
    hyper: DEHyperParams = DEHyperParams(),
    opts: DEOptions = DEOptions(),
) -> DesignResult:
    return JointDesigner(profile, hyper, opts).optimize_mapping_only(graph)
