import os
import unittest
from fractions import Fraction

import numpy as np

from scbicm.core.bitmap import ROW_TOL, effective_erasures, pair_fractions, uniform_mapping, validate
from scbicm.core.channel import erasure_profile, erasures_for_avg, gray_qam
from scbicm.core.density_evolution import run_de, threshold
from scbicm.core.protograph import build_loop_connected, build_single_chain
from scbicm.exceptions import InvalidParametersError
from scbicm.models.ensemble import SingleChainParams
from scbicm.models.results import DEHyperParams, DEOptions, Genome
from scbicm.services.optimizer import (
    RESIDUAL_WEIGHT,
    JointDesigner,
    Objective,
    differential_evolution,
    objective,
    optimize_mapping_only,
    repair,
)

SMALL = SingleChainParams(3, 6, 4, 2)
OPTS = DEOptions(max_iters=2000)
TINY_SEARCH = DEHyperParams(population=6, generations=3, seed=17, screen_top=2, max_rounds=2)


def qam_profile():
    return erasure_profile(gray_qam(16), np.round(np.arange(-2.0, 12.0001, 0.05), 10))


class TestRepair(unittest.TestCase):

    def test_half_genes_give_uniform(self):
        mapping = repair(np.full(10, 0.5))
        np.testing.assert_array_equal(mapping.a, uniform_mapping(4, 10).a)

    def test_output_is_valid(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            genes = rng.uniform(-0.2, 1.2, size=16)
            mapping = repair(genes)
            self.assertTrue(validate(mapping, row_tol=ROW_TOL).ok)
            np.testing.assert_allclose(mapping.a[0], mapping.a[2])
            np.testing.assert_allclose(mapping.a[1], mapping.a[3])

    def test_extreme_genes(self):
        mapping = repair(np.array([1.0, 1.0, 1.0, 0.0]))
        self.assertTrue(validate(mapping, row_tol=ROW_TOL).ok)
        self.assertAlmostEqual(float(pair_fractions(mapping)[0].sum()), 2.0)

    def test_random_draws_are_valid(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            genes = rng.uniform(-0.2, 1.2, size=rng.integers(2, 41))
            self.assertTrue(validate(repair(genes), row_tol=ROW_TOL).ok)

    def test_repair_is_idempotent(self):
        genes = np.random.default_rng(5).uniform(size=12)
        once = repair(genes)
        again = repair(pair_fractions(once)[0])
        np.testing.assert_allclose(again.a, once.a, atol=1e-9)

    def test_needs_two_groups(self):
        with self.assertRaises(InvalidParametersError):
            repair(np.full(4, 0.5), m=4, groups=((0,), (1,), (2, 3)))


class TestObjective(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.profile = qam_profile()
        cls.graph = build_single_chain(SMALL)
        cls.uniform = threshold(cls.graph, uniform_mapping(4, 8), cls.profile)

    def test_converging_scores_iterations(self):
        eps = erasures_for_avg(self.profile, self.uniform.avg_erasure - 0.02)
        score = Objective(self.graph, eps, 4, OPTS)(np.full(8, 0.5))
        self.assertGreaterEqual(score, 1.0)
        self.assertLess(score, OPTS.max_iters)

    def test_failing_scores_above_cap(self):
        eps = erasures_for_avg(self.profile, self.uniform.avg_erasure + 0.05)
        score = Objective(self.graph, eps, 4, OPTS)(np.full(8, 0.5))
        self.assertGreater(score, OPTS.max_iters)

    def test_lower_residual_scores_better(self):
        eps = erasures_for_avg(self.profile, self.uniform.avg_erasure + 0.08)
        score = Objective(self.graph, eps, 4, OPTS)
        rng = np.random.default_rng(2)
        population = [np.full(8, 0.5)] + [rng.uniform(size=8) for _ in range(5)]
        ranked = []
        for genes in population:
            result = run_de(self.graph, effective_erasures(repair(genes), eps), OPTS)
            self.assertFalse(result.converged)
            residual = float(np.mean(result.residuals))
            value = score(genes)
            self.assertAlmostEqual(value, OPTS.max_iters + RESIDUAL_WEIGHT * residual)
            ranked.append((residual, value))
        for low, high in zip(sorted(ranked), sorted(ranked)[1:]):
            self.assertLessEqual(low[1], high[1])

    def test_genome_wrapper(self):
        genome = Genome(0, np.full(8, 0.5))
        avg = self.uniform.avg_erasure - 0.02
        direct = Objective(self.graph, erasures_for_avg(self.profile, avg), 4, OPTS)(genome.mapping_params)
        self.assertEqual(objective(genome, [self.graph], avg, self.profile, OPTS), direct)

    def test_differential_evolution_records_trace(self):
        trace = []
        genome, score = differential_evolution(
            self.uniform.avg_erasure, [self.graph], TINY_SEARCH, self.profile, OPTS, trace
        )
        self.assertEqual(genome.connection_index, 0)
        self.assertEqual(genome.mapping_params.shape, (8,))
        self.assertTrue(trace)
        self.assertLessEqual(score, min(value for _, _, value in trace))


class TestDesign(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.profile = qam_profile()

    def test_mapping_only_never_loses_to_uniform(self):
        graph = build_single_chain(SMALL)
        result = optimize_mapping_only(graph, self.profile, TINY_SEARCH, OPTS)
        self.assertGreaterEqual(result.threshold.avg_erasure, result.uniform_threshold.avg_erasure)
        self.assertTrue(validate(result.mapping, row_tol=ROW_TOL).ok)
        self.assertGreaterEqual(len(result.history), 1)
        self.assertTrue(all(b > a for a, b in zip(result.history, result.history[1:])))
        self.assertIsNone(result.connection)

    def test_seeded_design_repeats(self):
        graph = build_single_chain(SMALL)
        first = optimize_mapping_only(graph, self.profile, TINY_SEARCH, OPTS)
        second = optimize_mapping_only(graph, self.profile, TINY_SEARCH, OPTS)
        np.testing.assert_array_equal(first.mapping.a, second.mapping.a)
        self.assertEqual(first.history, second.history)

    def test_joint_design_single_chain(self):
        designer = JointDesigner(self.profile, TINY_SEARCH, OPTS)
        result = designer.joint_design(SMALL, 1)
        self.assertEqual(result.graph.num_chains, 1)

    def test_joint_design_two_chains(self):
        search = DEHyperParams(population=5, generations=2, seed=5, screen_top=1, max_rounds=1)
        result = JointDesigner(self.profile, search, OPTS).joint_design(SMALL, 2)
        self.assertEqual(result.graph.num_chains, 2)
        self.assertEqual(result.graph.family, "designed")
        self.assertIsNotNone(result.connection)
        self.assertEqual(result.graph.design_rate, Fraction(1, 4))
        self.assertGreaterEqual(result.threshold.avg_erasure, result.uniform_threshold.avg_erasure)

    def test_rejects_zero_chains(self):
        with self.assertRaises(InvalidParametersError):
            JointDesigner(self.profile, TINY_SEARCH, OPTS).joint_design(SMALL, 0)

    @unittest.skipUnless(os.environ.get("SCBICM_SLOW"), "set SCBICM_SLOW=1 for a full mapping design")
    def test_loop_mapping_improves(self):
        graph = build_loop_connected(SingleChainParams(3, 6, 10, 2))
        result = optimize_mapping_only(graph, self.profile, DEHyperParams(population=20, generations=40))
        self.assertGreater(result.threshold.avg_erasure, result.uniform_threshold.avg_erasure)


class TestHyperParams(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(InvalidParametersError):
            DEHyperParams(population=2)
        with self.assertRaises(InvalidParametersError):
            DEHyperParams(weight=0.0)
        with self.assertRaises(InvalidParametersError):
            DEHyperParams(screen_top=0)

    def test_overrides_skip_none(self):
        hyper = DEHyperParams.from_config(seed=None, population=12)
        self.assertEqual(hyper.population, 12)
        self.assertEqual(hyper.seed, DEHyperParams().seed)


if __name__ == '__main__':
    unittest.main()
