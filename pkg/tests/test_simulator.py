import unittest

import numpy as np

from scbicm.core.bitmap import uniform_mapping
from scbicm.core.channel import bpsk, gray_qam
from scbicm.core.lifting import assign_channels, lift
from scbicm.core.protograph import build_single_chain
from scbicm.exceptions import InvalidParametersError
from scbicm.models.ensemble import SingleChainParams
from scbicm.models.results import SimConfig
from scbicm.services.simulator import (
    BERSimulator,
    bp_decode,
    check_node_update,
    clopper_pearson,
    demap_llr,
    encoder_from_code,
    run_ber,
)

PARAMS = SingleChainParams(3, 6, 10, 2)


class TestDemapper(unittest.TestCase):

    def test_bpsk_closed_form(self):
        y = np.array([0.3 + 0.1j, -1.2 - 0.4j])
        llr = demap_llr(y, 0.5, bpsk())
        np.testing.assert_allclose(llr[:, 0], 4.0 * y.real / 0.5)

    def test_qam_signs_follow_labels(self):
        qam = gray_qam(16)
        llr = demap_llr(qam.points, 0.01, qam)
        np.testing.assert_array_equal(llr < 0, qam.bits().astype(bool))

    def test_rejects_bad_noise(self):
        with self.assertRaises(InvalidParametersError):
            demap_llr([1.0], 0.0, bpsk())


class TestCheckNode(unittest.TestCase):

    def test_tanh_rule(self):
        v2c = np.array([1.0, 2.0, -3.0])
        out = check_node_update(v2c, np.zeros(3, dtype=np.int64), 1)
        expected = [
            2 * np.arctanh(np.tanh(v2c[b] / 2) * np.tanh(v2c[c] / 2))
            for b, c in ((1, 2), (0, 2), (0, 1))
        ]
        np.testing.assert_allclose(out, expected, rtol=1e-9)

    def test_zero_input_silences_others(self):
        v2c = np.array([0.0, 2.0, 3.0])
        out = check_node_update(v2c, np.zeros(3, dtype=np.int64), 1)
        self.assertEqual(out[1], 0.0)
        self.assertEqual(out[2], 0.0)
        self.assertGreater(out[0], 0.0)


class TestDecoder(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.code = lift(build_single_chain(PARAMS), 20, seed=11)

    def test_valid_word_needs_no_iterations(self):
        bits, converged, iterations = bp_decode(self.code, np.full(self.code.n, 5.0), 50)
        self.assertTrue(converged)
        self.assertEqual(iterations, 0)
        self.assertFalse(np.any(bits))

    def test_corrects_weak_errors_and_erasures(self):
        llr = np.full(self.code.n, 4.0)
        llr[[0, 100, 250]] = -1.0
        llr[[30, 310]] = 0.0
        bits, converged, iterations = bp_decode(self.code, llr, 50)
        self.assertTrue(converged)
        self.assertGreater(iterations, 0)
        self.assertFalse(np.any(bits))

    def test_rejects_bad_llrs(self):
        with self.assertRaises(InvalidParametersError):
            bp_decode(self.code, np.zeros(10), 5)
        llr = np.ones(self.code.n)
        llr[0] = np.nan
        with self.assertRaises(InvalidParametersError):
            bp_decode(self.code, llr, 5)


class TestEncoder(unittest.TestCase):

    def test_generator_spans_codewords(self):
        code = lift(build_single_chain(SingleChainParams(3, 6, 4, 2)), 5, seed=0)
        G = encoder_from_code(code)
        self.assertEqual(G.shape[1], code.n)
        self.assertGreaterEqual(G.shape[0], code.n - code.n_checks)
        for row in G:
            self.assertFalse(np.any(code.syndrome(row)))

    def test_length_limit(self):
        code = lift(build_single_chain(PARAMS), 300, seed=0)
        with self.assertRaises(InvalidParametersError):
            encoder_from_code(code)


class TestConfidence(unittest.TestCase):

    def test_intervals(self):
        low, high = clopper_pearson(0, 100)
        self.assertEqual(low, 0.0)
        self.assertAlmostEqual(high, 0.0362, delta=5e-4)
        low, high = clopper_pearson(5, 100)
        self.assertTrue(low < 0.05 < high)
        self.assertEqual(clopper_pearson(0, 0), (0.0, 1.0))


class TestBERSimulator(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.code = lift(build_single_chain(PARAMS), 20, seed=11)
        cls.assignment = assign_channels(uniform_mapping(4, 20), 20, seed=11)

    def test_clean_and_noisy_points(self):
        config = SimConfig(ebn0_points=(-2.0, 12.0), max_frames=2, target_bit_errors=10 ** 6, seed=5)
        noisy, clean = run_ber(self.code, self.assignment, config)
        self.assertEqual(noisy.frames, 2)
        self.assertEqual(noisy.frame_errors, 2)
        self.assertGreater(noisy.ber, 0.0)
        self.assertEqual(clean.bit_errors, 0)
        self.assertEqual(clean.bits, 2 * self.code.n)
        self.assertTrue(clean.ber_low <= clean.ber <= clean.ber_high)

    def test_stops_at_target_errors(self):
        config = SimConfig(ebn0_points=(-2.0,), max_frames=50, target_bit_errors=1, seed=5)
        (record,) = run_ber(self.code, self.assignment, config)
        self.assertEqual(record.frames, 1)

    def test_seeded_runs_repeat(self):
        config = SimConfig(ebn0_points=(2.0,), max_frames=3, target_bit_errors=10 ** 6, seed=8)
        self.assertEqual(run_ber(self.code, self.assignment, config), run_ber(self.code, self.assignment, config))

    def test_encoded_source(self):
        code = lift(build_single_chain(SingleChainParams(3, 6, 4, 2)), 5, seed=0)
        assignment = assign_channels(uniform_mapping(4, 8), 5, seed=0)
        config = SimConfig(ebn0_points=(20.0,), max_frames=3, target_bit_errors=10 ** 6, seed=1, source="encoded")
        simulator = BERSimulator(code, assignment, config)
        self.assertIsNotNone(simulator.generator)
        (record,) = simulator.run()
        self.assertEqual(record.bit_errors, 0)

    def test_mismatched_assignment(self):
        assignment = assign_channels(uniform_mapping(4, 20), 10, seed=0)
        with self.assertRaises(InvalidParametersError):
            BERSimulator(self.code, assignment, SimConfig(ebn0_points=(1.0,)), gray_qam(16))


if __name__ == '__main__':
    unittest.main()
