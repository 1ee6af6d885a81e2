import math
import os
import tempfile
import unittest

import numpy as np

from scbicm.core.channel import (
    bicm_capacity,
    bit_channel_capacities,
    bpsk,
    capacity_groups,
    constellation_by_name,
    ebn0_db,
    erasure_profile,
    erasures_for_avg,
    gray_qam,
    load_or_build_profile,
    load_profile,
    save_profile,
    shannon_limit_ebn0,
    snr_db_from_ebn0,
    snr_for_avg_erasure,
)
from scbicm.exceptions import ArtifactError, ChannelRangeError, InvalidParametersError
from scbicm.models.constellation import ErasureProfile, LabeledConstellation, sequential_mean


class TestConstellations(unittest.TestCase):

    def test_gray_16qam(self):
        qam = gray_qam(16)
        self.assertEqual(qam.name, "16qam-gray")
        self.assertEqual(qam.m, 4)
        self.assertAlmostEqual(float(np.mean(np.abs(qam.points) ** 2)), 1.0, places=12)
        self.assertTrue(qam.is_gray())

    def test_bits_are_label_msb_first(self):
        qam = gray_qam(16)
        bits = qam.bits()
        for point, label in zip(bits, qam.labels):
            value = sum(int(b) << (3 - i) for i, b in enumerate(point))
            self.assertEqual(value, label)

    def test_lookup(self):
        self.assertEqual(constellation_by_name("16QAM").name, "16qam-gray")
        self.assertEqual(constellation_by_name("bpsk").m, 1)
        with self.assertRaises(InvalidParametersError):
            constellation_by_name("8psk")
        with self.assertRaises(InvalidParametersError):
            gray_qam(8)

    def test_rejects_bad_labels(self):
        with self.assertRaises(InvalidParametersError):
            LabeledConstellation("bad", np.array([1.0, -1.0]), np.array([0, 0]))
        with self.assertRaises(InvalidParametersError):
            LabeledConstellation("loud", np.array([2.0, -2.0]), np.array([0, 1]))


class TestCapacities(unittest.TestCase):

    def test_sign_and_amplitude_pairs(self):
        caps = bit_channel_capacities(gray_qam(16), 6.0)
        self.assertEqual(caps[0], caps[2])
        self.assertEqual(caps[1], caps[3])
        self.assertGreater(caps[0], caps[1])
        self.assertEqual(capacity_groups(gray_qam(16)), ((0, 2), (1, 3)))

    def test_separable_matches_product_rule(self):
        qam = gray_qam(16)
        for snr in (0.0, 5.0, 10.0):
            fast = bit_channel_capacities(qam, snr)
            full = bit_channel_capacities(qam, snr, separable=False)
            np.testing.assert_allclose(fast, full, atol=1e-8)

    def test_below_shannon_and_increasing(self):
        qam = gray_qam(16)
        previous = 0.0
        for snr in (-2.0, 2.0, 6.0, 10.0, 14.0):
            total = bicm_capacity(qam, snr)
            self.assertLess(total, math.log2(1.0 + 10.0 ** (snr / 10.0)))
            self.assertGreater(total, previous)
            previous = total
        self.assertGreater(bicm_capacity(qam, 20.0), 3.99)

    def test_bpsk_range(self):
        low = bit_channel_capacities(bpsk(), -5.0)[0]
        high = bit_channel_capacities(bpsk(), 10.0)[0]
        self.assertTrue(0.0 < low < high <= 1.0)
        self.assertGreater(high, 0.999)

    def test_rejects_nonfinite_snr(self):
        with self.assertRaises(InvalidParametersError):
            bit_channel_capacities(gray_qam(16), float("nan"))


class TestErasureProfile(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.profile = erasure_profile(gray_qam(16), np.round(np.arange(0.0, 8.0001, 0.05), 10))

    def test_shape_and_monotonic(self):
        self.assertEqual(self.profile.m, 4)
        self.assertEqual(self.profile.erasures.shape, (161, 4))
        self.assertTrue(np.all(np.diff(self.profile.avg_erasure) < 0))

    def test_average_is_sequential_mean(self):
        row = self.profile.erasures[40]
        self.assertEqual(self.profile.avg_erasure[40], sequential_mean(row))

    def test_at_interpolates(self):
        eps, avg = self.profile.at(3.025)
        lower, _ = self.profile.at(3.0)
        upper, _ = self.profile.at(3.05)
        np.testing.assert_allclose(eps, 0.5 * (lower + upper))
        self.assertAlmostEqual(avg, sequential_mean(eps))

    def test_out_of_range(self):
        with self.assertRaises(ChannelRangeError):
            self.profile.at(8.5)
        with self.assertRaises(ChannelRangeError):
            snr_for_avg_erasure(self.profile, 0.99)

    def test_inverse_lookup(self):
        snr = snr_for_avg_erasure(self.profile, 0.5)
        self.assertAlmostEqual(self.profile.at(snr)[1], 0.5, places=6)
        eps = erasures_for_avg(self.profile, 0.5)
        self.assertAlmostEqual(sequential_mean(eps), 0.5, places=6)
        self.assertLess(eps[0], eps[1])

    def test_coarse_grid_rejected(self):
        with self.assertRaises(ChannelRangeError):
            erasure_profile(gray_qam(16), [0.0, 2.0, 4.0])

    def test_unsorted_grid_rejected(self):
        with self.assertRaises(InvalidParametersError):
            erasure_profile(gray_qam(16), [1.0, 0.0])

    def test_shannon_limit(self):
        limit = shannon_limit_ebn0(0.4, 4, self.profile)
        snr = snr_for_avg_erasure(self.profile, 0.6)
        self.assertAlmostEqual(limit, snr - 10.0 * math.log10(1.6))


class TestProfileFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "profile.txt")
        self.profile = erasure_profile(gray_qam(16), np.round(np.arange(2.0, 4.0001, 0.05), 10))

    def tearDown(self):
        self.tmp.cleanup()

    def test_save_and_load(self):
        save_profile(self.profile, self.path)
        loaded = load_profile(self.path)
        self.assertEqual(loaded.constellation, "16qam-gray")
        self.assertEqual(loaded.labeling, "gray")
        np.testing.assert_allclose(loaded.erasures, self.profile.erasures, rtol=1e-11)

    def test_cached_profile_is_reused(self):
        save_profile(self.profile, self.path)
        loaded = load_or_build_profile(self.path)
        self.assertEqual(loaded.snr_range, (2.0, 4.0))

    def test_constellation_mismatch(self):
        save_profile(self.profile, self.path)
        with self.assertRaises(ArtifactError):
            load_or_build_profile(self.path, bpsk())

    def test_missing_and_corrupt(self):
        with self.assertRaises(ArtifactError):
            load_profile(os.path.join(self.tmp.name, "missing.txt"))
        with open(self.path, "w") as handle:
            handle.write("# constellation=16qam-gray\n1.0 0.5 0.5 0.5 0.5 0.9\n2.0 0.4 0.4 0.4 0.4 0.4\n")
        with self.assertRaises(ArtifactError):
            load_profile(self.path)


class TestConversions(unittest.TestCase):

    def test_ebn0_round_trip(self):
        self.assertAlmostEqual(ebn0_db(5.0, 0.4, 4), 5.0 - 10.0 * math.log10(1.6))
        self.assertAlmostEqual(snr_db_from_ebn0(ebn0_db(5.0, 0.4, 4), 0.4, 4), 5.0)

    def test_invalid_rate(self):
        with self.assertRaises(InvalidParametersError):
            ebn0_db(5.0, 0.0, 4)
        with self.assertRaises(InvalidParametersError):
            ebn0_db(5.0, 1.5, 4)

    def test_profile_validation(self):
        with self.assertRaises(InvalidParametersError):
            ErasureProfile("x", np.array([1.0, 0.5]), np.array([[0.5], [0.4]]))
        with self.assertRaises(InvalidParametersError):
            ErasureProfile("x", np.array([0.0, 1.0]), np.array([[1.2], [0.4]]))


if __name__ == '__main__':
    unittest.main()
