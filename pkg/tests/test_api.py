import unittest

import numpy as np
from fastapi.testclient import TestClient

from scbicm.app import create_app
from scbicm.config import Config
from scbicm.core.channel import erasure_profile, gray_qam


class TestAPI(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        profile = erasure_profile(gray_qam(16), np.round(np.arange(-2.0, 12.0001, 0.05), 10))
        cls.app = create_app(Config(), profile=profile)

    def setUp(self):
        self.client = TestClient(self.app)
        self.client.__enter__()

    def tearDown(self):
        self.client.__exit__(None, None, None)

    def test_profile_summary(self):
        response = self.client.get("/profile")
        self.assertEqual(response.status_code, 200)
        body = response.json()
        self.assertEqual(body["constellation"], "16qam-gray")
        self.assertEqual(body["m"], 4)
        self.assertEqual(body["rows"], 281)

    def test_build_loop_ensemble(self):
        response = self.client.post("/ensembles", json={"family": "loop"})
        self.assertEqual(response.status_code, 200)
        body = response.json()
        self.assertEqual(body["family"], "loop")
        self.assertEqual(body["design_rate"], "2/5")
        self.assertEqual(len(body["multiplicity"]), 24)

    def test_constraint_violation(self):
        connection = {
            "num_chains": 2,
            "connecting_end": ["right", "right"],
            "edges": [
                {"source_chain": 0, "cn_slot": 0, "target_chain": 1, "target_vn": 0, "multiplicity": 5},
                {"source_chain": 1, "cn_slot": 0, "target_chain": 0, "target_vn": 0, "multiplicity": 5},
            ],
        }
        response = self.client.post("/ensembles", json={"family": "custom", "connection": connection})
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.json()["category"], "constraint")

    def test_invalid_parameters(self):
        response = self.client.post("/ensembles", json={"family": "single", "K": 5})
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()["category"], "invalid-input")

    def test_custom_requires_connection(self):
        response = self.client.post("/ensembles", json={"family": "custom"})
        self.assertEqual(response.status_code, 422)

    def test_validate_mapping(self):
        good = {"m": 4, "V": 2, "columns": [[0.25] * 4, [0.25] * 4]}
        self.assertTrue(self.client.post("/bitmaps/validate", json=good).json()["ok"])
        bad = {"m": 4, "V": 2, "columns": [[0.5, 0.5, 0.5, 0.5], [0.25] * 4]}
        body = self.client.post("/bitmaps/validate", json=bad).json()
        self.assertFalse(body["ok"])
        self.assertIn("column_sum", {v["constraint"] for v in body["violations"]})

    def test_threshold_uniform(self):
        response = self.client.post("/thresholds", json={"ensemble": {"family": "single"}, "mapping": "uniform"})
        self.assertEqual(response.status_code, 200)
        body = response.json()
        self.assertGreater(body["avg_erasure"], 0.4881)
        self.assertAlmostEqual(body["ebn0_db"], body["snr_db"] - 10.0 * np.log10(1.6), places=6)

    def test_threshold_mapping_shape_mismatch(self):
        mapping = {"m": 4, "V": 2, "columns": [[0.25] * 4, [0.25] * 4]}
        response = self.client.post("/thresholds", json={"ensemble": {"family": "single"}, "mapping": mapping})
        self.assertEqual(response.status_code, 400)


if __name__ == '__main__':
    unittest.main()
