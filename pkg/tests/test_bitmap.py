import unittest

import numpy as np

from scbicm.core.bitmap import (
    TABLE_I_TEXT,
    TABLE_TOL,
    effective_erasures,
    expand_groups,
    format_grouped_table,
    pair_fractions,
    parse_grouped_table,
    table_i_mapping,
    uniform_mapping,
    validate,
)
from scbicm.exceptions import InvalidParametersError
from scbicm.models.bit_mapping import BitMapping
from scbicm.models.constellation import sequential_mean


class TestValidation(unittest.TestCase):

    def test_uniform_is_valid(self):
        mapping = uniform_mapping(4, 40)
        self.assertTrue(validate(mapping).ok)
        self.assertTrue(np.all(mapping.a == 0.25))

    def test_reports_each_kind(self):
        a = np.full((4, 4), 0.25)
        a[0, 0], a[1, 0] = 1.2, -0.2
        a[2, 1] = 0.3
        report = validate(BitMapping(a))
        kinds = {v.constraint for v in report.violations}
        self.assertEqual(kinds, {"bounds", "column_sum", "row_sum"})
        self.assertFalse(report)
        bounds = [v for v in report.violations if v.constraint == "bounds"]
        self.assertEqual(bounds[0].index, 0)
        self.assertAlmostEqual(bounds[0].magnitude, 0.2)

    def test_row_sum_violation_only(self):
        a = np.zeros((4, 4))
        a[0, :2] = 1.0
        a[1, 2:] = 1.0
        report = validate(BitMapping(a))
        self.assertEqual({v.constraint for v in report.violations}, {"row_sum"})
        self.assertEqual(sorted(v.index for v in report.violations), [0, 1, 2, 3])

    def test_row_tolerance_scales_with_row_target(self):
        for shift, ok in ((5e-6, True), (2e-5, False)):
            a = uniform_mapping(4, 40).a.copy()
            a[0, 0] += shift
            a[1, 0] -= shift
            report = validate(BitMapping(a), row_tol=1e-6)
            self.assertEqual(report.ok, ok)
            if not ok:
                self.assertEqual({v.constraint for v in report.violations}, {"row_sum"})

    def test_rejects_empty(self):
        with self.assertRaises(InvalidParametersError):
            BitMapping(np.zeros((0, 3)))


class TestEffectiveErasures(unittest.TestCase):

    def test_uniform_collapse_is_exact(self):
        eps = np.array([0.31, 0.67, 0.31, 0.67])
        out = effective_erasures(uniform_mapping(4, 6), eps)
        self.assertTrue(np.all(out == sequential_mean(eps)))

    def test_weighted(self):
        a = np.array([[1.0, 0.0], [0.0, 0.5], [0.0, 0.5], [0.0, 0.0]])
        out = effective_erasures(BitMapping(a), [0.1, 0.2, 0.4, 0.8])
        np.testing.assert_allclose(out, [0.1, 0.3])

    def test_rejects_bad_input(self):
        with self.assertRaises(InvalidParametersError):
            effective_erasures(uniform_mapping(4, 2), [0.5, 0.5])
        with self.assertRaises(InvalidParametersError):
            effective_erasures(uniform_mapping(4, 2), [0.5, 0.5, 1.5, 0.5])


class TestGroupedTable(unittest.TestCase):

    def test_published_mapping(self):
        mapping = table_i_mapping()
        self.assertEqual((mapping.m, mapping.V), (4, 40))
        self.assertTrue(validate(mapping, column_tol=TABLE_TOL, row_tol=TABLE_TOL).ok)
        np.testing.assert_allclose(mapping.column(0), [0.0796, 0.4204, 0.0796, 0.4204])
        np.testing.assert_allclose(mapping.column(6), [0.496, 0.004, 0.496, 0.004])
        np.testing.assert_allclose(mapping.column(39), mapping.column(38))

    def test_pair_fractions(self):
        fractions = pair_fractions(table_i_mapping())
        self.assertAlmostEqual(fractions[0, 21], 0.9995)
        self.assertAlmostEqual(fractions[1, 30], 0.9756)

    def test_format_round_trip(self):
        text = format_grouped_table(table_i_mapping())
        self.assertTrue(text.startswith("channels: {0,2} {1,3}\n"))
        self.assertIn("39-40  0.0013 0.9987", text)
        again = parse_grouped_table(text)
        np.testing.assert_allclose(again.a, table_i_mapping().a)

    def test_custom_channel_groups(self):
        mapping = parse_grouped_table("channels: {0,1} {2,3}\n1-2 0.5 0.5\n")
        np.testing.assert_allclose(mapping.a, np.full((4, 2), 0.25))

    def test_overlap(self):
        with self.assertRaises(InvalidParametersError):
            parse_grouped_table("1-3 0.5 0.5\n3-4 0.5 0.5\n")

    def test_uncovered(self):
        with self.assertRaises(InvalidParametersError):
            parse_grouped_table("1-2 0.5 0.5\n4 0.5 0.5\n")

    def test_bad_sum(self):
        with self.assertRaises(InvalidParametersError):
            parse_grouped_table("1-2 0.6 0.5\n")

    def test_bad_range(self):
        with self.assertRaises(InvalidParametersError):
            parse_grouped_table("3-1 0.5 0.5\n")
        with self.assertRaises(InvalidParametersError):
            parse_grouped_table("1-5 0.5 0.5\n", V=4)
        with self.assertRaises(InvalidParametersError):
            parse_grouped_table("x 0.5 0.5\n")

    def test_groups_must_partition(self):
        with self.assertRaises(InvalidParametersError):
            parse_grouped_table("channels: {0,1} {1,3}\n1 0.5 0.5\n")

    def test_expand_groups(self):
        mapping = expand_groups(np.array([[0.2], [0.8]]), ((0, 2), (1, 3)), 4)
        np.testing.assert_allclose(mapping.column(0), [0.1, 0.4, 0.1, 0.4])

    def test_table_text_has_every_vn(self):
        self.assertEqual(len(TABLE_I_TEXT.strip().splitlines()), 31)


if __name__ == '__main__':
    unittest.main()
