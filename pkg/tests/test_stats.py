#!/usr/bin/env python3
import io
import itertools
import math
import tempfile
import unittest
import sys
import os
from contextlib import redirect_stderr

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, os.path.dirname(__file__))

import oracles
from src.iqa.errors import ManifestError, ParameterError
from src.iqa.stats import (
    SIGNIFICANCE_TESTS,
    RatingMatrix,
    SignificanceEntry,
    correlation_report,
    fisher_z,
    has_ties,
    krcc,
    ranks,
    srcc,
    steiger_test,
    williams_test,
    zscore_lookup,
    zscore_ratings,
)


class TestRanks(unittest.TestCase):

    def test_average_ranks(self):
        np.testing.assert_array_equal(ranks([10, 20, 20, 5]), [2.0, 3.5, 3.5, 1.0])

    def test_has_ties(self):
        self.assertTrue(has_ties([1.0, 2.0, 1.0]))
        self.assertFalse(has_ties([3.0, 2.0, 1.0]))


class TestRankCorrelation(unittest.TestCase):

    def test_pinned_values(self):
        x = [1, 2, 3, 4, 5]
        y = [1, 3, 2, 4, 5]
        self.assertEqual(srcc(x, y), 0.9)
        self.assertEqual(krcc(x, y), 0.8)

    def test_sign_and_invariance(self):
        x = [0.3, 0.9, 0.1, 0.5, 0.7]
        y = [2.0, 5.0, 1.0, 3.0, 4.0]
        self.assertEqual(srcc(x, y), 1.0)
        self.assertEqual(srcc(x, [-v for v in y]), -1.0)
        self.assertEqual(krcc(x, [-v for v in y]), -1.0)
        self.assertEqual(srcc(np.exp(x), y), srcc(x, y))

    def test_all_permutations_match_reference(self):
        for n in range(2, 7):
            x = list(range(n))
            for perm in itertools.permutations(range(n)):
                y = list(perm)
                self.assertEqual(srcc(x, y), oracles.spearman(x, y))
                self.assertEqual(krcc(x, y), oracles.kendall_tau_a(x, y))

    def test_ties_use_rank_pearson(self):
        rng = np.random.default_rng(4)
        x = rng.integers(0, 10, 200).astype(float)
        y = x + rng.integers(-3, 4, 200)
        expected = np.corrcoef(oracles.average_ranks(list(x)), oracles.average_ranks(list(y)))[0, 1]
        self.assertAlmostEqual(srcc(x, y), expected, delta=1e-12)

    def test_large_tied_kendall(self):
        rng = np.random.default_rng(99)
        x = rng.integers(0, 20, 1000).astype(float)
        y = rng.integers(0, 20, 1000).astype(float) + 0.5 * x
        self.assertAlmostEqual(krcc(x, y), oracles.kendall_tau_a(list(x), list(y)), delta=1e-12)

    def test_errors(self):
        with self.assertRaises(ParameterError):
            srcc([1.0], [2.0])
        with self.assertRaises(ParameterError):
            srcc([1.0, 2.0], [1.0, 2.0, 3.0])
        with self.assertRaises(ParameterError):
            srcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with self.assertRaises(ParameterError):
            krcc([1.0, np.nan], [1.0, 2.0])

    def test_correlation_report(self):
        report = correlation_report("haarpsi", [0.1, 0.4, 0.3, 0.9], [1.0, 2.0, 3.0, 4.0])
        self.assertEqual(report.n, 4)
        self.assertEqual(report.srcc, srcc([0.1, 0.4, 0.3, 0.9], [1.0, 2.0, 3.0, 4.0]))
        self.assertTrue(report.srcc_closed_form)
        tied = correlation_report("psnr", [0.1, 0.1, 0.3, 0.9], [-1.0, -2.0, -3.0, -4.0])
        self.assertFalse(tied.srcc_closed_form)
        self.assertLess(tied.srcc, 0.0)
        self.assertEqual(tied.abs_srcc, -tied.srcc)


class TestSignificance(unittest.TestCase):

    def test_steiger_reference_values(self):
        z, p = steiger_test(0.5, 0.3, 0.4, 100)
        self.assertAlmostEqual(z, 2.03487, places=4)
        self.assertAlmostEqual(p, 0.04186, places=3)
        expected_z, expected_p = oracles.steiger(0.5, 0.3, 0.4, 100)
        self.assertAlmostEqual(z, expected_z, delta=1e-9)
        self.assertAlmostEqual(p, expected_p, delta=1e-9)

    def test_steiger_against_reference_grid(self):
        for r_jk, r_jh, r_kh, n in ((0.8, 0.6, 0.7, 40), (0.2, -0.1, 0.3, 250), (-0.4, 0.1, -0.5, 30), (0.9, 0.85, 0.95, 500)):
            z, p = steiger_test(r_jk, r_jh, r_kh, n)
            expected_z, expected_p = oracles.steiger(r_jk, r_jh, r_kh, n)
            self.assertAlmostEqual(z, expected_z, delta=1e-9)
            self.assertAlmostEqual(p, expected_p, delta=1e-9)

    def test_steiger_antisymmetric(self):
        z1, p1 = steiger_test(0.5, 0.3, 0.4, 100)
        z2, p2 = steiger_test(0.3, 0.5, 0.4, 100)
        self.assertAlmostEqual(z1, -z2, places=12)
        self.assertAlmostEqual(p1, p2, places=12)

    def test_equal_correlations(self):
        self.assertEqual(steiger_test(0.6, 0.6, 0.9, 50), (0.0, 1.0))
        self.assertEqual(williams_test(0.6, 0.6, 0.9, 50), (0.0, 1.0))

    def test_equal_correlations_are_still_validated(self):
        for test in (steiger_test, williams_test):
            with self.assertRaises(ParameterError):
                test(1.0, 1.0, 0.4, 50)
            with self.assertRaises(ParameterError):
                test(0.6, 0.6, 0.4, 2)
            with self.assertRaises(ParameterError):
                test(0.6, 0.6, 1.0, 50)

    def test_williams_reference_value(self):
        t2, p = williams_test(0.5, 0.3, 0.4, 100)
        self.assertAlmostEqual(t2, 2.065, places=3)
        self.assertGreater(p, 0.03)
        self.assertLess(p, 0.05)

    def test_errors(self):
        with self.assertRaises(ParameterError):
            steiger_test(0.5, 0.3, 0.4, 3)
        with self.assertRaises(ParameterError):
            steiger_test(1.0, 0.3, 0.4, 100)
        with self.assertRaises(ParameterError):
            williams_test(0.5, 0.3, -1.0, 100)
        with self.assertRaises(ParameterError):
            fisher_z(1.0)

    def test_registry(self):
        self.assertIs(SIGNIFICANCE_TESTS["steiger"], steiger_test)
        self.assertIs(SIGNIFICANCE_TESTS["williams"], williams_test)
        entry = SignificanceEntry("srcc", "steiger", "psnr", 2.1, 0.036, "better")
        self.assertTrue(entry.significant)
        self.assertFalse(SignificanceEntry("srcc", "steiger", "psnr", 0.5, 0.6, "none").significant)
        self.assertAlmostEqual(fisher_z(0.5), 0.5 * math.log(3.0), places=15)


class TestRatings(unittest.TestCase):

    def test_zscores_two_graders(self):
        r = RatingMatrix(("a", "b", "c"), ("g1", "g2"), np.array([[1.0, 10.0], [2.0, 30.0], [3.0, 20.0]]))
        z = zscore_ratings(r)
        np.testing.assert_allclose(z, [-1.0, 0.5, 0.5], rtol=0, atol=1e-12)

    def test_missing_ratings(self):
        r = RatingMatrix.from_records([("a", "g1", 1.0), ("b", "g1", 3.0), ("c", "g2", 5.0),
                                       ("a", "g2", 1.0), ("c", "g1", 2.0)])
        self.assertTrue(np.isnan(r.ratings[1, 1]))
        z = zscore_lookup(r)
        self.assertAlmostEqual(z["b"], 1.0, places=12)
        self.assertAlmostEqual(z["a"], (-1.0 - math.sqrt(0.5)) / 2.0, places=12)

    def test_zero_variance_grader_is_excluded(self):
        r = RatingMatrix(("a", "b"), ("flat", "g2"), np.array([[3.0, 1.0], [3.0, 2.0]]))
        captured = io.StringIO()
        with redirect_stderr(captured):
            z = zscore_ratings(r)
        self.assertIn("flat", captured.getvalue())
        np.testing.assert_allclose(z, [-math.sqrt(0.5), math.sqrt(0.5)], rtol=0, atol=1e-12)

    def test_no_usable_grader(self):
        r = RatingMatrix(("a", "b"), ("g1",), np.array([[3.0], [3.0]]))
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(ParameterError):
                zscore_ratings(r)

    def test_validation(self):
        with self.assertRaises(ParameterError):
            RatingMatrix(("a",), ("g1",), np.array([[1.0]]))
        with self.assertRaises(ParameterError):
            RatingMatrix(("a", "b"), ("g1",), np.array([[1.0, 2.0]]))
        with self.assertRaises(ParameterError):
            RatingMatrix.from_records([("a", "g1", 1.0), ("a", "g1", 2.0), ("b", "g1", 1.0)])

    def test_subset(self):
        r = RatingMatrix.from_scores({"a": 1.0, "b": 2.0, "c": 3.0})
        sub = r.subset(["c", "a"])
        self.assertEqual(sub.images, ("c", "a"))
        np.testing.assert_array_equal(sub.ratings[:, 0], [3.0, 1.0])
        with self.assertRaises(ParameterError):
            r.subset(["a", "zz"])

    def test_csv(self):
        with tempfile.TemporaryDirectory() as root:
            path = os.path.join(root, 'ratings.csv')
            r = RatingMatrix.from_records([("a", "g1", 1.5), ("b", "g1", -2.25), ("b", "g2", 7.0)])
            r.to_csv(path)
            back = RatingMatrix.from_csv(path)
            self.assertEqual(back.images, ("a", "b"))
            self.assertEqual(back.graders, ("g1", "g2"))
            self.assertEqual(back.ratings[1, 0], -2.25)
            self.assertTrue(np.isnan(back.ratings[0, 1]))

            commented = os.path.join(root, 'commented.csv')
            with open(commented, 'w') as f:
                f.write("# exported by hand\nimage_id,grader_id,rating\nx,g,1\ny,g,2\n")
            self.assertEqual(RatingMatrix.from_csv(commented).images, ("x", "y"))

            bad = os.path.join(root, 'bad.csv')
            with open(bad, 'w') as f:
                f.write("image,score\nx,1\n")
            with self.assertRaises(ManifestError):
                RatingMatrix.from_csv(bad)
            with self.assertRaises(ManifestError):
                RatingMatrix.from_csv(os.path.join(root, 'absent.csv'))


if __name__ == '__main__':
    unittest.main()
