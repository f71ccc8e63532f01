#!/usr/bin/env python3
import unittest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.iqa.baselines import psnr, ssim
from src.iqa.errors import ParameterError
from src.iqa.haarpsi import HaarPsiParams, haarpsi_score
from src.iqa.imgio import DynamicRange, GrayImage
from src.iqa.measures import parse_measure
from src.iqa.wavelet import Padding


class TestParseMeasure(unittest.TestCase):

    def test_default_haarpsi(self):
        spec = parse_measure("haarpsi")
        self.assertEqual((spec.params.C, spec.params.alpha), (30.0, 4.2))
        self.assertEqual(spec.display_name, "haarpsi")

    def test_preset_in_name(self):
        spec = parse_measure("haarpsi-med")
        self.assertEqual((spec.params.C, spec.params.alpha), (5.0, 4.9))
        self.assertEqual(spec.display_name, "haarpsi-med")
        self.assertEqual(parse_measure("haarpsi", preset="pa").params.alpha, 6.3)

    def test_conflicting_preset(self):
        with self.assertRaises(ParameterError):
            parse_measure("haarpsi-med", preset="pa")
        parse_measure("haarpsi-med", preset="MED")

    def test_explicit_values_override_preset(self):
        spec = parse_measure("haarpsi", preset="med", C=12.0, alpha=3.5)
        self.assertEqual((spec.params.C, spec.params.alpha), (12.0, 3.5))
        with self.assertRaises(ParameterError):
            parse_measure("haarpsi", C=12.0)

    def test_variant_flags(self):
        spec = parse_measure("haarpsi", subsample=False, padding="zero")
        self.assertFalse(spec.params.subsample)
        self.assertIs(spec.params.padding, Padding.ZERO)
        with self.assertRaises(ParameterError):
            parse_measure("haarpsi", padding="wrap")

    def test_baselines_take_no_haarpsi_options(self):
        self.assertIsNone(parse_measure("PSNR").params)
        with self.assertRaises(ParameterError):
            parse_measure("ssim", preset="med")
        with self.assertRaises(ParameterError):
            parse_measure("vif")

    def test_describe_and_hash(self):
        a = parse_measure("haarpsi-med")
        b = parse_measure("haarpsi", C=5.0, alpha=4.9)
        self.assertEqual(a.describe(), "haarpsi C=5 alpha=4.9 subsample=true padding=symmetric")
        self.assertEqual(a.param_hash(), b.param_hash())
        self.assertNotEqual(a.param_hash(), parse_measure("haarpsi").param_hash())
        self.assertEqual(len(a.param_hash()), 12)
        self.assertEqual(parse_measure("psnr").describe(), "psnr peak=255")


class TestCompute(unittest.TestCase):

    def test_dispatch(self):
        rng = np.random.default_rng(8)
        a = GrayImage(rng.integers(0, 256, (32, 32)).astype(float), DynamicRange.BYTE)
        b = GrayImage(rng.integers(0, 256, (32, 32)).astype(float), DynamicRange.BYTE)
        self.assertEqual(parse_measure("psnr").compute(a, b), psnr(a, b))
        self.assertEqual(parse_measure("ssim").compute(a, b), ssim(a, b))
        self.assertEqual(parse_measure("haarpsi-pa").compute(a, b),
                         haarpsi_score(a, b, HaarPsiParams(C=5.0, alpha=6.3)).score)


if __name__ == '__main__':
    unittest.main()
