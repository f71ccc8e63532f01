#!/usr/bin/env python3
import math
import unittest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, os.path.dirname(__file__))

import oracles
from src.iqa.baselines import SsimConfig, psnr, ssim, ssim_map
from src.iqa.errors import DimensionMismatchError, ParameterError
from src.iqa.imgio import DynamicRange, GrayImage


def byte_image(data):
    return GrayImage(np.asarray(data, dtype=np.float64), DynamicRange.BYTE)


class TestPsnr(unittest.TestCase):

    def test_identical_images(self):
        img = byte_image(np.full((8, 8), 77.0))
        self.assertEqual(psnr(img, img), math.inf)

    def test_known_mse(self):
        a = byte_image(np.full((10, 10), 100.0))
        b = byte_image(np.full((10, 10), 105.0))
        expected = 10.0 * math.log10(255.0 ** 2 / 25.0)
        self.assertAlmostEqual(psnr(a, b), expected, places=12)
        self.assertAlmostEqual(psnr(a, b), 34.1514, places=4)

    def test_peak(self):
        a = GrayImage(np.zeros((2, 2)))
        b = GrayImage(np.full((2, 2), 0.1))
        self.assertAlmostEqual(psnr(a, b, peak=1.0), 20.0, places=10)
        with self.assertRaises(ParameterError):
            psnr(a, b, peak=0.0)

    def test_errors(self):
        with self.assertRaises(DimensionMismatchError):
            psnr(byte_image(np.zeros((4, 4))), byte_image(np.zeros((4, 5))))
        with self.assertRaises(ParameterError):
            psnr(byte_image(np.zeros((4, 4))), GrayImage(np.zeros((4, 4))))


class TestSsim(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(17)

    def test_identity(self):
        img = byte_image(self.rng.integers(0, 256, (32, 32)))
        self.assertEqual(ssim(img, img), 1.0)

    def test_matches_loop_reference(self):
        a = self.rng.integers(0, 256, (20, 20)).astype(np.float64)
        b = np.clip(a + self.rng.normal(0.0, 20.0, (20, 20)), 0, 255)
        self.assertAlmostEqual(ssim(byte_image(a), byte_image(b)), oracles.ssim(a, b), delta=1e-8)

    def test_map_is_valid_region(self):
        a = byte_image(self.rng.integers(0, 256, (20, 25)))
        self.assertEqual(ssim_map(a, a).shape, (10, 15))

    def test_window(self):
        cfg = SsimConfig()
        g = cfg.window()
        self.assertEqual(len(g), 11)
        self.assertAlmostEqual(g.sum(), 1.0, places=15)
        np.testing.assert_allclose(g, oracles.gaussian_window(), rtol=0, atol=1e-15)
        np.testing.assert_array_equal(g, g[::-1])

    def test_config_validation(self):
        for kwargs in ({"window_size": 10}, {"window_size": 1}, {"sigma": 0.0}, {"k2": -0.1}):
            with self.assertRaises(ParameterError):
                SsimConfig(**kwargs)

    def test_smaller_than_window(self):
        img = byte_image(np.zeros((10, 20)))
        with self.assertRaises(DimensionMismatchError):
            ssim(img, img)

    def test_worse_with_more_noise(self):
        a = self.rng.integers(40, 200, (32, 32)).astype(np.float64)
        noise = self.rng.standard_normal((32, 32))
        mild = ssim(byte_image(a), byte_image(np.clip(a + 5 * noise, 0, 255)))
        strong = ssim(byte_image(a), byte_image(np.clip(a + 40 * noise, 0, 255)))
        self.assertGreater(mild, strong)


if __name__ == '__main__':
    unittest.main()
