#!/usr/bin/env python3
import unittest
import sys
import os
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.harness.config import HarnessConfig, PrecisionMode
from src.harness.dataset import load_manifest
from src.harness.degrade import write_synthetic_dataset
from src.harness.optimizer import SurfaceGrid, export_surface, grid_search, import_surface
from src.harness.scoring import evaluate, score_dataset
from src.iqa.errors import ManifestError, ParameterError
from src.iqa.haarpsi import HaarPsiParams, haarpsi_score
from src.iqa.measures import parse_measure
from src.iqa.stats import RatingMatrix
from src.utils.run_journal import RunJournal

MIXED = ("noise", "blur", "contrast", "hole", "jpeg")
PLANTED = HaarPsiParams(C=5.0, alpha=4.9)

def write_planted_dataset(root):
    """Mixed degradations rated exactly as HaarPSI ranks them at C=5, alpha=4.9"""
    path = write_synthetic_dataset(root, n_images=4, size=64, degradations=MIXED)
    manifest = load_manifest(path)
    scores = {}
    for entry in manifest.entries:
        ref, dist = manifest.load_pair(entry)
        scores[entry.image_id] = haarpsi_score(ref, dist, PLANTED).score
    RatingMatrix.from_scores(scores).to_csv(manifest.ratings_path)
    return load_manifest(path)

class TestGridSearch(unittest.TestCase):
    
    @classmethod
    def setUpClass(cls):
        cls.temp_dir = tempfile.TemporaryDirectory()
        cls.root = Path(cls.temp_dir.name)
        cls.manifest = write_planted_dataset(cls.root)
        
    @classmethod
    def tearDownClass(cls):
        cls.temp_dir.cleanup()
        
    def test_planted_optimum(self):
        surface = grid_search([self.manifest], [1.0, 5.0, 100.0], [2.0, 4.9, 8.0])
        
        self.assertEqual(surface.argmax_index, (1, 1))
        self.assertEqual(surface.argmax, (5.0, 4.9))
        self.assertEqual(surface.best_mean, 1.0)
        self.assertEqual(surface.cell_count, 9)
        # the cells ahead of the optimum in C-major order rank the images differently
        self.assertTrue(np.all(surface.mean.ravel()[:4] < 1.0))
        self.assertEqual(surface.footer(), "argmax C=5 alpha=4.9 mean_srcc=1.000000")
        
    def test_cells_equal_standalone_evaluation(self):
        surface = grid_search([self.manifest], [5.0, 30.0], [4.2, 4.9])
        table = score_dataset(self.manifest, parse_measure("haarpsi"))
        report = evaluate(table, self.manifest.ratings)
        
        self.assertEqual(surface.cell(30.0, 4.2), report.srcc)
        self.assertEqual(surface.cell(30.0, 4.2, dataset="synthetic"), report.srcc)
        
    def test_identical_datasets(self):
        surface = grid_search([self.manifest, self.manifest], [5.0, 20.0], [3.0, 6.0])
        
        self.assertEqual(surface.dataset_names, ("synthetic", "synthetic_2"))
        np.testing.assert_array_equal(surface.srcc[0], surface.srcc[1])
        np.testing.assert_array_equal(surface.mean, surface.srcc[0])
        
    def test_threads_are_deterministic(self):
        sequential = grid_search([self.manifest], [5.0, 10.0, 40.0], [2.0, 4.2])
        threaded = grid_search([self.manifest], [5.0, 10.0, 40.0], [2.0, 4.2], config=HarnessConfig(threads=3))
        
        np.testing.assert_array_equal(sequential.srcc, threaded.srcc)
        
    def test_explicit_ratings_and_journal(self):
        flipped = RatingMatrix(self.manifest.ratings.images, self.manifest.ratings.graders,
                               -self.manifest.ratings.ratings)
        journal = RunJournal(str(self.root / "logs"), execution_id="grid")
        surface = grid_search([(self.manifest, flipped)], [5.0], [4.9], journal=journal)
        
        self.assertEqual(surface.cell(5.0, 4.9), -1.0)
        events = [e["event_type"] for e in journal.read("optimize")]
        self.assertEqual(events, ["START", "PREPARED", "END"])
        
    def test_invalid_grids(self):
        with self.assertRaises(ParameterError):
            grid_search([], [5.0], [4.9])
        with self.assertRaises(ParameterError):
            grid_search([self.manifest], [0.0, 5.0], [4.9])
        with self.assertRaises(ParameterError):
            grid_search([self.manifest], [5.0], [4.9, 4.2])

class TestSurfaceGrid(unittest.TestCase):
    
    def _surface(self, mode=PrecisionMode.REPORT):
        block = np.array([[0.90001, 0.90004], [0.9, 0.8]])
        return SurfaceGrid((1.0, 2.0), (1.0, 2.0), ("ds",), np.stack([block, block]), mode)
        
    def test_precision_modes(self):
        self.assertEqual(self._surface().argmax, (1.0, 2.0))
        self.assertEqual(self._surface(PrecisionMode.SELECT).argmax, (1.0, 1.0))
        self.assertEqual(self._surface().footer(), "argmax C=1 alpha=2 mean_srcc=0.900000")

    def test_reported_srcc_is_rounded(self):
        block = np.array([[0.87468, 0.874684], [0.5, 0.6]])
        surface = SurfaceGrid((1.0, 2.0), (1.0, 2.0), ("ds",), np.stack([block, block]))

        # selection still sees the full-precision difference
        self.assertEqual(surface.argmax, (1.0, 2.0))
        self.assertEqual(surface.best_mean, 0.874684)
        self.assertEqual(surface.footer(), "argmax C=1 alpha=2 mean_srcc=0.874700")
        with tempfile.TemporaryDirectory() as root:
            lines = export_surface(surface, os.path.join(root, "surface.csv")).read_text().splitlines()
        self.assertEqual(lines[2], "1.000000,2.000000,0.874700,0.874700")
        self.assertEqual(lines[3], "2.000000,1.000000,0.500000,0.500000")

    def test_validation(self):
        with self.assertRaises(ParameterError):
            SurfaceGrid((1.0,), (1.0, 2.0), ("ds",), np.zeros((1, 1, 2)))
        with self.assertRaises(ParameterError):
            SurfaceGrid((1.0,), (1.0,), ("ds",), np.full((2, 1, 1), 1.5))
            
    def test_cell_lookup(self):
        surface = self._surface()
        self.assertEqual(surface.cell(2.0, 1.0), 0.9)
        with self.assertRaises(ParameterError):
            surface.cell(3.0, 1.0)
        with self.assertRaises(ParameterError):
            surface.cell(1.0, 1.0, dataset="other")
            
    def test_export_and_import(self):
        surface = self._surface(PrecisionMode.SELECT)
        with tempfile.TemporaryDirectory() as root:
            path = export_surface(surface, os.path.join(root, "surface.csv"))
            lines = path.read_text().splitlines()
            back = import_surface(path)
            
        self.assertEqual(lines[0], "C,alpha,ds,mean")
        self.assertEqual(lines[1], "1.000000,1.000000,0.900000,0.900000")
        self.assertEqual(lines[-2], "# argmax C=1 alpha=1 mean_srcc=0.900000")
        self.assertEqual(lines[-1], "# precision_mode=select digits=4")
        self.assertEqual(back.c_values, surface.c_values)
        self.assertEqual(back.dataset_names, ("ds",))
        self.assertIs(back.precision_mode, PrecisionMode.SELECT)
        np.testing.assert_allclose(back.srcc, surface.srcc, rtol=0, atol=5e-5)
        
    def test_import_errors(self):
        with tempfile.TemporaryDirectory() as root:
            bad_header = os.path.join(root, "a.csv")
            with open(bad_header, "w") as f:
                f.write("x,y,mean\n1,1,0.5\n")
            with self.assertRaises(ManifestError):
                import_surface(bad_header)
                
            holes = os.path.join(root, "b.csv")
            with open(holes, "w") as f:
                f.write("C,alpha,mean\n1,1,0.5\n2,2,0.4\n")
            with self.assertRaises(ManifestError):
                import_surface(holes)
                
            with self.assertRaises(ManifestError):
                import_surface(os.path.join(root, "absent.csv"))

if __name__ == '__main__':
    unittest.main()
