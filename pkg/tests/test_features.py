import unittest
import statistics
import sys
from collections import Counter
from pathlib import Path
import numpy as np
sys.path.insert(0, str(Path(__file__).parent.parent))
from spmvtune.errors import SpmvTuneError
from spmvtune.features import (FEATURE_NAMES, SparsityFeatures, extract_features,
                               features_from_row_lengths, time_feature_extraction)
from spmvtune.formats import coo_to_ell
from spmvtune.matrix_io import TripletMatrix
from spmvtune.synthetic import power_law_rows, random_matrix, uniform_rows


def brute_force(m):
    lengths = [0] * m.n_rows
    for r, _, _ in m.entries:
        lengths[r] += 1
    n = len(lengths)
    nnz = sum(lengths)
    counts = Counter(lengths)
    top = max(counts.values())
    widest = max(lengths)
    return {
        "n": n,
        "nnz": nnz,
        "avg_nnz": nnz / n,
        "var_nnz": statistics.pvariance(lengths),
        "ell_ratio": nnz / (n * widest) if widest else 1.0,
        "median": float(statistics.median(lengths)),
        "mode": min(v for v, c in counts.items() if c == top),
        "std_nnz": statistics.pstdev(lengths),
    }

class TestExtractFeatures(unittest.TestCase):
    """Test the eight sparsity features."""
    def test_uniform_four_per_row(self):
        f = extract_features(uniform_rows(100, 4, np.random.default_rng(0)))
        self.assertEqual((f.n, f.nnz, f.mode), (100, 400, 4))
        self.assertEqual(f.avg_nnz, 4.0)
        self.assertEqual(f.var_nnz, 0.0)
        self.assertEqual(f.std_nnz, 0.0)
        self.assertEqual(f.ell_ratio, 1.0)
        self.assertEqual(f.median, 4.0)
    def test_single_entry(self):
        f = extract_features(TripletMatrix.from_entries(1, 1, [(0, 0, 3.0)]))
        self.assertEqual(f.to_dict(), {"n": 1, "nnz": 1, "avg_nnz": 1.0, "var_nnz": 0.0,
                                       "ell_ratio": 1.0, "median": 1.0, "mode": 1, "std_nnz": 0.0})
    def test_matches_brute_force(self):
        rng = np.random.default_rng(17)
        for i in range(50):
            n = int(rng.integers(1, 120))
            if i % 2:
                m = random_matrix(n, int(rng.integers(1, 120)), float(rng.uniform(0.0, 0.4)), rng)
            else:
                m = power_law_rows(n, float(rng.uniform(1.0, 6.0)), rng, n_cols=200)
            got = extract_features(m).to_dict()
            expected = brute_force(m)
            for name in ("n", "nnz", "mode"):
                self.assertEqual(got[name], expected[name], name)
            for name in ("avg_nnz", "var_nnz", "ell_ratio", "median", "std_nnz"):
                self.assertAlmostEqual(got[name], expected[name], delta=1e-12 * max(1.0, abs(expected[name])))
    def test_even_median_and_mode_ties(self):
        f = features_from_row_lengths(np.array([1, 3, 3, 1, 5, 6]))
        self.assertEqual(f.median, 3.0)
        self.assertEqual(f.mode, 1)
        f = features_from_row_lengths(np.array([2, 5]))
        self.assertEqual(f.median, 3.5)
        self.assertEqual(f.mode, 2)
    def test_empty_matrix_ratio(self):
        f = extract_features(TripletMatrix.from_entries(3, 3, []))
        self.assertEqual(f.ell_ratio, 1.0)
        self.assertEqual(f.avg_nnz, 0.0)
    def test_zero_rows_rejected(self):
        with self.assertRaises(SpmvTuneError):
            extract_features(TripletMatrix.from_entries(0, 4, []))
    def test_invariants(self):
        m = random_matrix(40, 30, 0.2, np.random.default_rng(3))
        f = extract_features(m)
        lengths = m.row_lengths()
        self.assertAlmostEqual(f.avg_nnz, f.nnz / f.n)
        self.assertAlmostEqual(f.std_nnz, f.var_nnz ** 0.5)
        self.assertTrue(0.0 <= f.ell_ratio <= 1.0)
        self.assertTrue(lengths.min() <= f.median <= lengths.max())
        self.assertTrue(lengths.min() <= f.mode <= lengths.max())
        self.assertAlmostEqual(f.ell_ratio * coo_to_ell(m).value_slots, f.nnz, delta=1e-9)
    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(21)
        m = random_matrix(25, 25, 0.2, rng)
        perm = rng.permutation(25)
        shuffled = TripletMatrix.from_arrays(25, 25, m.rows, perm[m.cols], m.values)
        self.assertEqual(extract_features(shuffled), extract_features(m))
    def test_vector_and_mapping(self):
        f = extract_features(uniform_rows(10, 2, np.random.default_rng(1)))
        self.assertEqual(f.as_vector().tolist(), [float(getattr(f, n)) for n in FEATURE_NAMES])
        self.assertEqual(SparsityFeatures.from_mapping({k: str(v) for k, v in f.to_dict().items()}), f)

class TestFeatureTiming(unittest.TestCase):
    """Test timed feature extraction."""
    def test_positive_duration(self):
        m = uniform_rows(200, 3, np.random.default_rng(2))
        self.assertGreater(time_feature_extraction(m, min_total=0.005, max_reps=50, warmup=1), 0.0)
    def test_zero_rows_rejected(self):
        with self.assertRaises(SpmvTuneError):
            time_feature_extraction(TripletMatrix.from_entries(0, 1, []))

if __name__ == '__main__':
    unittest.main()
