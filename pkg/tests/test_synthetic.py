import unittest
import tempfile
import shutil
import sys
from pathlib import Path
import numpy as np
sys.path.insert(0, str(Path(__file__).parent.parent))
from spmvtune.features import extract_features
from spmvtune.matrix_io import read_matrix_market
from spmvtune.synthetic import (GENERATORS, banded, block_diagonal, generate, power_law_rows,
                                random_matrix, size_ladder, uniform_rows, write_corpus)

class TestGenerators(unittest.TestCase):
    """Test the seeded matrix generators."""
    def test_uniform_rows(self):
        m = uniform_rows(30, 5, np.random.default_rng(0))
        m.validate()
        self.assertTrue(np.all(m.row_lengths() == 5))
        with self.assertRaises(ValueError):
            uniform_rows(3, 4, np.random.default_rng(0))
    def test_power_law_rows_are_irregular(self):
        m = power_law_rows(500, 5.0, np.random.default_rng(1))
        m.validate()
        f = extract_features(m)
        self.assertGreater(f.var_nnz, 0.0)
        self.assertLess(f.ell_ratio, 1.0)
        self.assertTrue(np.all(m.row_lengths() >= 1))
    def test_random_matrix_density(self):
        m = random_matrix(20, 10, 0.25, np.random.default_rng(2))
        self.assertEqual(m.nnz, 50)
        with self.assertRaises(ValueError):
            random_matrix(2, 2, 1.5, np.random.default_rng(2))
    def test_banded(self):
        m = banded(5, 1)
        self.assertEqual(m.nnz, 13)
        self.assertEqual(m.row_lengths().tolist(), [2, 3, 3, 3, 2])
        self.assertTrue(all(v == 4.0 for r, c, v in m.entries if r == c))
    def test_block_diagonal(self):
        m = block_diagonal(10, 4, np.random.default_rng(3))
        self.assertEqual(m.nnz, 16 + 16 + 4)
        self.assertTrue(all(r // 4 == c // 4 for r, c, _ in m.entries))
    def test_size_ladder(self):
        ladder = size_ladder(10, 3)
        self.assertEqual([m.nnz for m in ladder], [40, 400, 4000])
    def test_generate_every_family(self):
        rng = np.random.default_rng(4)
        for kind in GENERATORS:
            generate(kind, 50, rng).validate()
        with self.assertRaises(ValueError):
            generate("fractal", 50, rng)
    def test_seeded(self):
        a = generate("powerlaw", 80, np.random.default_rng(9))
        b = generate("powerlaw", 80, np.random.default_rng(9))
        self.assertEqual(a, b)

class TestWriteCorpus(unittest.TestCase):
    """Test corpus writing."""
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
    def tearDown(self):
        shutil.rmtree(self.temp_dir)
    def test_write_corpus(self):
        paths = write_corpus(self.temp_dir, 7, seed=5, min_n=16, max_n=64)
        self.assertEqual(len(paths), 7)
        self.assertEqual(len({p.name for p in paths}), 7)
        for path in paths:
            m = read_matrix_market(path)
            self.assertTrue(16 <= m.n_rows <= 64)
    def test_corpus_is_reproducible(self):
        first = write_corpus(Path(self.temp_dir) / "a", 5, seed=1, min_n=16, max_n=32)
        second = write_corpus(Path(self.temp_dir) / "b", 5, seed=1, min_n=16, max_n=32)
        for a, b in zip(first, second):
            self.assertEqual(a.name, b.name)
            self.assertEqual(a.read_bytes(), b.read_bytes())
    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            write_corpus(self.temp_dir, 0)
        with self.assertRaises(ValueError):
            write_corpus(self.temp_dir, 2, min_n=10, max_n=5)

if __name__ == '__main__':
    unittest.main()
