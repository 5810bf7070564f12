import unittest
import sys
from pathlib import Path
import numpy as np
sys.path.insert(0, str(Path(__file__).parent.parent))
from spmvtune.errors import MemoryGuardError
from spmvtune.features import extract_features
from spmvtune.formats import (FORMAT_NAMES, coo_to_bell, coo_to_csr, coo_to_ell, coo_to_sell,
                              convert, format_footprint, format_summary, is_feasible,
                              padding_fraction, padding_slots, reconstruct_dense, required_slots)
from spmvtune.matrix_io import TripletMatrix, to_dense
from spmvtune.synthetic import random_matrix, uniform_rows


def identity(n):
    return TripletMatrix.from_entries(n, n, [(i, i, 1.0) for i in range(n)])


def with_row_lengths(lengths, n_cols=None):
    n_cols = n_cols or max(lengths)
    entries = [(r, c, float(r + c + 1)) for r, length in enumerate(lengths) for c in range(length)]
    return TripletMatrix.from_entries(len(lengths), n_cols, entries)


def degenerate_matrices():
    rng = np.random.default_rng(11)
    return [
        TripletMatrix.from_entries(0, 0, []),
        TripletMatrix.from_entries(3, 4, []),
        TripletMatrix.from_entries(1, 5, [(0, 1, 2.0), (0, 4, -1.0)]),
        TripletMatrix.from_entries(5, 1, [(1, 0, 3.0), (4, 0, 4.0)]),
        TripletMatrix.from_entries(4, 6, [(2, c, float(c + 1)) for c in range(6)]),
        random_matrix(9, 7, 0.4, rng),
    ]

class TestCsr(unittest.TestCase):
    """Test CSR conversion."""
    def test_identity(self):
        csr = coo_to_csr(identity(3))
        self.assertEqual(csr.row_ptr.tolist(), [0, 1, 2, 3])
        self.assertEqual(csr.col_idx.tolist(), [0, 1, 2])
        self.assertEqual(csr.values.tolist(), [1.0, 1.0, 1.0])
    def test_empty(self):
        self.assertEqual(coo_to_csr(TripletMatrix.from_entries(4, 4, [])).row_ptr.tolist(), [0] * 5)
    def test_footprint_of_identity(self):
        self.assertEqual(format_footprint(coo_to_csr(identity(3))), 52)
    def test_reconstruction(self):
        m = random_matrix(8, 8, 20 / 64, np.random.default_rng(1))
        self.assertEqual(m.nnz, 20)
        self.assertEqual(reconstruct_dense(coo_to_csr(m)), to_dense(m))

class TestEll(unittest.TestCase):
    """Test ELL conversion and padding."""
    def test_padding_count(self):
        ell = coo_to_ell(with_row_lengths([2, 4, 1]))
        self.assertEqual(ell.max_nnz, 4)
        self.assertEqual(ell.values.shape, (3, 4))
        self.assertEqual(padding_slots(ell), 5)
    def test_padding_sentinel(self):
        ell = coo_to_ell(with_row_lengths([2, 4, 1]))
        padding = ~ell.occupied()
        self.assertTrue(np.all(ell.values[padding] == 0.0))
        self.assertTrue(np.all(ell.col_idx[padding] == 0))
    def test_uniform_rows_have_no_padding(self):
        m = uniform_rows(50, 4, np.random.default_rng(0))
        ell = coo_to_ell(m)
        self.assertEqual(padding_slots(ell), 0)
        self.assertEqual(ell.value_slots, coo_to_csr(m).value_slots)
    def test_empty(self):
        ell = coo_to_ell(TripletMatrix.from_entries(3, 3, []))
        self.assertEqual(ell.max_nnz, 0)
        self.assertEqual(padding_fraction(ell), 0.0)
    def test_guard(self):
        m = with_row_lengths([1, 1, 1, 10])
        with self.assertRaises(MemoryGuardError):
            coo_to_ell(m, guard=39)
        self.assertEqual(coo_to_ell(m, guard=40).value_slots, 40)
        self.assertFalse(is_feasible(m, "ell", guard=39))
        self.assertTrue(is_feasible(m, "csr", guard=1))
    def test_padding_matches_ell_ratio(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            m = random_matrix(12, 15, float(rng.uniform(0.05, 0.6)), rng)
            ell = coo_to_ell(m)
            self.assertAlmostEqual(1.0 - padding_fraction(ell), extract_features(m).ell_ratio,
                                   delta=1e-12)
    def test_footprint_formula(self):
        ell = coo_to_ell(with_row_lengths([2, 4, 1]))
        self.assertEqual(format_footprint(ell), 3 * 4 * (8 + 4) + 3 * 4)

class TestBell(unittest.TestCase):
    """Test blocked ELL conversion."""
    def test_single_block(self):
        m = TripletMatrix.from_entries(4, 4, [(0, 0, 1.0), (1, 1, 2.0), (0, 1, 3.0)])
        bell = coo_to_bell(m, 2, 2)
        self.assertEqual(bell.stored_blocks, 1)
        self.assertEqual(bell.max_blocks, 1)
        self.assertEqual(bell.block_row_len.tolist(), [1, 0])
    def test_dense_matrix(self):
        m = TripletMatrix.from_entries(4, 4, [(r, c, float(4 * r + c + 1))
                                              for r in range(4) for c in range(4)])
        bell = coo_to_bell(m, 2, 2)
        self.assertEqual(bell.stored_blocks, 4)
        self.assertEqual(padding_slots(bell), 0)
        self.assertTrue(np.all(bell.data != 0.0))
    def test_ragged_edges(self):
        m = random_matrix(9, 7, 0.35, np.random.default_rng(2))
        bell = coo_to_bell(m, 2, 2)
        self.assertEqual(bell.n_block_rows, 5)
        self.assertEqual(reconstruct_dense(bell), to_dense(m))
    def test_block_columns_increase(self):
        m = random_matrix(16, 16, 0.3, np.random.default_rng(6))
        bell = coo_to_bell(m, 3, 2)
        for r in range(bell.n_block_rows):
            cols = bell.block_col_idx[r, :bell.block_row_len[r]]
            self.assertTrue(np.all(np.diff(cols) > 0))
            self.assertTrue(np.all(bell.block_col_idx[r, bell.block_row_len[r]:] == 0))
    def test_invalid_block(self):
        with self.assertRaises(ValueError):
            coo_to_bell(identity(2), 0, 2)
    def test_required_slots_matches_conversion(self):
        m = random_matrix(13, 10, 0.2, np.random.default_rng(8))
        self.assertEqual(required_slots(m, "bell", 2, 3), coo_to_bell(m, 2, 3).value_slots)

class TestSell(unittest.TestCase):
    """Test sliced ELL conversion."""
    def test_slice_widths(self):
        sell = coo_to_sell(with_row_lengths([3, 1, 2, 2]), 2)
        self.assertEqual(sell.slice_width.tolist(), [3, 2])
        self.assertEqual(sell.slice_ptr.tolist(), [0, 6, 10])
        self.assertEqual(padding_slots(sell), 2)
    def test_full_height_equals_ell(self):
        m = with_row_lengths([3, 1, 2, 2, 5])
        self.assertEqual(padding_slots(coo_to_sell(m, m.n_rows)), padding_slots(coo_to_ell(m)))
    def test_padding_never_exceeds_ell(self):
        rng = np.random.default_rng(9)
        for height in (1, 2, 3, 8):
            m = random_matrix(17, 11, 0.3, rng)
            self.assertLessEqual(padding_slots(coo_to_sell(m, height)), padding_slots(coo_to_ell(m)))
    def test_odd_rows(self):
        m = random_matrix(11, 11, 0.3, np.random.default_rng(10))
        sell = coo_to_sell(m, 2)
        self.assertEqual(sell.n_slices, 6)
        self.assertEqual(reconstruct_dense(sell), to_dense(m))
    def test_invalid_slice_height(self):
        with self.assertRaises(ValueError):
            coo_to_sell(identity(2), 0)

class TestConversions(unittest.TestCase):
    """Test properties shared by every format."""
    def test_all_formats_reconstruct_exactly(self):
        rng = np.random.default_rng(12)
        corpus = degenerate_matrices() + [random_matrix(int(n), int(n), float(d), rng)
                                          for n, d in zip(rng.integers(1, 40, 30),
                                                          rng.uniform(0.01, 0.5, 30))]
        for m in corpus:
            expected = to_dense(m)
            for fmt in FORMAT_NAMES:
                converted = convert(m, fmt)
                self.assertEqual(reconstruct_dense(converted), expected, f"{fmt} of {m}")
                self.assertEqual(converted.to_triplets(), m)
                self.assertEqual(converted.nnz, m.nnz)
    def test_conversion_is_deterministic(self):
        m = random_matrix(20, 20, 0.2, np.random.default_rng(13))
        for fmt in FORMAT_NAMES:
            a, b = convert(m, fmt), convert(m, fmt)
            self.assertEqual(format_summary(a), format_summary(b))
            self.assertEqual(a.to_triplets(), b.to_triplets())
    def test_required_slots(self):
        m = with_row_lengths([2, 4, 1])
        self.assertEqual(required_slots(m, "csr"), 7)
        self.assertEqual(required_slots(m, "ell"), 12)
        self.assertEqual(required_slots(m, "sell", slice_height=2), 2 * 4 + 1 * 1)
        with self.assertRaises(ValueError):
            required_slots(m, "hyb")
    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            convert(identity(2), "coo")
    def test_summary(self):
        summary = format_summary(coo_to_ell(with_row_lengths([2, 4, 1])))
        self.assertEqual(summary["format"], "ell")
        self.assertEqual(summary["nnz"], 7)
        self.assertEqual(summary["padding_slots"], 5)
        self.assertAlmostEqual(summary["padding_fraction"], 5 / 12)

if __name__ == '__main__':
    unittest.main()
