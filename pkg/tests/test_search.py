import unittest
import sys
from pathlib import Path
import numpy as np
sys.path.insert(0, str(Path(__file__).parent.parent))
from spmvtune.features import FEATURE_NAMES
from spmvtune.learners import CLASSIFICATION, REGRESSION, LabeledDataset
from spmvtune.search import (TREE_SPACE, IntRange, default_space, random_search,
                             sample_point)


def threshold_dataset(n=150, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 100.0, (n, len(FEATURE_NAMES)))
    column = FEATURE_NAMES.index("ell_ratio")
    X[:, column] = np.where(rng.random(n) < 0.5, rng.uniform(0.0, 0.4, n), rng.uniform(0.6, 1.0, n))
    labels = np.where(X[:, column] > 0.5, "ell", "csr")
    return LabeledDataset(FEATURE_NAMES, X, labels, CLASSIFICATION)

class TestSpace(unittest.TestCase):
    """Test search spaces and sampling."""
    def test_int_range(self):
        rng = np.random.default_rng(0)
        values = {IntRange(2, 4).sample(rng) for _ in range(200)}
        self.assertEqual(values, {2, 3, 4})
        with self.assertRaises(ValueError):
            IntRange(5, 1)
    def test_sample_point_stays_in_space(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            point = sample_point(TREE_SPACE, rng)
            self.assertEqual(sorted(point), sorted(TREE_SPACE))
            self.assertIn(point["criterion"], TREE_SPACE["criterion"])
            self.assertTrue(1 <= point["max_depth"] <= 20)
            self.assertTrue(1 <= point["min_samples_leaf"] <= 5)
    def test_empty_dimension(self):
        with self.assertRaises(ValueError):
            sample_point({"metric": []}, np.random.default_rng(0))
    def test_regression_drops_criterion(self):
        self.assertNotIn("criterion", default_space("decision_tree", REGRESSION))
        self.assertIn("criterion", default_space("decision_tree", CLASSIFICATION))
        self.assertIn("n_neighbors", default_space("knn", REGRESSION))

class TestRandomSearch(unittest.TestCase):
    """Test seeded random search."""
    def test_one_point_space(self):
        space = {"criterion": ["gini"], "splitter": ["best"], "max_depth": IntRange(3, 3),
                 "min_samples_leaf": IntRange(1, 1)}
        result = random_search(space, threshold_dataset(), trials=4, seed=2)
        self.assertEqual(result.params, {"criterion": "gini", "max_depth": 3,
                                         "min_samples_leaf": 1, "splitter": "best"})
        self.assertEqual(result.best_index, 0)
        self.assertEqual(len(result.trials), 4)
    def test_same_seed_same_log(self):
        data = threshold_dataset()
        a = random_search(TREE_SPACE, data, trials=6, seed=11)
        b = random_search(TREE_SPACE, data, trials=6, seed=11)
        self.assertEqual([t.to_dict() for t in a.trials], [t.to_dict() for t in b.trials])
        self.assertEqual(a.params, b.params)
    def test_longer_search_extends_shorter(self):
        data = threshold_dataset()
        short = random_search(TREE_SPACE, data, trials=3, seed=5)
        long = random_search(TREE_SPACE, data, trials=8, seed=5)
        self.assertEqual([t.to_dict() for t in short.trials],
                         [t.to_dict() for t in long.trials[:3]])
        self.assertGreaterEqual(long.report.score, short.report.score)
    def test_finds_threshold_rule(self):
        result = random_search(TREE_SPACE, threshold_dataset(), trials=20, seed=0)
        self.assertEqual(result.report.accuracy, 1.0)
        self.assertEqual(result.report.score, max(t.score for t in result.trials))
    def test_regression_search(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(1.0, 10.0, (60, 2))
        data = LabeledDataset(("a", "b"), X, X[:, 0] + X[:, 1], REGRESSION)
        result = random_search(default_space("knn", REGRESSION), data, trials=5, learner="knn")
        self.assertIsNotNone(result.report.mse)
        self.assertEqual(result.report.score, max(t.score for t in result.trials))
    def test_explicit_holdout(self):
        data = threshold_dataset(seed=1)
        holdout = threshold_dataset(40, seed=2)
        result = random_search(TREE_SPACE, data, trials=3, holdout=holdout)
        self.assertEqual(result.report.n, 40)
    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            random_search({}, threshold_dataset())
        with self.assertRaises(ValueError):
            random_search(TREE_SPACE, threshold_dataset(), trials=0)

if __name__ == '__main__':
    unittest.main()
