import unittest
import tempfile
import shutil
import importlib.util
import sys
from pathlib import Path
import numpy as np
import pytest
sys.path.insert(0, str(Path(__file__).parent.parent))
from spmvtune.autotune import (CONVERT, compile_time_optimize, predict_values, run_time_optimize,
                               train_overhead_model, train_pipeline)
from spmvtune.dataset import (ConfigDimension, ConfigPoint, ConfigSpace, MachineFingerprint,
                              MeasurementRecord, SweepDataset)
from spmvtune.features import extract_features
from spmvtune.formats import FORMAT_NAMES
from spmvtune.harness import TimingParams, measure_overheads, run_sweep
from spmvtune.matrix_io import read_matrix_market
from spmvtune.model_store import dumps, model_to_document
from spmvtune.report import GMEAN_LABEL, improvement_table
from spmvtune.synthetic import power_law_rows, uniform_rows, write_corpus

SPACE = ConfigSpace((ConfigDimension("format", FORMAT_NAMES),
                     ConfigDimension("worker_count", (1, 2, 4)),
                     ConfigDimension("rows_per_chunk", (64, 512))))
FINGERPRINT = MachineFingerprint("bench-host", 4, "2026-01-01T00:00:00Z")
FORMAT_FACTOR = {"csr": 1.0, "ell": 0.9, "bell": 1.2, "sell": 0.95}
SMALL_WORKERS = {1: 1.0, 2: 1.3, 4: 1.8}
LARGE_WORKERS = {1: 1.0, 2: 0.6, 4: 0.4}
SCRIPT = Path(__file__).parent.parent / "scripts" / "fetch_suitesparse.py"


def law_latency(features, point):
    """Known cost law: threads pay off on large matrices, ELL only on regular rows."""
    fmt = point["format"]
    factor = FORMAT_FACTOR[fmt]
    if fmt == "ell" and features.var_nnz > 0:
        factor = 3.0
    workers = LARGE_WORKERS if features.nnz > 1000 else SMALL_WORKERS
    chunk = 1.0 if point["rows_per_chunk"] == 64 else 1.02
    return features.nnz * 1e-6 * factor * workers[point["worker_count"]] * chunk


def law_corpus(count=25, seed=7):
    rng = np.random.default_rng(seed)
    matrices = {}
    for i in range(count):
        n = int(rng.integers(24, 41)) if i % 2 == 0 else int(rng.integers(800, 1001))
        m = uniform_rows(n, 4, rng) if (i // 2) % 2 == 0 else power_law_rows(n, 4.0, rng)
        matrices[f"m{i:02d}"] = m
    return matrices


def law_sweep(matrices):
    records = []
    for name, m in matrices.items():
        features = extract_features(m)
        for point in SPACE.points():
            records.append(MeasurementRecord(name, features, point, repetitions=5,
                                             latency_seconds=law_latency(features, point)))
    return SweepDataset(SPACE, records, FINGERPRINT)


def subset(ds, names):
    return SweepDataset(ds.space, [r for r in ds.records if r.matrix_id in names], ds.fingerprint)


def documents(pipeline):
    models = {**pipeline.classifiers, **pipeline.regressors}
    return {name: dumps(model_to_document(model)) for name, model in sorted(models.items())}

class TestInjectedTimingAccuracy(unittest.TestCase):
    """Test holdout recommendations against a known latency law."""
    @classmethod
    def setUpClass(cls):
        cls.matrices = law_corpus()
        cls.ds = law_sweep(cls.matrices)
        names = sorted(cls.matrices)
        cls.holdout = [m for i, m in enumerate(names) if i % 5 == 4]
        cls.training = subset(cls.ds, set(names) - set(cls.holdout))
        cls.pipeline = train_pipeline(cls.training, trials=20, seed=3)
    def test_recommendations_near_brute_force_best(self):
        close = 0
        for name in self.holdout:
            features = self.ds.features_for(name)
            values = predict_values(self.pipeline, features)
            self.assertEqual(values["format"], "csr")
            chosen = law_latency(features, ConfigPoint.from_mapping(values))
            csr_points = SPACE.restrict(format="csr").points()
            best = min(law_latency(features, p) for p in csr_points)
            worst = max(law_latency(features, p) for p in SPACE.points())
            self.assertLessEqual(chosen, worst)
            close += chosen <= 1.05 * best
        self.assertGreaterEqual(close / len(self.holdout), 0.8)
    def test_values_stay_in_alphabet(self):
        for name in self.holdout:
            values = predict_values(self.pipeline, self.ds.features_for(name))
            for dimension in SPACE.dimensions:
                self.assertIn(values[dimension.name], dimension.values)
    def test_identical_seeds_give_identical_models(self):
        again = train_pipeline(self.training, trials=20, seed=3)
        self.assertEqual(documents(again), documents(self.pipeline))
        self.assertEqual(again.manifest, self.pipeline.manifest)


@pytest.mark.slow
class TestSelfMeasuredWorkflow(unittest.TestCase):
    """Test sweep, training and both optimisation modes on real timings."""
    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())
    def tearDown(self):
        shutil.rmtree(self.temp_dir)
    def test_end_to_end(self):
        paths = write_corpus(self.temp_dir / "corpus", 15, seed=11, min_n=32, max_n=256)
        timing = TimingParams(min_total_seconds=0.002, max_reps=5, warmup=1)
        ds = run_sweep(paths, SPACE, timing=timing, verify=True)
        self.assertEqual(len(ds), 15 * len(SPACE.points()))
        self.assertTrue(all(r.latency_seconds > 0 for r in ds.records if r.feasible))

        names = ds.matrix_ids()
        holdout = names[-3:]
        pipeline = train_pipeline(subset(ds, set(names[:-3])), trials=5, seed=1)
        self.assertEqual(documents(pipeline),
                         documents(train_pipeline(subset(ds, set(names[:-3])), trials=5, seed=1)))

        chosen = {}
        for path in paths:
            if path.stem not in holdout:
                continue
            rec = compile_time_optimize(path, pipeline)
            self.assertEqual(rec.matrix_id, path.stem)
            self.assertEqual(rec.values["format"], "csr")
            point = rec.point()
            self.assertTrue(any(r.config == point for r in ds.records_for(path.stem)))
            chosen[path.stem] = point

        default = ConfigPoint.from_mapping({"format": "csr", "worker_count": 1, "rows_per_chunk": 64})
        table = improvement_table(ds, chosen, default)
        self.assertEqual(list(table["matrix_id"])[-1], GMEAN_LABEL)
        self.assertEqual(len(table), len(holdout) + 1)

        observations = measure_overheads(paths, timing=timing,
                                         matrix_ids=[p.stem for p in paths])
        overhead = train_overhead_model(observations, learner="decision_tree")
        for path in paths[:3]:
            m = read_matrix_market(path)
            decision = run_time_optimize(m, pipeline, overhead, expected_iterations=10 ** 6,
                                         matrix_id=path.stem)
            self.assertIn(decision.predicted_format, FORMAT_NAMES)
            if "infeasible" in decision.reason:
                self.assertNotEqual(decision.verdict, CONVERT)


@pytest.mark.network
class TestSuiteSparseDownload(unittest.TestCase):
    """Test features of a matrix fetched from the SuiteSparse collection."""
    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())
    def tearDown(self):
        shutil.rmtree(self.temp_dir)
    def test_shar_te2_b3(self):
        found = importlib.util.spec_from_file_location("fetch_suitesparse", SCRIPT)
        fetch = importlib.util.module_from_spec(found)
        found.loader.exec_module(fetch)
        try:
            path = fetch.fetch_matrix("DNVS", "shar_te2-b3", self.temp_dir)
        except OSError as e:
            self.skipTest(f"SuiteSparse unreachable: {e}")
        features = extract_features(read_matrix_market(path))
        self.assertEqual((features.n, features.nnz), (200200, 800800))
        self.assertEqual(features.avg_nnz, 4.0)
        self.assertEqual(features.ell_ratio, 1.0)

if __name__ == '__main__':
    unittest.main()
