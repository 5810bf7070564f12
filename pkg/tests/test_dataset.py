import unittest
import tempfile
import shutil
import sys
from pathlib import Path
import numpy as np
sys.path.insert(0, str(Path(__file__).parent.parent))
from spmvtune.errors import DatasetSchemaError, DuplicateRecordError, InsufficientDataError
from spmvtune.features import FEATURE_NAMES, features_from_row_lengths
from spmvtune.dataset import (ConfigDimension, ConfigPoint, ConfigSpace, MachineFingerprint,
                              MeasurementRecord, SweepDataset, export_csv, import_csv,
                              label_dataset, regression_dataset, resolve_objective,
                              select_winners, summarize_power_trace)

SPACE = ConfigSpace((ConfigDimension("format", ("csr", "ell")),
                     ConfigDimension("workers", (1, 2))))
FINGERPRINT = MachineFingerprint("bench-host", 4, "2026-01-01T00:00:00Z", {"note": "test"})


def features(seed):
    return features_from_row_lengths(np.random.default_rng(seed).integers(0, 9, 20))


def record(matrix_id, fmt, workers, latency, seed=0, **kwargs):
    return MeasurementRecord(matrix_id, features(seed), ConfigPoint.from_mapping(
        {"format": fmt, "workers": workers}), latency_seconds=latency, repetitions=5, **kwargs)


def random_dataset(rng, n_matrices=6):
    records = []
    for i in range(n_matrices):
        for point in SPACE.points():
            latency = float(rng.uniform(1e-4, 1e-2))
            records.append(MeasurementRecord(f"m{i}", features(i), point, latency_seconds=latency,
                                             repetitions=3, mflops=1e-4 / latency))
    return SweepDataset(SPACE, records, FINGERPRINT)

class TestConfigSpace(unittest.TestCase):
    """Test configuration dimensions and points."""
    def test_points_enumerate_grid(self):
        points = SPACE.points()
        self.assertEqual(len(points), len(SPACE))
        self.assertEqual(points[0].as_dict(), {"format": "csr", "workers": 1})
        self.assertEqual(points[-1].key, "format=ell;workers=2")
    def test_invalid_dimensions(self):
        with self.assertRaises(ValueError):
            ConfigDimension("format", ())
        with self.assertRaises(ValueError):
            ConfigDimension("format", ("csr", "csr"))
        with self.assertRaises(ValueError):
            ConfigSpace((ConfigDimension("nnz", (1,)),))
        with self.assertRaises(ValueError):
            ConfigSpace(())
    def test_check_and_restrict(self):
        with self.assertRaises(DatasetSchemaError):
            SPACE.check(ConfigPoint.from_mapping({"format": "sell", "workers": 1}))
        pinned = SPACE.restrict(format="csr")
        self.assertEqual(len(pinned), 2)
        self.assertTrue(pinned.contains(ConfigPoint.from_mapping({"format": "csr", "workers": 2})))
        self.assertFalse(pinned.contains(ConfigPoint.from_mapping({"format": "ell", "workers": 2})))
    def test_encode(self):
        point = ConfigPoint.from_mapping({"format": "ell", "workers": 2})
        self.assertEqual(SPACE.encode(point).tolist(), [1.0, 2.0])
    def test_dict_forms(self):
        self.assertEqual(ConfigSpace.from_dict(SPACE.to_dict()), SPACE)
        self.assertEqual(ConfigSpace.from_dict({"format": ["csr", "ell"], "workers": [1, 2]}), SPACE)
    def test_resolve_objective(self):
        self.assertEqual(resolve_objective("latency"), ("latency_seconds", "min"))
        self.assertEqual(resolve_objective("efficiency"), ("energy_efficiency", "max"))
        self.assertEqual(resolve_objective("cache_misses"), ("cache_misses", "min"))
        with self.assertRaises(ValueError):
            resolve_objective("mflops", "up")

class TestMeasurementRecord(unittest.TestCase):
    """Test record validation."""
    def test_efficiency_is_derived(self):
        r = record("m", "csr", 1, 1e-3, mflops=100.0, avg_power_watts=50.0)
        self.assertEqual(r.energy_efficiency, 2.0)
    def test_efficiency_must_agree(self):
        with self.assertRaises(DatasetSchemaError):
            record("m", "csr", 1, 1e-3, mflops=100.0, avg_power_watts=50.0, energy_efficiency=3.0)
        with self.assertRaises(DatasetSchemaError):
            record("m", "csr", 1, 1e-3, energy_efficiency=3.0)
    def test_feasible_needs_latency(self):
        with self.assertRaises(DatasetSchemaError):
            record("m", "csr", 1, None)
        with self.assertRaises(DatasetSchemaError):
            record("m", "csr", 1, 0.0)
        self.assertFalse(record("m", "csr", 1, None, feasible=False).feasible)
    def test_duplicates_rejected(self):
        ds = SweepDataset(SPACE, [record("m", "csr", 1, 1e-3)], FINGERPRINT)
        with self.assertRaises(DuplicateRecordError):
            ds.add(record("m", "csr", 1, 2e-3))
        self.assertIn(("m", "format=csr;workers=1"), ds)

class TestCsv(unittest.TestCase):
    """Test CSV export and import."""
    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())
    def tearDown(self):
        shutil.rmtree(self.temp_dir)
    def test_roundtrip(self):
        ds = random_dataset(np.random.default_rng(0))
        ds.add(record("m9", "ell", 2, None, feasible=False))
        path = self.temp_dir / "sweep.csv"
        export_csv(ds, path)
        loaded = import_csv(path)
        self.assertEqual(loaded.space, SPACE)
        self.assertEqual(loaded.fingerprint, FINGERPRINT)
        self.assertEqual(loaded.records, ds.records)
    def test_header_only(self):
        path = self.temp_dir / "empty.csv"
        export_csv(SweepDataset(SPACE, [], FINGERPRINT), path)
        loaded = import_csv(path)
        self.assertEqual(len(loaded), 0)
        self.assertEqual(loaded.space, SPACE)
        path.with_suffix(".json").unlink()
        with self.assertRaises(DatasetSchemaError):
            import_csv(path)
    def test_without_sidecar(self):
        path = self.temp_dir / "sweep.csv"
        export_csv(random_dataset(np.random.default_rng(1), 2), path)
        path.with_suffix(".json").unlink()
        with self.assertLogs("spmvtune.dataset", level="WARNING"):
            loaded = import_csv(path)
        self.assertEqual(loaded.space, SPACE)
        self.assertEqual(len(loaded), 8)
    def test_extra_objective_column(self):
        header = ",".join(["matrix_id", *FEATURE_NAMES, "format", "feasible", "repetitions",
                           "latency_seconds", "mflops", "energy_joules", "avg_power_watts",
                           "energy_efficiency", "cache_misses"])
        feats = "10,20,2.0,0.0,1.0,2.0,2,0.0"
        path = self.temp_dir / "external.csv"
        path.write_text(header + "\n"
                        f"a,{feats},csr,true,3,0.001,,,,,50\n"
                        f"a,{feats},ell,true,3,0.002,,,,,20\n")
        ds = import_csv(path)
        self.assertEqual(ds.extra_columns, ("cache_misses",))
        self.assertEqual(select_winners(ds, "cache_misses")["a"].config["format"], "ell")
        self.assertEqual(select_winners(ds, "latency")["a"].config["format"], "csr")
    def test_bad_row_reports_line(self):
        path = self.temp_dir / "sweep.csv"
        export_csv(random_dataset(np.random.default_rng(2), 1), path)
        lines = path.read_text().splitlines()
        cells = lines[2].split(",")
        cells[FEATURE_NAMES.index("avg_nnz") + 1] = "lots"
        lines[2] = ",".join(cells)
        path.write_text("\n".join(lines) + "\n")
        with self.assertRaises(DatasetSchemaError) as ctx:
            import_csv(path)
        self.assertIn("line 3", str(ctx.exception))
    def test_duplicate_rows(self):
        path = self.temp_dir / "sweep.csv"
        export_csv(random_dataset(np.random.default_rng(3), 1), path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines + [lines[1]]) + "\n")
        with self.assertRaises(DuplicateRecordError) as ctx:
            import_csv(path)
        self.assertIn(f"line {len(lines) + 1}", str(ctx.exception))
    def test_bad_header(self):
        path = self.temp_dir / "bad.csv"
        path.write_text("id,n\n1,2\n")
        with self.assertRaises(DatasetSchemaError):
            import_csv(path)
        with self.assertRaises(DatasetSchemaError):
            import_csv(self.temp_dir / "absent.csv")

class TestLabeling(unittest.TestCase):
    """Test per-dimension labels."""
    def test_labels_match_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            ds = random_dataset(rng)
            labeled = label_dataset(ds, "latency")
            for name in SPACE.names:
                expected = []
                for matrix_id in ds.matrix_ids():
                    rows = ds.records_for(matrix_id)
                    best = rows[int(np.argmin([r.latency_seconds for r in rows]))]
                    expected.append(str(best.config[name]))
                self.assertEqual(list(labeled[name].y), expected)
    def test_labels_come_from_one_winner(self):
        ds = random_dataset(np.random.default_rng(8))
        labeled = label_dataset(ds, "mflops")
        winners = select_winners(ds, "mflops")
        for i, matrix_id in enumerate(ds.matrix_ids()):
            point = {name: labeled[name].y[i] for name in SPACE.names}
            self.assertEqual(point, {k: str(v) for k, v in winners[matrix_id].config.items})
            self.assertEqual(labeled["format"].X[i].tolist(),
                             ds.features_for(matrix_id).as_vector().tolist())
    def test_ties_prefer_lower_latency(self):
        ds = SweepDataset(SPACE, [
            record("m", "csr", 1, 2e-3, mflops=10.0, avg_power_watts=5.0),
            record("m", "ell", 1, 1e-3, mflops=10.0, avg_power_watts=5.0)], FINGERPRINT)
        self.assertEqual(select_winners(ds, "efficiency")["m"].config["format"], "ell")
    def test_infeasible_records_never_win(self):
        ds = SweepDataset(SPACE, [record("m", "csr", 1, 5e-3),
                                  record("m", "ell", 1, None, feasible=False),
                                  record("z", "ell", 1, None, feasible=False)], FINGERPRINT)
        winners = select_winners(ds, "latency")
        self.assertEqual(list(winners), ["m"])
        with self.assertRaises(InsufficientDataError):
            label_dataset(SweepDataset(SPACE, [record("z", "ell", 1, None, feasible=False)],
                                       FINGERPRINT), "latency")
    def test_missing_objective(self):
        with self.assertRaises(DatasetSchemaError):
            select_winners(random_dataset(np.random.default_rng(0), 1), "cache_misses")
    def test_regression_dataset(self):
        ds = random_dataset(np.random.default_rng(9), 3)
        data = regression_dataset(ds)
        self.assertEqual(data.feature_names, FEATURE_NAMES + ("format", "workers"))
        self.assertEqual(data.n_rows, 12)
        self.assertEqual(len(set(data.groups)), 3)

class TestPowerTrace(unittest.TestCase):
    """Test power trace summaries."""
    def test_average_and_energy(self):
        self.assertEqual(summarize_power_trace([0.0, 1.0, 2.0], [10.0, 20.0, 30.0]), (20.0, 40.0))
    def test_idle_samples_dropped(self):
        self.assertEqual(summarize_power_trace([0.0, 1.0, 2.0], [10.0, 20.0, 30.0], idle_watts=10.0),
                         (25.0, 25.0))
        with self.assertRaises(InsufficientDataError):
            summarize_power_trace([0.0], [5.0], idle_watts=10.0)
    def test_invalid_traces(self):
        with self.assertRaises(ValueError):
            summarize_power_trace([0.0, 1.0], [1.0])
        with self.assertRaises(ValueError):
            summarize_power_trace([1.0, 0.0], [1.0, 1.0])

if __name__ == '__main__':
    unittest.main()
