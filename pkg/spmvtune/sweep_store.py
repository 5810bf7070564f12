"""SQLite checkpoint store that makes sweeps restartable."""

import json
import logging
import os
import sqlite3
import threading
from typing import List

from .dataset import ConfigPoint, ConfigSpace, MeasurementRecord
from .features import SparsityFeatures
from .time_utils import utc_timestamp


def record_to_payload(record: MeasurementRecord) -> str:
    return json.dumps({
        "matrix_id": record.matrix_id,
        "features": record.features.to_dict(),
        "config": [[k, v] for k, v in record.config.items],
        "feasible": record.feasible,
        "repetitions": record.repetitions,
        "latency_seconds": record.latency_seconds,
        "mflops": record.mflops,
        "energy_joules": record.energy_joules,
        "avg_power_watts": record.avg_power_watts,
        "energy_efficiency": record.energy_efficiency,
        "extra": record.extra,
    }, sort_keys=True)


def record_from_payload(payload: str) -> MeasurementRecord:
    data = json.loads(payload)
    return MeasurementRecord(
        matrix_id=data["matrix_id"],
        features=SparsityFeatures.from_mapping(data["features"]),
        config=ConfigPoint(tuple((k, v) for k, v in data["config"])),
        feasible=bool(data["feasible"]),
        repetitions=int(data["repetitions"]),
        latency_seconds=data["latency_seconds"],
        mflops=data["mflops"],
        energy_joules=data["energy_joules"],
        avg_power_watts=data["avg_power_watts"],
        energy_efficiency=data["energy_efficiency"],
        extra=data.get("extra", {}),
    )


class SweepStore:
    """Measured records keyed by (matrix_id, config key)."""

    def __init__(self, db_path: str = "sweep.db"):
        self.db_path = str(db_path)
        self.logger = logging.getLogger(__name__)
        self._lock = threading.Lock()
        self._init_database()

    def _init_database(self):
        try:
            db_dir = os.path.dirname(self.db_path)
            if db_dir:
                os.makedirs(db_dir, exist_ok=True)

            with sqlite3.connect(self.db_path) as conn:
                conn.execute("""
                    CREATE TABLE IF NOT EXISTS measurements (
                        matrix_id TEXT NOT NULL,
                        config_key TEXT NOT NULL,
                        payload TEXT NOT NULL,
                        created_at TEXT NOT NULL,
                        PRIMARY KEY (matrix_id, config_key)
                    )
                """)
                conn.execute("CREATE INDEX IF NOT EXISTS idx_measurements_created ON measurements(created_at)")
                conn.commit()
                self.logger.debug("Sweep store initialized at %s", self.db_path)

        except sqlite3.Error as e:
            self.logger.error("Error initializing sweep store: %s", e)
            raise

    def has(self, matrix_id: str, point: ConfigPoint) -> bool:
        try:
            with self._lock:
                with sqlite3.connect(self.db_path) as conn:
                    cursor = conn.execute(
                        "SELECT 1 FROM measurements WHERE matrix_id = ? AND config_key = ?",
                        (matrix_id, point.key))
                    return cursor.fetchone() is not None
        except sqlite3.Error as e:
            self.logger.error("Error checking %s [%s]: %s", matrix_id, point, e)
            return False

    def put(self, record: MeasurementRecord) -> bool:
        """Insert ``record``; an existing (matrix, point) row is kept."""
        try:
            with self._lock:
                with sqlite3.connect(self.db_path) as conn:
                    cursor = conn.execute("""
                        INSERT OR IGNORE INTO measurements (matrix_id, config_key, payload, created_at)
                        VALUES (?, ?, ?, ?)
                    """, (record.matrix_id, record.config.key, record_to_payload(record), utc_timestamp()))
                    conn.commit()
                    return cursor.rowcount == 1
        except sqlite3.Error as e:
            self.logger.error("Error storing %s [%s]: %s", record.matrix_id, record.config, e)
            raise

    def load_records(self, space: ConfigSpace = None) -> List[MeasurementRecord]:
        """All stored records in insertion order, optionally only those in ``space``."""
        try:
            with self._lock:
                with sqlite3.connect(self.db_path) as conn:
                    rows = conn.execute(
                        "SELECT payload FROM measurements ORDER BY rowid").fetchall()
        except sqlite3.Error as e:
            self.logger.error("Error loading sweep records: %s", e)
            raise
        records = [record_from_payload(payload) for (payload,) in rows]
        if space is not None:
            records = [r for r in records if space.contains(r.config)]
        return records

    def count(self) -> int:
        try:
            with self._lock:
                with sqlite3.connect(self.db_path) as conn:
                    return int(conn.execute("SELECT COUNT(*) FROM measurements").fetchone()[0])
        except sqlite3.Error as e:
            self.logger.error("Error counting sweep records: %s", e)
            return 0

    def clear(self):
        try:
            with self._lock:
                with sqlite3.connect(self.db_path) as conn:
                    conn.execute("DELETE FROM measurements")
                    conn.commit()
            self.logger.info("Cleared sweep store %s", self.db_path)
        except sqlite3.Error as e:
            self.logger.error("Error clearing sweep store: %s", e)
            raise
