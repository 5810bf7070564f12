"""Benchmark sweeps over (matrix x configuration) grids and overhead measurement."""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .dataset import ConfigPoint, ConfigSpace, MachineFingerprint, MeasurementRecord, SweepDataset
from .errors import DatasetSchemaError, MemoryGuardError, SpmvTuneError
from .features import FEATURE_NAMES, SparsityFeatures, extract_features
from .formats import (DEFAULT_BLOCK, DEFAULT_SLICE_HEIGHT, DEFAULT_SLOT_GUARD, FORMAT_NAMES,
                      FormatMatrix, convert)
from .kernels import (DEFAULT_MAX_REPS, DEFAULT_MIN_TOTAL_SECONDS, DEFAULT_WARMUP, ExecConfig,
                      KernelTiming, mflops, spmv, spmv_dense, time_kernel)
from .logging_config import get_logger, log_performance_metrics
from .matrix_io import DEFAULT_DENSE_GUARD, TripletMatrix, read_matrix_market, to_dense
from .sweep_store import SweepStore
from .time_utils import format_duration

logger = logging.getLogger(__name__)

EXECUTABLE_DIMENSIONS = ("format", "worker_count", "rows_per_chunk")
VERIFY_TOLERANCE = 1e-12

PathLike = Union[str, Path]
Timer = Callable[[str, ConfigPoint, Callable[[], object]], KernelTiming]


@dataclass(frozen=True)
class TimingParams:
    """Warmup runs, then repeat until ``min_total_seconds`` or ``max_reps``."""

    min_total_seconds: float = DEFAULT_MIN_TOTAL_SECONDS
    max_reps: int = DEFAULT_MAX_REPS
    warmup: int = DEFAULT_WARMUP

    def __post_init__(self):
        if self.min_total_seconds <= 0:
            raise ValueError("min_total_seconds must be positive")
        if self.max_reps < 1:
            raise ValueError("max_reps must be at least 1")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")


@dataclass(frozen=True)
class FormatParams:
    block_h: int = DEFAULT_BLOCK[0]
    block_w: int = DEFAULT_BLOCK[1]
    slice_height: int = DEFAULT_SLICE_HEIGHT
    slot_guard: int = DEFAULT_SLOT_GUARD
    dense_guard: int = DEFAULT_DENSE_GUARD

    def convert(self, m: TripletMatrix, fmt: str) -> FormatMatrix:
        return convert(m, fmt, block_h=self.block_h, block_w=self.block_w,
                       slice_height=self.slice_height, guard=self.slot_guard)


@dataclass(frozen=True)
class OverheadObservation:
    """Run-time optimisation costs measured on one matrix, in seconds.

    ``c_latency`` maps each target format to its conversion time, or None
    when the conversion is infeasible.
    """

    matrix_id: str
    nnz: int
    features: SparsityFeatures
    f_latency: float
    c_latency: Dict[str, Optional[float]] = field(default_factory=dict)
    o_latency: float = 0.0
    p_latency: float = 0.0

    def __post_init__(self):
        values = [self.f_latency, self.o_latency, self.p_latency]
        values += [v for v in self.c_latency.values() if v is not None]
        if any(v < 0 for v in values):
            raise ValueError(f"overhead components of {self.matrix_id} must be non-negative")

    def total(self, fmt: str) -> Optional[float]:
        c = self.c_latency.get(fmt)
        if c is None:
            return None
        return self.f_latency + c + self.o_latency + self.p_latency


def matrix_id_for(path: PathLike) -> str:
    return Path(path).stem


def executable_point(point: ConfigPoint) -> tuple:
    """(format, ExecConfig) for a point over the executable dimensions."""
    unknown = [name for name in point.names if name not in EXECUTABLE_DIMENSIONS]
    if unknown:
        raise DatasetSchemaError(
            f"dimensions {unknown} cannot be executed here; import their measurements instead")
    fmt = point.get("format", "csr")
    if fmt not in FORMAT_NAMES:
        raise DatasetSchemaError(f"unknown format '{fmt}' in point {point}")
    cfg = ExecConfig(worker_count=int(point.get("worker_count", 1)),
                     rows_per_chunk=int(point.get("rows_per_chunk", 512)))
    return fmt, cfg


def input_vector(n_cols: int) -> np.ndarray:
    return np.random.default_rng(0).uniform(-1.0, 1.0, n_cols)


def _verify(m: TripletMatrix, a: FormatMatrix, x: np.ndarray, cfg: ExecConfig,
            dense_guard: int, reference: Dict[str, np.ndarray]):
    if "y" not in reference:
        try:
            reference["y"] = spmv_dense(to_dense(m, dense_guard), x)
        except MemoryGuardError:
            reference["y"] = spmv(convert(m, "csr"), x)
    expected = reference["y"]
    got = spmv(a, x, cfg)
    scale = np.maximum(np.abs(expected), 1.0)
    error = float(np.max(np.abs(got - expected) / scale, initial=0.0))
    if error > VERIFY_TOLERANCE:
        raise SpmvTuneError(f"{a.name} kernel disagrees with the reference (relative error {error:.3e})")


def measure_point(m: TripletMatrix, a: FormatMatrix, x: np.ndarray, cfg: ExecConfig,
                  timing: TimingParams, clock: Callable[[], float] = time.perf_counter) -> KernelTiming:
    return time_kernel(lambda: spmv(a, x, cfg), timing.min_total_seconds, timing.max_reps,
                       timing.warmup, clock)


@log_performance_metrics
def run_sweep(paths: Sequence[PathLike], space: ConfigSpace,
              timing: TimingParams = TimingParams(),
              store: Optional[SweepStore] = None,
              format_params: FormatParams = FormatParams(),
              verify: bool = False,
              clock: Callable[[], float] = time.perf_counter,
              timer: Optional[Timer] = None,
              fingerprint: Optional[MachineFingerprint] = None) -> SweepDataset:
    """Benchmark every matrix at every point of ``space``.

    Points whose format conversion hits a memory guard are recorded as
    infeasible. With a ``store``, points already stored are skipped and every
    new record is written as soon as it is measured. ``timer`` replaces the
    kernel timing (it receives the matrix id, the point and the kernel).
    """
    if len(space) == 0:
        raise ValueError("configuration space is empty")
    points = space.points()
    for point in points:
        executable_point(point)

    records: List[MeasurementRecord] = []
    matrix_ids = []
    for path in paths:
        m = read_matrix_market(path)
        matrix_id = matrix_id_for(path)
        matrix_ids.append(matrix_id)
        features = extract_features(m)
        x = input_vector(m.n_cols)
        converted: Dict[str, Optional[FormatMatrix]] = {}
        reference: Dict[str, np.ndarray] = {}
        tlog = get_logger(__name__, matrix=matrix_id)
        tlog.info("Sweeping %d points (n=%d, nnz=%d)", len(points), m.n_rows, m.nnz)

        for point in points:
            if store is not None and store.has(matrix_id, point):
                tlog.debug("Skipping stored point %s", point)
                continue
            fmt, cfg = executable_point(point)
            if fmt not in converted:
                try:
                    converted[fmt] = format_params.convert(m, fmt)
                except MemoryGuardError as e:
                    tlog.warning("Format %s infeasible: %s", fmt, e)
                    converted[fmt] = None
            a = converted[fmt]

            if a is None:
                record = MeasurementRecord(matrix_id, features, point, feasible=False)
            else:
                if verify:
                    _verify(m, a, x, cfg, format_params.dense_guard, reference)
                if timer is not None:
                    result = timer(matrix_id, point, lambda: spmv(a, x, cfg))
                else:
                    result = measure_point(m, a, x, cfg, timing, clock)
                record = MeasurementRecord(matrix_id, features, point, feasible=True,
                                           repetitions=result.repetitions,
                                           latency_seconds=result.mean_seconds,
                                           mflops=mflops(m.nnz, result))
                tlog.debug("%s: %s over %d runs", point, format_duration(result.mean_seconds),
                           result.repetitions)
            if store is not None:
                store.put(record)
            records.append(record)

    if store is not None:
        wanted = set(matrix_ids)
        records = [r for r in store.load_records(space) if r.matrix_id in wanted]
    ds = SweepDataset(space, records, fingerprint or MachineFingerprint.current())
    logger.info("Sweep finished: %d matrices, %d records", len(matrix_ids), len(ds))
    return ds


def _time_callable(fn: Callable[[], object], timing: TimingParams,
                   clock: Callable[[], float]) -> float:
    return time_kernel(fn, timing.min_total_seconds, timing.max_reps, timing.warmup,
                       clock).mean_seconds


@log_performance_metrics
def measure_overheads(matrices: Iterable[Union[PathLike, TripletMatrix]],
                      formats: Sequence[str] = FORMAT_NAMES,
                      timing: TimingParams = TimingParams(),
                      format_params: FormatParams = FormatParams(),
                      format_predictor: Optional[Callable[[np.ndarray], object]] = None,
                      overhead_predictor: Optional[Callable[[np.ndarray], object]] = None,
                      clock: Callable[[], float] = time.perf_counter,
                      matrix_ids: Optional[Sequence[str]] = None) -> List[OverheadObservation]:
    """Time feature extraction, each conversion, and the prediction calls.

    ``format_predictor`` and ``overhead_predictor`` take a feature row; their
    mean call time becomes ``p_latency`` and ``o_latency``. Without them the
    component is 0.
    """
    observations = []
    for index, item in enumerate(matrices):
        if isinstance(item, TripletMatrix):
            m = item
            matrix_id = matrix_ids[index] if matrix_ids else f"matrix_{index}"
        else:
            m = read_matrix_market(item)
            matrix_id = matrix_ids[index] if matrix_ids else matrix_id_for(item)
        if m.n_rows < 1:
            raise SpmvTuneError(f"{matrix_id}: cannot measure overheads of a matrix with zero rows")

        features = extract_features(m)
        f_latency = _time_callable(lambda: extract_features(m), timing, clock)
        c_latency: Dict[str, Optional[float]] = {}
        for fmt in formats:
            try:
                format_params.convert(m, fmt)
            except MemoryGuardError as e:
                logger.warning("%s: conversion to %s infeasible: %s", matrix_id, fmt, e)
                c_latency[fmt] = None
                continue
            c_latency[fmt] = _time_callable(lambda: format_params.convert(m, fmt), timing, clock)

        row = features.as_vector()[None, :]
        p_latency = _time_callable(lambda: format_predictor(row), timing, clock) if format_predictor else 0.0
        o_latency = _time_callable(lambda: overhead_predictor(row), timing, clock) if overhead_predictor else 0.0

        observations.append(OverheadObservation(matrix_id, m.nnz, features, f_latency, c_latency,
                                                o_latency, p_latency))
        logger.debug("%s: f=%s, c=%s", matrix_id, format_duration(f_latency),
                     {fmt: format_duration(v) for fmt, v in c_latency.items()})
    return observations


def export_observations(observations: Sequence[OverheadObservation], path: PathLike):
    """CSV with the features, f/o/p latencies and one ``c_latency_<fmt>`` column per format."""
    formats = sorted({fmt for o in observations for fmt in o.c_latency})
    rows = []
    for o in observations:
        row = {"matrix_id": o.matrix_id, **o.features.to_dict(), "f_latency": o.f_latency,
               "o_latency": o.o_latency, "p_latency": o.p_latency}
        row.update({f"c_latency_{fmt}": o.c_latency.get(fmt) for fmt in formats})
        rows.append(row)
    columns = (["matrix_id", *FEATURE_NAMES, "f_latency", "o_latency", "p_latency"]
               + [f"c_latency_{fmt}" for fmt in formats])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)


def import_observations(path: PathLike) -> List[OverheadObservation]:
    try:
        frame = pd.read_csv(path, dtype={"matrix_id": str}, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetSchemaError(f"{path}: cannot read overhead observations: {e}") from e
    missing = [c for c in ("matrix_id", *FEATURE_NAMES, "f_latency", "o_latency", "p_latency")
               if c not in frame.columns]
    if missing:
        raise DatasetSchemaError(f"{path}: missing columns {missing}")
    formats = [c[len("c_latency_"):] for c in frame.columns if c.startswith("c_latency_")]
    observations = []
    for row in frame.to_dict(orient="records"):
        features = SparsityFeatures.from_mapping(row)
        c_latency = {fmt: None if pd.isna(row[f"c_latency_{fmt}"]) else float(row[f"c_latency_{fmt}"])
                     for fmt in formats}
        observations.append(OverheadObservation(str(row["matrix_id"]), features.nnz, features,
                                                float(row["f_latency"]), c_latency,
                                                float(row["o_latency"]), float(row["p_latency"])))
    return observations
