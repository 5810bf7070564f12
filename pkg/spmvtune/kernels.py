"""SpMV kernels for every storage format plus the dense oracle.

Each kernel walks the stored slots of a row in storage order and accumulates
into ``y`` one slot position at a time, vectorised across the rows of a chunk.
Per-row summation order is therefore fixed by the layout and results are
bitwise identical for every :class:`ExecConfig`.
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from .errors import DimensionMismatchError
from .formats import BellMatrix, CsrMatrix, EllMatrix, FormatMatrix, SellMatrix, chunk_units
from .matrix_io import DenseMatrix

logger = logging.getLogger(__name__)

DEFAULT_MIN_TOTAL_SECONDS = 0.2
DEFAULT_MAX_REPS = 200000
DEFAULT_WARMUP = 3

_pools: Dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()


@dataclass(frozen=True)
class ExecConfig:
    """CPU execution parameters: worker threads and rows handed out per chunk."""

    worker_count: int = 1
    rows_per_chunk: int = 512

    def __post_init__(self):
        errors = []
        if not isinstance(self.worker_count, (int, np.integer)) or self.worker_count < 1:
            errors.append(f"worker_count must be a positive integer, got {self.worker_count!r}")
        if not isinstance(self.rows_per_chunk, (int, np.integer)) or self.rows_per_chunk < 1:
            errors.append(f"rows_per_chunk must be a positive integer, got {self.rows_per_chunk!r}")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass(frozen=True)
class KernelTiming:
    mean_seconds: float
    repetitions: int
    total_seconds: float


def _pool(worker_count: int) -> ThreadPoolExecutor:
    with _pools_lock:
        pool = _pools.get(worker_count)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=worker_count,
                                      thread_name_prefix=f"spmv-{worker_count}")
            _pools[worker_count] = pool
        return pool


def _chunks(n_units: int, units_per_chunk: int) -> List[Tuple[int, int]]:
    return [(start, min(start + units_per_chunk, n_units))
            for start in range(0, n_units, units_per_chunk)]


def _run_group(work: Callable[[int, int], None], group: List[Tuple[int, int]]):
    for start, stop in group:
        work(start, stop)


def _run_partitioned(work: Callable[[int, int], None], n_units: int,
                     units_per_chunk: int, cfg: ExecConfig):
    """Static round-robin of chunks over workers; each chunk writes a disjoint range."""
    chunks = _chunks(n_units, units_per_chunk)
    if cfg.worker_count == 1 or len(chunks) <= 1:
        _run_group(work, chunks)
        return
    groups = [chunks[w::cfg.worker_count] for w in range(cfg.worker_count)]
    pool = _pool(cfg.worker_count)
    futures = [pool.submit(_run_group, work, group) for group in groups if group]
    for future in futures:
        future.result()


def _check_vector(n_rows: int, n_cols: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != n_cols:
        raise DimensionMismatchError(
            f"vector of shape {x.shape} does not match a {n_rows}x{n_cols} matrix")
    return x


def _accumulate_rows(y: np.ndarray, base: np.ndarray, widths: np.ndarray,
                     col_idx: np.ndarray, values: np.ndarray, x: np.ndarray):
    """y[i] += values[base[i] + k] * x[col_idx[base[i] + k]] for k < widths[i], k ascending."""
    for k in range(int(widths.max(initial=0))):
        live = np.nonzero(widths > k)[0]
        slot = base[live] + k
        y[live] += values[slot] * x[col_idx[slot]]


def spmv_csr(a: CsrMatrix, x, cfg: ExecConfig = ExecConfig()) -> np.ndarray:
    x = _check_vector(a.n_rows, a.n_cols, x)
    y = np.zeros(a.n_rows, dtype=np.float64)

    def work(start: int, stop: int):
        base = a.row_ptr[start:stop]
        widths = a.row_ptr[start + 1:stop + 1] - base
        _accumulate_rows(y[start:stop], base, widths, a.col_idx, a.values, x)

    _run_partitioned(work, a.n_rows, cfg.rows_per_chunk, cfg)
    return y


def spmv_ell(a: EllMatrix, x, cfg: ExecConfig = ExecConfig()) -> np.ndarray:
    x = _check_vector(a.n_rows, a.n_cols, x)
    y = np.zeros(a.n_rows, dtype=np.float64)

    def work(start: int, stop: int):
        out = y[start:stop]
        # padding slots read x[0] and add 0.0
        for k in range(a.max_nnz):
            out += a.values[start:stop, k] * x[a.col_idx[start:stop, k]]

    _run_partitioned(work, a.n_rows, cfg.rows_per_chunk, cfg)
    return y


def spmv_bell(a: BellMatrix, x, cfg: ExecConfig = ExecConfig()) -> np.ndarray:
    x = _check_vector(a.n_rows, a.n_cols, x)
    bh, bw = a.block_h, a.block_w
    x_blocks = np.zeros(max(a.n_block_cols, 1) * bw, dtype=np.float64)
    x_blocks[:a.n_cols] = x
    x_blocks = x_blocks.reshape(-1, bw)
    y_blocks = np.zeros((a.n_block_rows, bh), dtype=np.float64)

    def work(start: int, stop: int):
        out = y_blocks[start:stop]
        for k in range(a.max_blocks):
            xs = x_blocks[a.block_col_idx[start:stop, k]]  # (rows, bw)
            block = a.data[start:stop, k]                  # (rows, bh, bw)
            for j in range(bw):
                out += block[:, :, j] * xs[:, j][:, None]

    _run_partitioned(work, a.n_block_rows, chunk_units(a, cfg.rows_per_chunk), cfg)
    return y_blocks.reshape(-1)[:a.n_rows].copy()


def spmv_sell(a: SellMatrix, x, cfg: ExecConfig = ExecConfig()) -> np.ndarray:
    x = _check_vector(a.n_rows, a.n_cols, x)
    y = np.zeros(a.n_rows, dtype=np.float64)
    base_all, width_all, h = a.row_base, a.row_width, a.slice_height

    def work(start: int, stop: int):
        r0, r1 = start * h, min(stop * h, a.n_rows)
        _accumulate_rows(y[r0:r1], base_all[r0:r1], width_all[r0:r1],
                         a.col_idx, a.values, x)

    _run_partitioned(work, a.n_slices, chunk_units(a, cfg.rows_per_chunk), cfg)
    return y


def spmv_dense(a: DenseMatrix, x) -> np.ndarray:
    """Oracle product: every row accumulates its columns in ascending order."""
    x = _check_vector(a.n_rows, a.n_cols, x)
    y = np.zeros(a.n_rows, dtype=np.float64)
    for c in range(a.n_cols):
        y += a.values[:, c] * x[c]
    return y


_KERNELS = {
    CsrMatrix: spmv_csr,
    EllMatrix: spmv_ell,
    BellMatrix: spmv_bell,
    SellMatrix: spmv_sell,
}


def spmv(a: FormatMatrix, x, cfg: ExecConfig = ExecConfig()) -> np.ndarray:
    """Dispatch to the kernel of ``a``'s format."""
    if isinstance(a, DenseMatrix):
        return spmv_dense(a, x)
    try:
        kernel = _KERNELS[type(a)]
    except KeyError:
        raise TypeError(f"No SpMV kernel for {type(a).__name__}") from None
    return kernel(a, x, cfg)


def time_kernel(kernel: Callable[[], object],
                min_total: float = DEFAULT_MIN_TOTAL_SECONDS,
                max_reps: int = DEFAULT_MAX_REPS,
                warmup: int = DEFAULT_WARMUP,
                clock: Callable[[], float] = time.perf_counter) -> KernelTiming:
    """Repeat ``kernel`` until ``min_total`` seconds are accumulated or ``max_reps`` runs.

    ``warmup`` untimed runs come first. Only one kernel should be timed at a
    time per process.
    """
    if min_total <= 0:
        raise ValueError(f"min_total must be positive, got {min_total}")
    if max_reps < 1:
        raise ValueError(f"max_reps must be at least 1, got {max_reps}")

    for _ in range(warmup):
        kernel()

    total = 0.0
    reps = 0
    while reps < max_reps:
        start = clock()
        kernel()
        total += clock() - start
        reps += 1
        if total >= min_total:
            break

    return KernelTiming(mean_seconds=total / reps, repetitions=reps, total_seconds=total)


def mflops(a, timing: KernelTiming) -> float:
    """Useful-work rate, counting 2 flops per stored nonzero (padding excluded).

    ``a`` is any matrix with an ``nnz`` attribute, or the nonzero count itself.
    """
    nnz = a if isinstance(a, (int, np.integer)) else a.nnz
    if timing.mean_seconds <= 0:
        raise ValueError(f"mean_seconds must be positive, got {timing.mean_seconds}")
    return 2.0 * nnz / (timing.mean_seconds * 1e6)
