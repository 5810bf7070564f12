"""The eight sparsity features every predictor consumes."""

import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import SpmvTuneError
from .kernels import DEFAULT_MAX_REPS, DEFAULT_MIN_TOTAL_SECONDS, DEFAULT_WARMUP, time_kernel
from .matrix_io import TripletMatrix

logger = logging.getLogger(__name__)

# CSV column order
FEATURE_NAMES = ("n", "nnz", "avg_nnz", "var_nnz", "ell_ratio", "median", "mode", "std_nnz")
INTEGER_FEATURES = ("n", "nnz", "mode")


@dataclass(frozen=True)
class SparsityFeatures:
    """Row-length statistics of one matrix.

    Variance and standard deviation are population statistics. The median of
    an even row count is the mean of the two middle values. Ties for the mode
    go to the smallest row length. A matrix without nonzeros has ell_ratio 1.
    """

    n: int
    nnz: int
    avg_nnz: float
    var_nnz: float
    ell_ratio: float
    median: float
    mode: int
    std_nnz: float

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SparsityFeatures":
        values = {}
        for name in FEATURE_NAMES:
            raw = data[name]
            values[name] = int(float(raw)) if name in INTEGER_FEATURES else float(raw)
        return cls(**values)


def features_from_row_lengths(row_lengths: np.ndarray) -> SparsityFeatures:
    row_lengths = np.asarray(row_lengths, dtype=np.int64)
    n = int(row_lengths.size)
    if n < 1:
        raise SpmvTuneError("cannot extract features from a matrix with zero rows")

    histogram = np.bincount(row_lengths)
    lengths = np.arange(histogram.size, dtype=np.float64)
    nnz = int(np.dot(histogram, np.arange(histogram.size)))
    max_nnz = histogram.size - 1

    avg = nnz / n
    var = float(np.dot(histogram, (lengths - avg) ** 2)) / n
    cumulative = np.cumsum(histogram)
    lower = int(np.searchsorted(cumulative, (n - 1) // 2, side="right"))
    upper = int(np.searchsorted(cumulative, n // 2, side="right"))

    return SparsityFeatures(
        n=n,
        nnz=nnz,
        avg_nnz=avg,
        var_nnz=var,
        ell_ratio=nnz / (n * max_nnz) if max_nnz > 0 else 1.0,
        median=(lower + upper) / 2.0,
        mode=int(np.argmax(histogram)),
        std_nnz=math.sqrt(var),
    )


def extract_features(m: TripletMatrix) -> SparsityFeatures:
    """Compute the features from the row-length histogram of ``m``."""
    return features_from_row_lengths(m.row_lengths())


def time_feature_extraction(m: TripletMatrix,
                            min_total: float = DEFAULT_MIN_TOTAL_SECONDS,
                            max_reps: int = DEFAULT_MAX_REPS,
                            warmup: int = DEFAULT_WARMUP,
                            clock: Callable[[], float] = time.perf_counter) -> float:
    """Mean seconds spent in :func:`extract_features` for ``m``."""
    if m.n_rows < 1:
        raise SpmvTuneError("cannot extract features from a matrix with zero rows")
    timing = time_kernel(lambda: extract_features(m), min_total, max_reps, warmup, clock)
    logger.debug("Feature extraction for %s: %.3e s over %d runs", m, timing.mean_seconds,
                 timing.repetitions)
    return timing.mean_seconds
