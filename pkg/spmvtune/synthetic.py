"""Seeded synthetic matrix generators for desk-scale corpora."""

import logging
import math
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .matrix_io import TripletMatrix, write_matrix_market

logger = logging.getLogger(__name__)

GENERATORS = ("uniform", "powerlaw", "random", "banded", "blockdiag")


def _values(rng: np.random.Generator, count: int) -> np.ndarray:
    """Nonzero values in +-[0.5, 2.0)."""
    return rng.uniform(0.5, 2.0, count) * rng.choice((-1.0, 1.0), count)


def _spread_columns(rng: np.random.Generator, lengths: np.ndarray, n_cols: int):
    """Per-row distinct columns: a random start plus an even stride."""
    n_rows = lengths.size
    lengths = np.minimum(lengths, n_cols)
    rows = np.repeat(np.arange(n_rows, dtype=np.int64), lengths)
    if rows.size == 0:
        return rows, rows.copy()
    starts = rng.integers(0, n_cols, n_rows)
    strides = n_cols // np.maximum(lengths, 1)
    offsets = np.arange(rows.size) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    cols = (starts[rows] + strides[rows] * offsets) % n_cols
    return rows, cols


def random_matrix(n_rows: int, n_cols: int, density: float,
                  rng: np.random.Generator) -> TripletMatrix:
    """Uniformly random pattern with round(density * cells) nonzeros."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be within [0, 1], got {density}")
    cells = n_rows * n_cols
    count = int(round(density * cells))
    if cells <= 10 ** 7:
        chosen = rng.choice(cells, size=count, replace=False)
    else:
        chosen = np.empty(0, dtype=np.int64)
        while chosen.size < count:
            draw = rng.integers(0, cells, size=int((count - chosen.size) * 1.1) + 16)
            chosen = np.unique(np.concatenate([chosen, draw]))
        chosen = rng.permutation(chosen)[:count]
    return TripletMatrix.from_arrays(n_rows, n_cols, chosen // max(n_cols, 1),
                                     chosen % max(n_cols, 1), _values(rng, count))


def uniform_rows(n: int, per_row: int, rng: np.random.Generator,
                 n_cols: Optional[int] = None) -> TripletMatrix:
    """Every row holds exactly ``per_row`` nonzeros (ell_ratio 1, zero variance)."""
    n_cols = n if n_cols is None else n_cols
    if per_row > n_cols:
        raise ValueError(f"per_row {per_row} exceeds {n_cols} columns")
    rows, cols = _spread_columns(rng, np.full(n, per_row, dtype=np.int64), n_cols)
    return TripletMatrix.from_arrays(n, n_cols, rows, cols, _values(rng, rows.size))


def power_law_rows(n: int, avg: float, rng: np.random.Generator,
                   n_cols: Optional[int] = None, shape: float = 1.5) -> TripletMatrix:
    """Heavy-tailed (Pareto) row lengths with mean near ``avg``; every row nonempty."""
    n_cols = n if n_cols is None else n_cols
    raw = rng.pareto(shape, n) + 1.0
    lengths = np.maximum(1, np.round(raw * avg / raw.mean())).astype(np.int64)
    rows, cols = _spread_columns(rng, lengths, n_cols)
    return TripletMatrix.from_arrays(n, n_cols, rows, cols, _values(rng, rows.size))


def banded(n: int, half_bandwidth: int) -> TripletMatrix:
    """Band matrix: 4 on the diagonal, -1 on the off-diagonals."""
    offsets = np.arange(-half_bandwidth, half_bandwidth + 1)
    rows = np.repeat(np.arange(n, dtype=np.int64), offsets.size)
    cols = rows + np.tile(offsets, n)
    keep = (cols >= 0) & (cols < n)
    rows, cols = rows[keep], cols[keep]
    values = np.where(rows == cols, 4.0, -1.0)
    return TripletMatrix.from_arrays(n, n, rows, cols, values)


def block_diagonal(n: int, block: int, rng: np.random.Generator) -> TripletMatrix:
    """Dense ``block`` x ``block`` tiles along the diagonal."""
    starts = np.arange(0, n, block)
    rows, cols = [], []
    for start in starts:
        size = min(block, n - start)
        r, c = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
        rows.append(r.ravel() + start)
        cols.append(c.ravel() + start)
    rows = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    return TripletMatrix.from_arrays(n, n, rows, cols, _values(rng, rows.size))


def size_ladder(base_n: int, steps: int, factor: int = 10, per_row: int = 4,
                seed: int = 0) -> List[TripletMatrix]:
    """Uniform-row matrices whose nnz grows by ``factor`` per step."""
    rng = np.random.default_rng(seed)
    return [uniform_rows(base_n * factor ** i, per_row, rng) for i in range(steps)]


def generate(kind: str, n: int, rng: np.random.Generator) -> TripletMatrix:
    """One matrix of the named generator family, sized ``n``."""
    if kind == "uniform":
        return uniform_rows(n, int(rng.integers(2, 9)), rng)
    if kind == "powerlaw":
        return power_law_rows(n, float(rng.uniform(3.0, 8.0)), rng)
    if kind == "random":
        return random_matrix(n, n, min(1.0, float(rng.uniform(2.0, 10.0)) / n), rng)
    if kind == "banded":
        return banded(n, int(rng.integers(1, 4)))
    if kind == "blockdiag":
        return block_diagonal(n, int(rng.choice((2, 4, 8))), rng)
    raise ValueError(f"Unknown generator '{kind}', expected one of {', '.join(GENERATORS)}")


def write_corpus(out_dir: Union[str, Path], count: int, seed: int = 0,
                 min_n: int = 64, max_n: int = 4096) -> List[Path]:
    """Write ``count`` matrices cycling through the generator families.

    Sizes are log-uniform in [min_n, max_n]; file names encode index,
    family and size. The same seed always writes the same files.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 1 <= min_n <= max_n:
        raise ValueError(f"need 1 <= min_n <= max_n, got {min_n}, {max_n}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        kind = GENERATORS[i % len(GENERATORS)]
        n = int(round(math.exp(rng.uniform(math.log(min_n), math.log(max_n)))))
        matrix = generate(kind, n, rng)
        path = out_dir / f"{i:03d}_{kind}_n{n}.mtx"
        write_matrix_market(matrix, path)
        paths.append(path)
        logger.debug("Generated %s (%d nnz)", path.name, matrix.nnz)

    logger.info("Wrote %d synthetic matrices to %s", len(paths), out_dir)
    return paths
