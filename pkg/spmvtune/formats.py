"""CSR, ELL, BELL and SELL storage layouts.

All layouts are built from a :class:`~spmvtune.matrix_io.TripletMatrix` and keep
rows sorted by column. ELL and SELL grids are row-major. Padding slots hold
column index 0 and value 0.0; the explicit ``row_len`` / ``block_row_len``
arrays say which slots are occupied.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import MemoryGuardError
from .matrix_io import DEFAULT_DENSE_GUARD, DenseMatrix, TripletMatrix, to_dense

logger = logging.getLogger(__name__)

FORMAT_NAMES = ("csr", "ell", "bell", "sell")
DEFAULT_SLOT_GUARD = 2 ** 31
DEFAULT_BLOCK = (2, 2)
DEFAULT_SLICE_HEIGHT = 2

INDEX_BYTES = 4
VALUE_BYTES = 8


def _frozen(*arrays):
    for arr in arrays:
        arr.setflags(write=False)


def _row_ptr(m: TripletMatrix) -> np.ndarray:
    ptr = np.zeros(m.n_rows + 1, dtype=np.int64)
    np.cumsum(m.row_lengths(), out=ptr[1:])
    return ptr


def _positions_in_row(m: TripletMatrix, row_ptr: np.ndarray) -> np.ndarray:
    """Position of each entry within its row (entries are row-sorted)."""
    return np.arange(m.nnz, dtype=np.int64) - row_ptr[m.rows]


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    name = "csr"

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def value_slots(self) -> int:
        return self.nnz

    def footprint(self, index_bytes: int = INDEX_BYTES, value_bytes: int = VALUE_BYTES) -> int:
        return self.nnz * (value_bytes + index_bytes) + (self.n_rows + 1) * index_bytes

    def to_triplets(self) -> TripletMatrix:
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr))
        return TripletMatrix.from_arrays(self.n_rows, self.n_cols, rows, self.col_idx, self.values)


@dataclass(frozen=True, eq=False)
class EllMatrix:
    n_rows: int
    n_cols: int
    max_nnz: int
    row_len: np.ndarray
    col_idx: np.ndarray  # (n_rows, max_nnz)
    values: np.ndarray   # (n_rows, max_nnz)

    name = "ell"

    @property
    def nnz(self) -> int:
        return int(self.row_len.sum())

    @property
    def value_slots(self) -> int:
        return self.n_rows * self.max_nnz

    def footprint(self, index_bytes: int = INDEX_BYTES, value_bytes: int = VALUE_BYTES) -> int:
        return self.value_slots * (value_bytes + index_bytes) + self.n_rows * index_bytes

    def occupied(self) -> np.ndarray:
        return np.arange(self.max_nnz)[None, :] < self.row_len[:, None]

    def to_triplets(self) -> TripletMatrix:
        mask = self.occupied()
        rows = np.broadcast_to(np.arange(self.n_rows)[:, None], mask.shape)[mask]
        return TripletMatrix.from_arrays(self.n_rows, self.n_cols, rows,
                                         self.col_idx[mask], self.values[mask])


@dataclass(frozen=True, eq=False)
class BellMatrix:
    n_rows: int
    n_cols: int
    block_h: int
    block_w: int
    n_block_rows: int
    max_blocks: int
    block_row_len: np.ndarray
    block_col_idx: np.ndarray  # (n_block_rows, max_blocks)
    data: np.ndarray           # (n_block_rows, max_blocks, block_h, block_w)

    name = "bell"

    @property
    def n_block_cols(self) -> int:
        return -(-self.n_cols // self.block_w)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.data))

    @property
    def stored_blocks(self) -> int:
        return int(self.block_row_len.sum())

    @property
    def value_slots(self) -> int:
        return self.n_block_rows * self.max_blocks * self.block_h * self.block_w

    def footprint(self, index_bytes: int = INDEX_BYTES, value_bytes: int = VALUE_BYTES) -> int:
        return (self.value_slots * value_bytes
                + self.n_block_rows * self.max_blocks * index_bytes
                + self.n_block_rows * index_bytes)

    def to_triplets(self) -> TripletMatrix:
        occupied = np.arange(self.max_blocks)[None, :] < self.block_row_len[:, None]
        block_rows, slots = np.nonzero(occupied)
        block_cols = self.block_col_idx[block_rows, slots]
        blocks = self.data[block_rows, slots]  # (stored, bh, bw)
        i, j = np.meshgrid(np.arange(self.block_h), np.arange(self.block_w), indexing="ij")
        rows = (block_rows[:, None, None] * self.block_h + i[None]).ravel()
        cols = (block_cols[:, None, None] * self.block_w + j[None]).ravel()
        values = blocks.ravel()
        keep = (values != 0.0) & (rows < self.n_rows) & (cols < self.n_cols)
        return TripletMatrix.from_arrays(self.n_rows, self.n_cols,
                                         rows[keep], cols[keep], values[keep])


@dataclass(frozen=True, eq=False)
class SellMatrix:
    n_rows: int
    n_cols: int
    slice_height: int
    slice_ptr: np.ndarray
    slice_width: np.ndarray
    row_len: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    name = "sell"

    @property
    def n_slices(self) -> int:
        return int(self.slice_width.size)

    @property
    def nnz(self) -> int:
        return int(self.row_len.sum())

    @property
    def value_slots(self) -> int:
        return int(self.slice_ptr[-1])

    def footprint(self, index_bytes: int = INDEX_BYTES, value_bytes: int = VALUE_BYTES) -> int:
        return (self.value_slots * (value_bytes + index_bytes)
                + (self.n_slices + 1) * index_bytes
                + self.n_slices * index_bytes
                + self.n_rows * index_bytes)

    @cached_property
    def row_base(self) -> np.ndarray:
        """First slot of each row in ``values``."""
        rows = np.arange(self.n_rows, dtype=np.int64)
        s = rows // self.slice_height
        return self.slice_ptr[s] + (rows % self.slice_height) * self.slice_width[s]

    @cached_property
    def row_width(self) -> np.ndarray:
        """Padded width of each row (its slice's width)."""
        return self.slice_width[np.arange(self.n_rows) // self.slice_height]

    def to_triplets(self) -> TripletMatrix:
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), self.row_len)
        starts = np.repeat(self.row_base, self.row_len)
        offsets = np.arange(rows.size) - np.repeat(np.cumsum(self.row_len) - self.row_len, self.row_len)
        slots = starts + offsets
        return TripletMatrix.from_arrays(self.n_rows, self.n_cols, rows,
                                         self.col_idx[slots], self.values[slots])


FormatMatrix = Union[CsrMatrix, EllMatrix, BellMatrix, SellMatrix]


def ell_required_slots(m: TripletMatrix) -> int:
    lengths = m.row_lengths()
    return m.n_rows * int(lengths.max(initial=0))


def bell_required_slots(m: TripletMatrix, block_h: int = 2, block_w: int = 2) -> int:
    _check_block(block_h, block_w)
    n_block_rows = -(-m.n_rows // block_h)
    if m.nnz == 0:
        return 0
    n_block_cols = -(-m.n_cols // block_w)
    keys = np.unique((m.rows // block_h) * n_block_cols + m.cols // block_w)
    max_blocks = int(np.bincount(keys // n_block_cols).max())
    return n_block_rows * max_blocks * block_h * block_w


def sell_required_slots(m: TripletMatrix, slice_height: int = 2) -> int:
    return int(_sell_layout(m.row_lengths(), m.n_rows, slice_height)[0][-1])


def required_slots(m: TripletMatrix, fmt: str, block_h: int = 2, block_w: int = 2,
                   slice_height: int = 2) -> int:
    """Value slots the named format would allocate for ``m``."""
    if fmt == "csr":
        return m.nnz
    if fmt == "ell":
        return ell_required_slots(m)
    if fmt == "bell":
        return bell_required_slots(m, block_h, block_w)
    if fmt == "sell":
        return sell_required_slots(m, slice_height)
    raise ValueError(f"Unknown format '{fmt}', expected one of {', '.join(FORMAT_NAMES)}")


def is_feasible(m: TripletMatrix, fmt: str, guard: int = DEFAULT_SLOT_GUARD, **params) -> bool:
    return fmt == "csr" or required_slots(m, fmt, **params) <= guard


def _check_guard(what: str, required: int, guard: int):
    if required > guard:
        raise MemoryGuardError(what, required, guard)


def _check_block(block_h: int, block_w: int):
    if block_h < 1 or block_w < 1:
        raise ValueError(f"Block dimensions must be >= 1, got {block_h}x{block_w}")


def coo_to_csr(m: TripletMatrix) -> CsrMatrix:
    row_ptr = _row_ptr(m)
    col_idx = m.cols.copy()
    values = m.values.copy()
    _frozen(row_ptr, col_idx, values)
    return CsrMatrix(m.n_rows, m.n_cols, row_ptr, col_idx, values)


def coo_to_ell(m: TripletMatrix, guard: int = DEFAULT_SLOT_GUARD) -> EllMatrix:
    row_len = m.row_lengths()
    max_nnz = int(row_len.max(initial=0))
    _check_guard("ELL grid", m.n_rows * max_nnz, guard)

    col_idx = np.zeros((m.n_rows, max_nnz), dtype=np.int64)
    values = np.zeros((m.n_rows, max_nnz), dtype=np.float64)
    pos = _positions_in_row(m, _row_ptr(m))
    col_idx[m.rows, pos] = m.cols
    values[m.rows, pos] = m.values
    _frozen(row_len, col_idx, values)
    return EllMatrix(m.n_rows, m.n_cols, max_nnz, row_len, col_idx, values)


def coo_to_bell(m: TripletMatrix, block_h: int = 2, block_w: int = 2,
                guard: int = DEFAULT_SLOT_GUARD) -> BellMatrix:
    """Blocked ELL over a fixed block grid anchored at (0, 0)."""
    _check_block(block_h, block_w)
    n_block_rows = -(-m.n_rows // block_h)
    n_block_cols = max(-(-m.n_cols // block_w), 1)

    keys = (m.rows // block_h) * n_block_cols + m.cols // block_w
    block_keys, inverse = np.unique(keys, return_inverse=True)
    block_rows = block_keys // n_block_cols
    block_row_len = np.bincount(block_rows, minlength=n_block_rows).astype(np.int64)
    max_blocks = int(block_row_len.max(initial=0))
    _check_guard("BELL grid", n_block_rows * max_blocks * block_h * block_w, guard)

    # unique keys are sorted by (block row, block col), so slot = rank within block row
    first = np.zeros(n_block_rows + 1, dtype=np.int64)
    np.cumsum(block_row_len, out=first[1:])
    block_slot = np.arange(block_keys.size, dtype=np.int64) - first[block_rows]

    block_col_idx = np.zeros((n_block_rows, max_blocks), dtype=np.int64)
    block_col_idx[block_rows, block_slot] = block_keys % n_block_cols
    data = np.zeros((n_block_rows, max_blocks, block_h, block_w), dtype=np.float64)
    inverse = inverse.ravel()
    data[block_rows[inverse], block_slot[inverse], m.rows % block_h, m.cols % block_w] = m.values

    _frozen(block_row_len, block_col_idx, data)
    return BellMatrix(m.n_rows, m.n_cols, block_h, block_w, n_block_rows, max_blocks,
                      block_row_len, block_col_idx, data)


def _sell_layout(row_len: np.ndarray, n_rows: int, slice_height: int):
    if slice_height < 1:
        raise ValueError(f"slice_height must be >= 1, got {slice_height}")
    n_slices = -(-n_rows // slice_height)
    padded = np.zeros(n_slices * slice_height, dtype=np.int64)
    padded[:n_rows] = row_len
    slice_width = padded.reshape(n_slices, slice_height).max(axis=1, initial=0)
    rows_in_slice = np.minimum(slice_height, n_rows - np.arange(n_slices) * slice_height)
    slice_ptr = np.zeros(n_slices + 1, dtype=np.int64)
    np.cumsum(rows_in_slice * slice_width, out=slice_ptr[1:])
    return slice_ptr, slice_width


def coo_to_sell(m: TripletMatrix, slice_height: int = 2,
                guard: int = DEFAULT_SLOT_GUARD) -> SellMatrix:
    row_len = m.row_lengths()
    slice_ptr, slice_width = _sell_layout(row_len, m.n_rows, slice_height)
    _check_guard("SELL slices", int(slice_ptr[-1]), guard)

    col_idx = np.zeros(int(slice_ptr[-1]), dtype=np.int64)
    values = np.zeros(int(slice_ptr[-1]), dtype=np.float64)
    s = m.rows // slice_height
    slots = (slice_ptr[s] + (m.rows % slice_height) * slice_width[s]
             + _positions_in_row(m, _row_ptr(m)))
    col_idx[slots] = m.cols
    values[slots] = m.values
    _frozen(slice_ptr, slice_width, row_len, col_idx, values)
    return SellMatrix(m.n_rows, m.n_cols, slice_height, slice_ptr, slice_width,
                      row_len, col_idx, values)


def convert(m: TripletMatrix, fmt: str, block_h: int = 2, block_w: int = 2,
            slice_height: int = 2, guard: int = DEFAULT_SLOT_GUARD) -> FormatMatrix:
    """Convert ``m`` to the named format."""
    if fmt == "csr":
        return coo_to_csr(m)
    if fmt == "ell":
        return coo_to_ell(m, guard)
    if fmt == "bell":
        return coo_to_bell(m, block_h, block_w, guard)
    if fmt == "sell":
        return coo_to_sell(m, slice_height, guard)
    raise ValueError(f"Unknown format '{fmt}', expected one of {', '.join(FORMAT_NAMES)}")


def reconstruct_dense(f: FormatMatrix, guard: int = DEFAULT_DENSE_GUARD) -> DenseMatrix:
    return to_dense(f.to_triplets(), guard)


def format_footprint(f: FormatMatrix, index_bytes: int = INDEX_BYTES,
                     value_bytes: int = VALUE_BYTES) -> int:
    """Bytes held by index and value arrays of ``f``."""
    return f.footprint(index_bytes, value_bytes)


def padding_slots(f: FormatMatrix) -> int:
    return f.value_slots - f.nnz


def padding_fraction(f: FormatMatrix) -> float:
    return padding_slots(f) / f.value_slots if f.value_slots else 0.0


def format_summary(f: FormatMatrix) -> dict:
    """Footprint and padding figures of one converted matrix."""
    return {
        "format": f.name,
        "n_rows": f.n_rows,
        "n_cols": f.n_cols,
        "nnz": f.nnz,
        "value_slots": f.value_slots,
        "padding_slots": padding_slots(f),
        "padding_fraction": padding_fraction(f),
        "footprint_bytes": format_footprint(f),
    }


def chunk_units(f: FormatMatrix, rows_per_chunk: int) -> int:
    """Scheduling units (rows, block-rows or slices) per chunk of ``rows_per_chunk`` rows."""
    if isinstance(f, BellMatrix):
        return math.ceil(rows_per_chunk / f.block_h)
    if isinstance(f, SellMatrix):
        return math.ceil(rows_per_chunk / f.slice_height)
    return rows_per_chunk
