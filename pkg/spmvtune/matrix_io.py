"""Matrix Market reading/writing and the canonical triplet representation."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np

from .errors import MatrixMarketError, MemoryGuardError, UnsupportedMatrixMarketError

logger = logging.getLogger(__name__)

DEFAULT_DENSE_GUARD = 10 ** 7

SUPPORTED_FIELDS = ("real", "integer", "pattern")
SUPPORTED_SYMMETRIES = ("general", "symmetric")
REJECTED_FIELDS = ("complex",)
REJECTED_SYMMETRIES = ("hermitian", "skew-symmetric")


@dataclass(frozen=True, eq=False)
class TripletMatrix:
    """Coordinate (COO) matrix, sorted by (row, col), no duplicates, no zeros.

    Build instances with :meth:`from_arrays` or :meth:`from_entries`; the raw
    constructor trusts its arguments.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @classmethod
    def from_arrays(cls, n_rows: int, n_cols: int, rows, cols, values) -> "TripletMatrix":
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if n_rows < 0 or n_cols < 0:
            raise ValueError(f"Negative shape {n_rows}x{n_cols}")
        if not rows.size == cols.size == values.size:
            raise ValueError("rows, cols and values must have the same length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ValueError(f"Row index out of bounds for {n_rows} rows")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ValueError(f"Column index out of bounds for {n_cols} columns")

        keep = values != 0.0
        rows, cols, values = rows[keep], cols[keep], values[keep]

        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size > 1:
            dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                i = int(np.argmax(dup))
                raise ValueError(f"Duplicate coordinate ({rows[i]}, {cols[i]})")

        for arr in (rows, cols, values):
            arr.setflags(write=False)
        return cls(int(n_rows), int(n_cols), rows, cols, values)

    @classmethod
    def from_entries(cls, n_rows: int, n_cols: int,
                     entries: Iterable[Tuple[int, int, float]]) -> "TripletMatrix":
        entries = list(entries)
        if not entries:
            return cls.from_arrays(n_rows, n_cols, [], [], [])
        rows, cols, values = zip(*entries)
        return cls.from_arrays(n_rows, n_cols, rows, cols, values)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def entries(self) -> List[Tuple[int, int, float]]:
        return [(int(r), int(c), float(v))
                for r, c, v in zip(self.rows, self.cols, self.values)]

    def row_lengths(self) -> np.ndarray:
        """Nonzeros per row."""
        return np.bincount(self.rows, minlength=self.n_rows).astype(np.int64)

    def validate(self):
        """Assert every TripletMatrix invariant; raises ValueError on violation."""
        errors = []
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= self.n_rows):
            errors.append("row index out of bounds")
        if self.cols.size and (self.cols.min() < 0 or self.cols.max() >= self.n_cols):
            errors.append("column index out of bounds")
        if np.any(self.values == 0.0):
            errors.append("explicit zero stored")
        if self.rows.size > 1:
            key_rows, key_cols = self.rows, self.cols
            ordered = (key_rows[1:] > key_rows[:-1]) | (
                (key_rows[1:] == key_rows[:-1]) & (key_cols[1:] > key_cols[:-1]))
            if not ordered.all():
                errors.append("entries not strictly sorted by (row, col)")
        if errors:
            raise ValueError(f"TripletMatrix invalid: {'; '.join(errors)}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TripletMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.rows, other.rows)
                and np.array_equal(self.cols, other.cols)
                and np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        return f"TripletMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Row-major dense matrix; used as the correctness oracle."""

    n_rows: int
    n_cols: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.n_rows, self.n_cols):
            raise ValueError(
                f"Dense values shape {self.values.shape} != ({self.n_rows}, {self.n_cols})")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class MatrixMarketHeader:
    field: str
    symmetry: str
    n_rows: int
    n_cols: int
    declared_nnz: int


def check_dense_guard(n_rows: int, n_cols: int, guard: int = DEFAULT_DENSE_GUARD):
    cells = n_rows * n_cols
    if cells > guard:
        raise MemoryGuardError("dense view", cells, guard)


def to_dense(m: TripletMatrix, guard: int = DEFAULT_DENSE_GUARD) -> DenseMatrix:
    check_dense_guard(m.n_rows, m.n_cols, guard)
    dense = np.zeros((m.n_rows, m.n_cols), dtype=np.float64)
    dense[m.rows, m.cols] = m.values
    return DenseMatrix(m.n_rows, m.n_cols, dense)


def _content_lines(text: str):
    """Yield (line_number, stripped line) for non-blank, non-comment lines."""
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        yield number, stripped


def _parse_banner(first_line: str, source: str = None) -> Tuple[str, str]:
    tokens = first_line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing or malformed %%MatrixMarket banner", 1, source)
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise UnsupportedMatrixMarketError(f"unsupported object '{obj}'", 1, source)
    if fmt != "coordinate":
        raise UnsupportedMatrixMarketError(f"unsupported format '{fmt}'", 1, source)
    if field in REJECTED_FIELDS or field not in SUPPORTED_FIELDS:
        raise UnsupportedMatrixMarketError(f"unsupported field '{field}'", 1, source)
    if symmetry in REJECTED_SYMMETRIES or symmetry not in SUPPORTED_SYMMETRIES:
        raise UnsupportedMatrixMarketError(f"unsupported symmetry '{symmetry}'", 1, source)
    return field, symmetry


def parse_matrix_market_with_header(text: Union[bytes, str],
                                    source: str = None) -> Tuple[MatrixMarketHeader, TripletMatrix]:
    """Parse a coordinate Matrix Market document.

    Symmetric inputs are expanded to both triangles, pattern entries get 1.0,
    and explicit zeros are dropped after the entry count has been checked.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MatrixMarketError(f"not valid UTF-8 text: {e}", None, source) from e

    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty input", None, source)
    field, symmetry = _parse_banner(lines[0], source)

    content = _content_lines(text)
    try:
        size_line_no, size_line = next(content)
    except StopIteration:
        raise MatrixMarketError("missing size line", None, source) from None
    try:
        n_rows, n_cols, declared_nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(
            f"size line must be 'rows cols nnz', got '{size_line}'", size_line_no, source) from None
    if n_rows < 0 or n_cols < 0 or declared_nnz < 0:
        raise MatrixMarketError("negative size", size_line_no, source)
    if symmetry == "symmetric" and n_rows != n_cols:
        raise MatrixMarketError("symmetric matrix must be square", size_line_no, source)

    data = list(content)
    if len(data) != declared_nnz:
        raise MatrixMarketError(
            f"declared {declared_nnz} entries, found {len(data)}",
            data[declared_nnz][0] if len(data) > declared_nnz else None, source)

    width = 2 if field == "pattern" else 3
    tokens = []
    for number, line in data:
        parts = line.split()
        if len(parts) != width:
            raise MatrixMarketError(
                f"expected {width} tokens, got {len(parts)}", number, source)
        tokens.append(parts)

    header = MatrixMarketHeader(field, symmetry, n_rows, n_cols, declared_nnz)
    if not tokens:
        return header, TripletMatrix.from_arrays(n_rows, n_cols, [], [], [])

    table = np.array(tokens, dtype=object)
    try:
        rows = table[:, 0].astype(str).astype(np.int64) - 1
        cols = table[:, 1].astype(str).astype(np.int64) - 1
    except ValueError:
        bad = _first_bad_line(data, (0, 1), int)
        raise MatrixMarketError("index is not an integer", bad, source) from None
    if field == "pattern":
        values = np.ones(rows.size, dtype=np.float64)
    else:
        try:
            values = table[:, 2].astype(str).astype(np.float64)
        except ValueError:
            bad = _first_bad_line(data, (2,), float)
            raise MatrixMarketError("value is not a number", bad, source) from None

    out_of_bounds = (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
    if out_of_bounds.any():
        i = int(np.argmax(out_of_bounds))
        raise MatrixMarketError(
            f"index ({rows[i] + 1}, {cols[i] + 1}) outside {n_rows}x{n_cols}",
            data[i][0], source)

    if symmetry == "symmetric":
        upper = cols > rows
        if upper.any():
            i = int(np.argmax(upper))
            raise MatrixMarketError(
                "symmetric file stores an upper-triangle entry", data[i][0], source)
        off = rows != cols
        rows, cols, values = (np.concatenate([rows, cols[off]]),
                              np.concatenate([cols, rows[off]]),
                              np.concatenate([values, values[off]]))

    keys = rows * max(n_cols, 1) + cols
    unique_keys, first_index, counts = np.unique(keys, return_index=True, return_counts=True)
    if unique_keys.size != keys.size:
        dup_key = unique_keys[np.argmax(counts > 1)]
        where = np.nonzero(keys == dup_key)[0]
        line = data[where[1] % len(data)][0]
        raise MatrixMarketError(
            f"duplicate coordinate ({dup_key // max(n_cols, 1) + 1}, {dup_key % max(n_cols, 1) + 1})",
            line, source)

    matrix = TripletMatrix.from_arrays(n_rows, n_cols, rows, cols, values)
    logger.debug("Parsed %s: %dx%d, %d file entries, %d stored",
                 source or "<text>", n_rows, n_cols, declared_nnz, matrix.nnz)
    return header, matrix


def _first_bad_line(data, columns, convert):
    for number, line in data:
        parts = line.split()
        for c in columns:
            try:
                if convert is int:
                    int(parts[c])
                else:
                    float(parts[c])
            except ValueError:
                return number
    return None


def parse_matrix_market(text: Union[bytes, str], source: str = None) -> TripletMatrix:
    return parse_matrix_market_with_header(text, source)[1]


def read_matrix_market(path: Union[str, Path]) -> TripletMatrix:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise MatrixMarketError(f"cannot read file: {e}", None, str(path)) from e
    return parse_matrix_market(data, source=str(path))


def _format_value(value: float) -> str:
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    return text


def emit_matrix_market(m: TripletMatrix) -> bytes:
    """Write ``m`` as ``coordinate real general`` with 1-based indices."""
    out = ["%%MatrixMarket matrix coordinate real general",
           f"{m.n_rows} {m.n_cols} {m.nnz}"]
    out.extend(f"{r + 1} {c + 1} {_format_value(v)}"
               for r, c, v in zip(m.rows.tolist(), m.cols.tolist(), m.values.tolist()))
    return ("\n".join(out) + "\n").encode("utf-8")


def write_matrix_market(m: TripletMatrix, path: Union[str, Path]):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(emit_matrix_market(m))
    logger.debug("Wrote %s to %s", m, path)
