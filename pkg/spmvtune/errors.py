"""Named errors for spmvtune.

Every error is a ``ValueError`` so callers that only care about bad input can
catch that; the CLI maps each class to its exit code.
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3


class SpmvTuneError(ValueError):
    """Base class for all spmvtune errors."""

    exit_code = EXIT_DATA


class MatrixMarketError(SpmvTuneError):
    """Malformed Matrix Market input."""

    def __init__(self, message: str, line: int = None, source: str = None):
        self.line = line
        self.source = source
        parts = []
        if source:
            parts.append(str(source))
        if line is not None:
            parts.append(f"line {line}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class UnsupportedMatrixMarketError(MatrixMarketError):
    """Well-formed banner naming a field or symmetry we do not handle."""


class MemoryGuardError(SpmvTuneError):
    """A conversion or dense view would exceed its configured slot budget."""

    exit_code = EXIT_INFEASIBLE

    def __init__(self, what: str, required: int, limit: int):
        self.what = what
        self.required = required
        self.limit = limit
        super().__init__(f"{what} needs {required} slots, guard is {limit}")


class DimensionMismatchError(SpmvTuneError):
    """Vector length does not match the matrix."""


class DatasetSchemaError(SpmvTuneError):
    """Dataset file or record violates the sweep schema."""


class DuplicateRecordError(DatasetSchemaError):
    """A (matrix_id, config) pair appears twice."""


class ModelSchemaError(SpmvTuneError):
    """A model document does not match the features or labels it is used with."""


class InsufficientDataError(SpmvTuneError):
    """Not enough rows or observations to train."""


class InfeasibleFormatError(SpmvTuneError):
    """The requested format cannot hold this matrix."""

    exit_code = EXIT_INFEASIBLE
