"""Sweep datasets: configuration spaces, measurement records, CSV persistence
and per-dimension labeling."""

import itertools
import json
import logging
import math
import os
import socket
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DatasetSchemaError, DuplicateRecordError, InsufficientDataError
from .features import FEATURE_NAMES, SparsityFeatures
from .learners import CLASSIFICATION, REGRESSION, LabeledDataset
from .time_utils import utc_timestamp

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MIN, MAX = "min", "max"
DIRECTIONS = (MIN, MAX)

RESULT_COLUMNS = ("feasible", "repetitions", "latency_seconds", "mflops",
                  "energy_joules", "avg_power_watts", "energy_efficiency")
OPTIONAL_OBJECTIVES = ("energy_joules", "avg_power_watts", "energy_efficiency")
RESERVED_COLUMNS = ("matrix_id",) + FEATURE_NAMES + RESULT_COLUMNS

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Objective:
    name: str
    direction: str
    description: str


OBJECTIVES: Dict[str, Objective] = {
    o.name: o for o in (
        Objective("latency_seconds", MIN, "mean SpMV latency"),
        Objective("energy_joules", MIN, "energy per SpMV"),
        Objective("avg_power_watts", MIN, "average power while running"),
        Objective("energy_efficiency", MAX, "MFLOPS per watt"),
        Objective("mflops", MAX, "useful-flop throughput"),
    )
}
OBJECTIVE_ALIASES = {"latency": "latency_seconds", "energy": "energy_joules",
                     "power": "avg_power_watts", "efficiency": "energy_efficiency"}


def resolve_objective(name: str, direction: Optional[str] = None) -> Tuple[str, str]:
    """Canonical column name and direction; unknown columns default to ``min``."""
    canonical = OBJECTIVE_ALIASES.get(name, name)
    if direction is None:
        direction = OBJECTIVES[canonical].direction if canonical in OBJECTIVES else MIN
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    return canonical, direction


@dataclass(frozen=True)
class ConfigDimension:
    name: str
    values: Tuple[Any, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError(f"dimension '{self.name}' has no values")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"dimension '{self.name}' has duplicate values")

    @property
    def numeric(self) -> bool:
        return all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in self.values)

    def index(self, value) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise DatasetSchemaError(
                f"value {value!r} is not in dimension '{self.name}' {list(self.values)}") from None

    def parse(self, text: str):
        """Map a CSV cell back to the typed dimension value."""
        for value in self.values:
            if str(value) == text:
                return value
        raise DatasetSchemaError(f"value {text!r} is not in dimension '{self.name}' {list(self.values)}")


@dataclass(frozen=True)
class ConfigPoint:
    items: Tuple[Tuple[str, Any], ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((str(k), v) for k, v in self.items))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ConfigPoint":
        return cls(tuple(mapping.items()))

    def __getitem__(self, name: str):
        for key, value in self.items:
            if key == name:
                return value
        raise KeyError(name)

    def get(self, name: str, default=None):
        try:
            return self[name]
        except KeyError:
            return default

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(k for k, _ in self.items)

    def as_dict(self) -> Dict[str, Any]:
        return dict(self.items)

    @property
    def key(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.items)

    @property
    def sort_key(self) -> tuple:
        return tuple((0, v, "") if isinstance(v, (int, float)) and not isinstance(v, bool)
                     else (1, 0, str(v)) for _, v in self.items)

    def replace(self, **changes) -> "ConfigPoint":
        return ConfigPoint(tuple((k, changes.get(k, v)) for k, v in self.items))

    def __str__(self) -> str:
        return self.key


@dataclass(frozen=True)
class ConfigSpace:
    dimensions: Tuple[ConfigDimension, ...]

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        names = self.names
        if not names:
            raise ValueError("configuration space has no dimensions")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate dimension names in {list(names)}")
        clashes = sorted(set(names) & set(RESERVED_COLUMNS))
        if clashes:
            raise ValueError(f"dimension names clash with dataset columns: {clashes}")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.dimensions)

    def dimension(self, name: str) -> ConfigDimension:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise KeyError(name)

    def __len__(self) -> int:
        return math.prod(len(d.values) for d in self.dimensions)

    def points(self) -> List[ConfigPoint]:
        return [ConfigPoint(tuple(zip(self.names, values)))
                for values in itertools.product(*(d.values for d in self.dimensions))]

    def contains(self, point: ConfigPoint) -> bool:
        if point.names != self.names:
            return False
        return all(v in d.values for d, (_, v) in zip(self.dimensions, point.items))

    def check(self, point: ConfigPoint):
        if point.names != self.names:
            raise DatasetSchemaError(f"point {point} does not have dimensions {list(self.names)}")
        for d, (_, v) in zip(self.dimensions, point.items):
            d.index(v)

    def restrict(self, **fixed) -> "ConfigSpace":
        """Sub-space with some dimensions pinned to one value."""
        dims = []
        for d in self.dimensions:
            if d.name in fixed:
                d.index(fixed[d.name])
                dims.append(ConfigDimension(d.name, (fixed[d.name],)))
            else:
                dims.append(d)
        return ConfigSpace(tuple(dims))

    def encode(self, point: ConfigPoint) -> np.ndarray:
        """Numeric dimensions by value, categorical ones by position."""
        return np.array([float(v) if d.numeric else float(d.index(v))
                         for d, (_, v) in zip(self.dimensions, point.items)], dtype=np.float64)

    def to_dict(self) -> list:
        return [{"name": d.name, "values": list(d.values)} for d in self.dimensions]

    @classmethod
    def from_dict(cls, data) -> "ConfigSpace":
        """Accepts ``[{"name", "values"}, ...]`` or an ordered ``{name: values}`` object."""
        if isinstance(data, Mapping):
            return cls(tuple(ConfigDimension(k, tuple(v)) for k, v in data.items()))
        return cls(tuple(ConfigDimension(d["name"], tuple(d["values"])) for d in data))

    @classmethod
    def load(cls, path: PathLike) -> "ConfigSpace":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_dict(json.load(f))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DatasetSchemaError(f"{path}: invalid configuration space: {e}") from e


@dataclass(frozen=True)
class MeasurementRecord:
    """One benchmarked (matrix, configuration) observation.

    ``energy_efficiency`` is derived from ``mflops / avg_power_watts`` when
    power is known and must agree with it when given. ``extra`` holds
    imported objective columns this package does not measure itself.
    """

    matrix_id: str
    features: SparsityFeatures
    config: ConfigPoint
    feasible: bool = True
    repetitions: int = 0
    latency_seconds: Optional[float] = None
    mflops: Optional[float] = None
    energy_joules: Optional[float] = None
    avg_power_watts: Optional[float] = None
    energy_efficiency: Optional[float] = None
    extra: Dict[str, Optional[float]] = field(default_factory=dict)

    def __post_init__(self):
        errors = []
        if self.feasible and (self.latency_seconds is None or not self.latency_seconds > 0):
            errors.append("feasible record needs latency_seconds > 0")
        if self.repetitions < 0:
            errors.append("repetitions must be non-negative")
        if self.energy_efficiency is not None and self.avg_power_watts is None:
            errors.append("energy_efficiency given without avg_power_watts")
        if self.avg_power_watts is not None and self.mflops is not None:
            if self.avg_power_watts <= 0:
                errors.append("avg_power_watts must be positive")
            else:
                expected = self.mflops / self.avg_power_watts
                if self.energy_efficiency is None:
                    object.__setattr__(self, "energy_efficiency", expected)
                elif not math.isclose(self.energy_efficiency, expected, rel_tol=1e-9, abs_tol=0.0):
                    errors.append(f"energy_efficiency {self.energy_efficiency} != mflops/avg_power {expected}")
        if errors:
            raise DatasetSchemaError(f"record {self.matrix_id} [{self.config}]: {'; '.join(errors)}")

    @property
    def key(self) -> Tuple[str, str]:
        return self.matrix_id, self.config.key

    def objective(self, name: str) -> Optional[float]:
        if name in self.extra:
            return self.extra[name]
        if name in OBJECTIVES:
            return getattr(self, name)
        raise KeyError(name)


@dataclass(frozen=True)
class MachineFingerprint:
    host: str
    worker_budget: int
    timestamp: str
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def current(cls, **metadata) -> "MachineFingerprint":
        meta = {"symmetric_expansion": True}
        meta.update(metadata)
        return cls(socket.gethostname(), os.cpu_count() or 1, utc_timestamp(), meta)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "MachineFingerprint":
        return cls(str(data.get("host", "")), int(data.get("worker_budget", 0)),
                   str(data.get("timestamp", "")), dict(data.get("metadata", {})))


@dataclass
class SweepDataset:
    space: ConfigSpace
    records: List[MeasurementRecord] = field(default_factory=list)
    fingerprint: MachineFingerprint = field(default_factory=MachineFingerprint.current)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        records, self.records, self._keys = list(self.records), [], set()
        for record in records:
            self.add(record)

    def add(self, record: MeasurementRecord):
        self.space.check(record.config)
        if record.key in self._keys:
            raise DuplicateRecordError(f"duplicate record for {record.matrix_id} [{record.config}]")
        self._keys.add(record.key)
        self.records.append(record)

    def __contains__(self, key: Tuple[str, str]) -> bool:
        return key in self._keys

    def __len__(self) -> int:
        return len(self.records)

    def merge(self, other: "SweepDataset") -> "SweepDataset":
        if other.space != self.space:
            raise DatasetSchemaError("cannot merge datasets over different configuration spaces")
        return SweepDataset(self.space, self.records + other.records, self.fingerprint,
                            self.schema_version)

    def matrix_ids(self) -> List[str]:
        return sorted({r.matrix_id for r in self.records})

    def records_for(self, matrix_id: str) -> List[MeasurementRecord]:
        return [r for r in self.records if r.matrix_id == matrix_id]

    def features_for(self, matrix_id: str) -> SparsityFeatures:
        for r in self.records:
            if r.matrix_id == matrix_id:
                return r.features
        raise KeyError(matrix_id)

    @property
    def extra_columns(self) -> Tuple[str, ...]:
        return tuple(sorted({k for r in self.records for k in r.extra}))

    def has_objective(self, name: str) -> bool:
        return name in OBJECTIVES or name in self.extra_columns

    def columns(self) -> List[str]:
        return ["matrix_id", *FEATURE_NAMES, *self.space.names, *RESULT_COLUMNS,
                *self.extra_columns]


# -- CSV persistence --------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def export_csv(ds: SweepDataset, path: PathLike):
    """Write the dataset as CSV plus a ``.json`` sidecar (schema, space, fingerprint)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    extras = ds.extra_columns
    rows = []
    for r in ds.records:
        row = [r.matrix_id]
        row += [_cell(getattr(r.features, name)) for name in FEATURE_NAMES]
        row += [_cell(v) for _, v in r.config.items]
        row += [_cell(r.feasible), _cell(r.repetitions), _cell(r.latency_seconds), _cell(r.mflops),
                _cell(r.energy_joules), _cell(r.avg_power_watts), _cell(r.energy_efficiency)]
        row += [_cell(r.extra.get(name)) for name in extras]
        rows.append(row)
    pd.DataFrame(rows, columns=ds.columns(), dtype=object).to_csv(path, index=False)

    sidecar = {"schema_version": ds.schema_version, "fingerprint": ds.fingerprint.to_dict(),
               "space": ds.space.to_dict()}
    _sidecar(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Exported %d records to %s", len(ds), path)


def _optional_float(text: str, column: str, line: int, path) -> Optional[float]:
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise DatasetSchemaError(f"{path}: line {line}: column {column}: not a number: {text!r}") from None


def _parse_bool(text: str, line: int, path) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise DatasetSchemaError(f"{path}: line {line}: column feasible: not a boolean: {text!r}")


def _infer_space(frame: pd.DataFrame, dimension_names: Sequence[str]) -> ConfigSpace:
    dims = []
    for name in dimension_names:
        seen = list(dict.fromkeys(frame[name].tolist()))
        try:
            values = tuple(int(v) for v in seen)
        except ValueError:
            values = tuple(seen)
        dims.append(ConfigDimension(name, values))
    return ConfigSpace(tuple(dims))


def import_csv(path: PathLike) -> SweepDataset:
    """Read a dataset written by :func:`export_csv` or an external tool.

    Without a sidecar the configuration dimensions are the columns between
    ``std_nnz`` and ``feasible``, and their values are taken in order of
    first appearance.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise DatasetSchemaError(f"{path}: file not found") from e
    except pd.errors.EmptyDataError as e:
        raise DatasetSchemaError(f"{path}: empty file, expected a header line") from e
    except pd.errors.ParserError as e:
        raise DatasetSchemaError(f"{path}: malformed CSV: {e}") from e

    columns = list(frame.columns)
    prefix = ["matrix_id", *FEATURE_NAMES]
    if columns[:len(prefix)] != prefix:
        raise DatasetSchemaError(f"{path}: header must start with {prefix}, got {columns[:len(prefix)]}")
    try:
        tail_start = columns.index("feasible")
    except ValueError:
        raise DatasetSchemaError(f"{path}: missing column 'feasible'") from None
    if columns[tail_start:tail_start + len(RESULT_COLUMNS)] != list(RESULT_COLUMNS):
        raise DatasetSchemaError(f"{path}: result columns must be {list(RESULT_COLUMNS)}")
    dimension_names = columns[len(prefix):tail_start]
    extras = columns[tail_start + len(RESULT_COLUMNS):]

    sidecar_path = _sidecar(path)
    fingerprint = None
    if sidecar_path.exists():
        try:
            sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DatasetSchemaError(f"{sidecar_path}: not valid JSON: {e}") from e
        if sidecar.get("schema_version") != SCHEMA_VERSION:
            raise DatasetSchemaError(
                f"{sidecar_path}: schema version {sidecar.get('schema_version')} != {SCHEMA_VERSION}")
        space = ConfigSpace.from_dict(sidecar["space"])
        if list(space.names) != dimension_names:
            raise DatasetSchemaError(
                f"{path}: dimension columns {dimension_names} do not match sidecar {list(space.names)}")
        fingerprint = MachineFingerprint.from_dict(sidecar.get("fingerprint", {}))
    else:
        logger.warning("No sidecar next to %s; inferring configuration space from columns", path)
        if not dimension_names:
            raise DatasetSchemaError(f"{path}: no configuration columns")
        if frame.empty:
            raise DatasetSchemaError(f"{path}: no rows to infer the configuration space from")
        space = _infer_space(frame, dimension_names)

    ds = SweepDataset(space, [], fingerprint or MachineFingerprint("", 0, "", {}))
    for index, row in enumerate(frame.itertuples(index=False, name=None)):
        line = index + 2
        cells = dict(zip(columns, row))
        try:
            features = SparsityFeatures.from_mapping(cells)
        except ValueError as e:
            raise DatasetSchemaError(f"{path}: line {line}: bad feature value: {e}") from None
        try:
            config = ConfigPoint(tuple((name, space.dimension(name).parse(cells[name]))
                                       for name in dimension_names))
            repetitions = int(cells["repetitions"]) if cells["repetitions"] else 0
        except DatasetSchemaError as e:
            raise DatasetSchemaError(f"{path}: line {line}: {e}") from None
        except ValueError:
            raise DatasetSchemaError(
                f"{path}: line {line}: column repetitions: not an integer: {cells['repetitions']!r}") from None
        values = {name: _optional_float(cells[name], name, line, path)
                  for name in ("latency_seconds", "mflops", *OPTIONAL_OBJECTIVES)}
        extra = {name: _optional_float(cells[name], name, line, path) for name in extras}
        try:
            ds.add(MeasurementRecord(matrix_id=cells["matrix_id"], features=features, config=config,
                                     feasible=_parse_bool(cells["feasible"], line, path),
                                     repetitions=repetitions, extra=extra, **values))
        except DatasetSchemaError as e:
            raise type(e)(f"{path}: line {line}: {e}") from None

    logger.info("Imported %d records from %s", len(ds), path)
    return ds


# -- labeling ----------------------------------------------------------------

def _winner_key(record: MeasurementRecord, objective: str, direction: str):
    value = record.objective(objective)
    signed = value if direction == MIN else -value
    latency = record.latency_seconds if record.latency_seconds is not None else math.inf
    return signed, latency, record.config.sort_key


def select_winners(ds: SweepDataset, objective: str,
                   direction: Optional[str] = None) -> Dict[str, MeasurementRecord]:
    """Best feasible record per matrix; ties go to lower latency, then the smaller point."""
    objective, direction = resolve_objective(objective, direction)
    if not ds.has_objective(objective):
        raise DatasetSchemaError(f"dataset has no objective column '{objective}'")
    winners = {}
    for matrix_id in ds.matrix_ids():
        candidates = [r for r in ds.records_for(matrix_id)
                      if r.feasible and r.objective(objective) is not None]
        if not candidates:
            logger.warning("Dropping %s: no feasible record with %s", matrix_id, objective)
            continue
        winners[matrix_id] = min(candidates, key=lambda r: _winner_key(r, objective, direction))
    return winners


def label_dataset(ds: SweepDataset, objective: str,
                  direction: Optional[str] = None) -> Dict[str, LabeledDataset]:
    """One classification dataset per configuration dimension."""
    winners = select_winners(ds, objective, direction)
    if not winners:
        raise InsufficientDataError(f"no matrix has a feasible record for '{objective}'")
    ids = list(winners)
    X = np.stack([ds.features_for(m).as_vector() for m in ids])
    labeled = {}
    for name in ds.space.names:
        labels = [str(winners[m].config[name]) for m in ids]
        labeled[name] = LabeledDataset(FEATURE_NAMES, X, labels, CLASSIFICATION, groups=ids)
    return labeled


def regression_dataset(ds: SweepDataset, objective: str = "latency_seconds",
                       records: Optional[Iterable[MeasurementRecord]] = None) -> LabeledDataset:
    """Features plus encoded configuration -> objective value, feasible rows only."""
    objective, _ = resolve_objective(objective)
    if not ds.has_objective(objective):
        raise DatasetSchemaError(f"dataset has no objective column '{objective}'")
    rows, targets, groups = [], [], []
    for r in ds.records if records is None else records:
        value = r.objective(objective) if r.feasible else None
        if value is None:
            continue
        rows.append(np.concatenate([r.features.as_vector(), ds.space.encode(r.config)]))
        targets.append(value)
        groups.append(r.matrix_id)
    names = FEATURE_NAMES + ds.space.names
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return LabeledDataset(names, X, targets, REGRESSION, groups=groups)


def summarize_power_trace(timestamps: Sequence[float], watts: Sequence[float],
                          idle_watts: Optional[float] = None) -> Tuple[float, float]:
    """Average power and energy of a sampled power trace.

    Samples at or below ``idle_watts`` are dropped. The average is the
    arithmetic mean of the rest; energy is their trapezoidal integral.
    """
    t = np.asarray(timestamps, dtype=np.float64)
    w = np.asarray(watts, dtype=np.float64)
    if t.shape != w.shape or t.ndim != 1:
        raise ValueError("timestamps and watts must be equal-length sequences")
    if np.any(np.diff(t) < 0):
        raise ValueError("timestamps must be non-decreasing")
    if idle_watts is not None:
        busy = w > idle_watts
        t, w = t[busy], w[busy]
    if w.size == 0:
        raise InsufficientDataError("power trace has no non-idle samples")
    energy = float(np.sum((w[1:] + w[:-1]) * 0.5 * np.diff(t)))
    return float(w.mean()), energy
