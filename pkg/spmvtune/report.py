"""Improvement tables, feature correlations and overhead tables."""

import logging
import math
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .dataset import MIN, ConfigPoint, SweepDataset, resolve_objective
from .features import FEATURE_NAMES
from .formats import FORMAT_NAMES
from .harness import OverheadObservation

logger = logging.getLogger(__name__)

GMEAN_LABEL = "GMean"
MEAN_LABEL = "mean"
FLOAT_FORMAT = "%.6g"


def improvement_ratio(default: float, chosen: float, direction: str = MIN) -> float:
    """chosen/default for minimised objectives, default/chosen for maximised ones."""
    if default <= 0 or chosen <= 0:
        raise ValueError(f"objective values must be positive, got default={default}, chosen={chosen}")
    return chosen / default if direction == MIN else default / chosen


def improvement_percent(default: float, chosen: float, direction: str = MIN) -> float:
    """(default - chosen) / default x 100 for a minimised objective."""
    return (1.0 - improvement_ratio(default, chosen, direction)) * 100.0


def gmean_improvement(ratios: Sequence[float]) -> float:
    """1 - geometric mean of the ratios, in percent; 0 for no ratios."""
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.size == 0:
        return 0.0
    return (1.0 - math.exp(float(np.mean(np.log(ratios))))) * 100.0


def _lookup(ds: SweepDataset, matrix_id: str, point: ConfigPoint, objective: str) -> Optional[float]:
    for record in ds.records_for(matrix_id):
        if record.config.key == point.key:
            return record.objective(objective) if record.feasible else None
    return None


def improvement_table(ds: SweepDataset, chosen: Mapping[str, ConfigPoint], default_point: ConfigPoint,
                      objective: str = "latency_seconds",
                      direction: Optional[str] = None) -> pd.DataFrame:
    """Per-matrix default vs chosen objective with a trailing GMean row.

    Matrices whose default or chosen point has no feasible record are left out.
    """
    objective, direction = resolve_objective(objective, direction)
    rows, ratios = [], []
    for matrix_id in sorted(chosen):
        point = chosen[matrix_id]
        default_value = _lookup(ds, matrix_id, default_point, objective)
        chosen_value = _lookup(ds, matrix_id, point, objective)
        if default_value is None or chosen_value is None:
            logger.warning("Leaving %s out of the report: no feasible measurement for %s",
                           matrix_id, default_point if default_value is None else point)
            continue
        ratio = improvement_ratio(default_value, chosen_value, direction)
        ratios.append(ratio)
        rows.append({"matrix_id": matrix_id, "config": point.key, "default": default_value,
                     "chosen": chosen_value, "improvement_percent": (1.0 - ratio) * 100.0})

    table = pd.DataFrame(rows, columns=["matrix_id", "config", "default", "chosen",
                                        "improvement_percent"])
    gmean = {"matrix_id": GMEAN_LABEL, "config": "", "default": np.nan, "chosen": np.nan,
             "improvement_percent": gmean_improvement(ratios)}
    return pd.concat([table, pd.DataFrame([gmean])], ignore_index=True)


def feature_correlation(ds: SweepDataset) -> pd.DataFrame:
    """Pearson correlation of the eight features over the dataset's matrices."""
    frame = pd.DataFrame([ds.features_for(m).to_dict() for m in ds.matrix_ids()],
                         columns=list(FEATURE_NAMES), dtype=np.float64)
    return frame.corr(method="pearson")


def overhead_table(observations: Sequence[OverheadObservation],
                   formats: Sequence[str] = FORMAT_NAMES) -> pd.DataFrame:
    """Observations by ascending nnz, with f+c per format and a mean row."""
    rows = []
    for o in sorted(observations, key=lambda o: (o.nnz, o.matrix_id)):
        row: Dict[str, Union[str, float]] = {"matrix_id": o.matrix_id, "nnz": o.nnz,
                                             "f_latency": o.f_latency}
        for fmt in formats:
            c = o.c_latency.get(fmt)
            row[f"c_latency_{fmt}"] = np.nan if c is None else c
        for fmt in formats:
            c = o.c_latency.get(fmt)
            row[f"f_plus_c_{fmt}"] = np.nan if c is None else o.f_latency + c
        rows.append(row)
    columns = (["matrix_id", "nnz", "f_latency"] + [f"c_latency_{f}" for f in formats]
               + [f"f_plus_c_{f}" for f in formats])
    table = pd.DataFrame(rows, columns=columns)
    if rows:
        mean = table[columns[2:]].mean(axis=0, skipna=True).to_dict()
        mean.update({"matrix_id": MEAN_LABEL, "nnz": np.nan})
        table = pd.concat([table, pd.DataFrame([mean], columns=columns)], ignore_index=True)
    return table


def render(table: pd.DataFrame, fmt: str = "text", index: bool = False) -> str:
    """Deterministic text or CSV rendering."""
    if fmt == "csv":
        return table.to_csv(index=index, float_format=FLOAT_FORMAT, na_rep="")
    if fmt == "text":
        return table.to_string(index=index, float_format=lambda v: FLOAT_FORMAT % v, na_rep="-") + "\n"
    raise ValueError(f"report format must be 'text' or 'csv', got {fmt!r}")
