"""Compile-time and run-time optimisation built on the trained models.

Compile-time mode keeps the matrix in CSR and predicts every other
configuration dimension. Run-time mode predicts the best format and converts
only when the predicted gain over the expected iterations beats the predicted
overhead of feature extraction, prediction and conversion.
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .dataset import (MIN, ConfigPoint, ConfigSpace, SweepDataset, label_dataset,
                      regression_dataset, resolve_objective)
from .errors import InfeasibleFormatError, InsufficientDataError, MemoryGuardError, ModelSchemaError
from .features import FEATURE_NAMES, SparsityFeatures, extract_features
from .formats import is_feasible, required_slots
from .harness import (EXECUTABLE_DIMENSIONS, FormatParams, OverheadObservation, TimingParams,
                      executable_point, input_vector, measure_point)
from .kernels import time_kernel
from .learners import REGRESSION, LabeledDataset, TrainedModel, train_model
from .logging_config import log_performance_metrics
from .matrix_io import TripletMatrix, read_matrix_market
from .metrics import EvalReport, evaluate
from .model_store import (LATENCY_REGRESSOR, ModelPipeline, model_from_document, model_to_document,
                          read_document, write_document)
from .search import default_space, random_search

logger = logging.getLogger(__name__)

CONVERT = "convert"
KEEP_DEFAULT = "keep-default"
CLASSIFY, REGRESS = "classify", "regress"
STRATEGIES = (CLASSIFY, REGRESS)

OVERHEAD_FORMAT = "spmvtune-overhead-model"
OVERHEAD_VERSION = 1
MIN_OVERHEAD_OBSERVATIONS = 10
PREDICTION_TIMING = TimingParams(min_total_seconds=0.01, max_reps=1000, warmup=1)

# Dimensions of imported GPU datasets rendered as advisory build flags
FLAG_TEMPLATES = {
    "maxrregcount": "--maxrregcount={}",
    "tb_size": "-DSPMV_TB_SIZE={}",
    "memory_config": "-DSPMV_CACHE_CONFIG={}",
}

MatrixInput = Union[str, Path, TripletMatrix]


def _load(matrix: MatrixInput) -> TripletMatrix:
    return matrix if isinstance(matrix, TripletMatrix) else read_matrix_market(matrix)


def pipeline_space(pipeline: ModelPipeline) -> ConfigSpace:
    try:
        return ConfigSpace.from_dict(pipeline.manifest["space"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelSchemaError(f"pipeline manifest has no valid configuration space: {e}") from e


def _check_schema(pipeline: ModelPipeline):
    if pipeline.feature_names != FEATURE_NAMES:
        raise ModelSchemaError(
            f"pipeline features {list(pipeline.feature_names)} do not match {list(FEATURE_NAMES)}")


def render_flags(values: Dict[str, Any]) -> str:
    """Advisory flag line for GPU dimensions; nothing is compiled."""
    return " ".join(FLAG_TEMPLATES[name].format(value) for name, value in values.items()
                    if name in FLAG_TEMPLATES)


def should_convert(expected_iterations: int, gain_per_iteration: float, overhead: float) -> bool:
    return expected_iterations * gain_per_iteration > overhead


@dataclass(frozen=True)
class Recommendation:
    matrix_id: str
    objective: str
    direction: str
    strategy: str
    values: Dict[str, Any]
    flags: str = ""
    fingerprints: Dict[str, str] = field(default_factory=dict)
    measured: Optional[Dict[str, float]] = None

    def point(self) -> ConfigPoint:
        return ConfigPoint.from_mapping(self.values)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class RuntimeDecision:
    """Outcome of the run-time gate: convert iff predicted gain beats predicted overhead."""

    matrix_id: str
    default_format: str
    predicted_format: str
    expected_iterations: int
    default_latency_seconds: float
    predicted_latency_seconds: float
    predicted_gain_seconds: float
    predicted_overhead_seconds: float
    overhead: Dict[str, float]
    verdict: str
    reason: str = ""
    config: Dict[str, Any] = field(default_factory=dict)
    actual_conversion_seconds: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def gate_decision(matrix_id: str, default_format: str, predicted_format: str,
                  default_latency: float, predicted_latency: float,
                  overhead: Dict[str, float], expected_iterations: int,
                  infeasible_reason: Optional[str] = None,
                  config: Optional[Dict[str, Any]] = None) -> RuntimeDecision:
    """Apply the gain/overhead gate to already-predicted quantities."""
    if int(expected_iterations) < 1:
        raise ValueError(f"expected_iterations must be at least 1, got {expected_iterations}")
    expected_iterations = int(expected_iterations)

    gain_per_iteration = max(0.0, default_latency - predicted_latency)
    reason = ""
    if infeasible_reason:
        gain_per_iteration = 0.0
        reason = f"predicted format {predicted_format} is infeasible: {infeasible_reason}"
    elif predicted_format == default_format:
        gain_per_iteration = 0.0
        reason = "predicted format is the default format"

    total_overhead = float(sum(overhead.values()))
    gain = expected_iterations * gain_per_iteration
    convert_now = should_convert(expected_iterations, gain_per_iteration, total_overhead)
    if not reason:
        relation = "exceeds" if convert_now else "does not exceed"
        reason = f"predicted gain {gain:.6g} s {relation} predicted overhead {total_overhead:.6g} s"
    return RuntimeDecision(
        matrix_id=matrix_id, default_format=default_format, predicted_format=predicted_format,
        expected_iterations=expected_iterations, default_latency_seconds=float(default_latency),
        predicted_latency_seconds=float(predicted_latency), predicted_gain_seconds=gain,
        predicted_overhead_seconds=total_overhead, overhead=dict(overhead),
        verdict=CONVERT if convert_now else KEEP_DEFAULT, reason=reason, config=dict(config or {}))


# -- overhead model -----------------------------------------------------------

@dataclass
class OverheadModel:
    """Regressors for feature-extraction and per-format conversion time plus
    the measured prediction-call constants."""

    f_model: TrainedModel
    c_models: Dict[str, TrainedModel]
    o_latency: float = 0.0
    p_latency: float = 0.0
    reports: Dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        if self.o_latency < 0 or self.p_latency < 0:
            raise ValueError("o_latency and p_latency must be non-negative")

    @staticmethod
    def _row(features: SparsityFeatures) -> np.ndarray:
        return features.as_vector()[None, :]

    def predict_f(self, features: SparsityFeatures) -> float:
        return max(0.0, float(self.f_model.predict(self._row(features))[0]))

    def predict_c(self, features: SparsityFeatures, fmt: str) -> float:
        try:
            model = self.c_models[fmt]
        except KeyError:
            raise ModelSchemaError(f"overhead model has no conversion regressor for '{fmt}'") from None
        return max(0.0, float(model.predict(self._row(features))[0]))

    def breakdown(self, features: SparsityFeatures, fmt: Optional[str]) -> Dict[str, float]:
        """Overhead components; ``fmt=None`` means no conversion is made."""
        c_latency = 0.0 if fmt is None else self.predict_c(features, fmt)
        return {"f_latency": self.predict_f(features), "c_latency": c_latency,
                "o_latency": self.o_latency, "p_latency": self.p_latency}

    def to_document(self) -> dict:
        return {"format": OVERHEAD_FORMAT, "version": OVERHEAD_VERSION,
                "f_latency": model_to_document(self.f_model),
                "c_latency": {fmt: model_to_document(m) for fmt, m in sorted(self.c_models.items())},
                "o_latency": self.o_latency, "p_latency": self.p_latency, "reports": self.reports}

    @classmethod
    def from_document(cls, document: dict, source: str = "<document>") -> "OverheadModel":
        if not isinstance(document, dict) or document.get("format") != OVERHEAD_FORMAT:
            raise ModelSchemaError(f"{source}: not a {OVERHEAD_FORMAT} document")
        if document.get("version") != OVERHEAD_VERSION:
            raise ModelSchemaError(f"{source}: overhead model version {document.get('version')} "
                                   f"is not supported (expected {OVERHEAD_VERSION})")
        f_model = model_from_document(document["f_latency"], FEATURE_NAMES, source=source)
        c_models = {fmt: model_from_document(doc, FEATURE_NAMES, source=source)
                    for fmt, doc in document["c_latency"].items()}
        return cls(f_model, c_models, float(document["o_latency"]), float(document["p_latency"]),
                   dict(document.get("reports", {})))

    def save(self, path):
        write_document(self.to_document(), path)
        logger.info("Saved overhead model to %s", path)

    @classmethod
    def load(cls, path) -> "OverheadModel":
        return cls.from_document(read_document(path), source=str(path))


def _fit_overhead_regressor(name: str, X: np.ndarray, y: Sequence[float], groups: Sequence[str],
                            learner: str, hp: Optional[dict], seed: int, split: float,
                            n_jobs: int) -> Tuple[TrainedModel, EvalReport]:
    data = LabeledDataset(FEATURE_NAMES, X, y, REGRESSION, groups=groups)
    train, holdout = data.split(split, seed)
    model = train_model(learner, train, hp, seed=seed, n_jobs=n_jobs)
    report = evaluate(model, holdout)
    logger.info("Overhead regressor %s (%s): holdout R^2 %.4f, MSE %.4g", name, learner,
                report.r2, report.mse)
    return model, report


@log_performance_metrics
def train_overhead_model(observations: Sequence[OverheadObservation], learner: str = "random_forest",
                         hp: Optional[dict] = None, seed: int = 0, split: float = 0.8,
                         n_jobs: int = 1, timing: TimingParams = PREDICTION_TIMING,
                         clock: Callable[[], float] = time.perf_counter) -> OverheadModel:
    """Fit f and per-format c regressors on features; hold out ``1 - split``.

    ``o_latency`` is the mean time of one overhead prediction by the fitted
    model on each observation's features. ``p_latency`` is taken from the
    observations.
    """
    if len(observations) < MIN_OVERHEAD_OBSERVATIONS:
        raise InsufficientDataError(
            f"need at least {MIN_OVERHEAD_OBSERVATIONS} overhead observations, got {len(observations)}")
    X = np.stack([o.features.as_vector() for o in observations])
    ids = [o.matrix_id for o in observations]
    f_model, f_report = _fit_overhead_regressor(
        "f_latency", X, [o.f_latency for o in observations], ids, learner, hp, seed, split, n_jobs)
    reports = {"f_latency": f_report.to_dict()}

    c_models = {}
    formats = sorted({fmt for o in observations for fmt in o.c_latency})
    for fmt in formats:
        rows = [i for i, o in enumerate(observations) if o.c_latency.get(fmt) is not None]
        if len(rows) < MIN_OVERHEAD_OBSERVATIONS:
            logger.warning("Skipping conversion regressor for %s: only %d feasible observations",
                           fmt, len(rows))
            continue
        c_models[fmt], report = _fit_overhead_regressor(
            f"c_latency[{fmt}]", X[rows], [observations[i].c_latency[fmt] for i in rows],
            [ids[i] for i in rows], learner, hp, seed, split, n_jobs)
        reports[f"c_latency[{fmt}]"] = report.to_dict()

    model = OverheadModel(f_model, c_models,
                          p_latency=float(np.mean([o.p_latency for o in observations])),
                          reports=reports)
    target = next(iter(sorted(c_models)), None)
    model.o_latency = float(np.mean([
        time_kernel(lambda: model.breakdown(o.features, target), timing.min_total_seconds,
                    timing.max_reps, timing.warmup, clock).mean_seconds
        for o in observations]))
    logger.info("Overhead model prediction takes %.3e s", model.o_latency)
    return model


# -- training pipeline --------------------------------------------------------

def _search_or_fit(name: str, data: LabeledDataset, learner: str, trials: int, split: float,
                   seed: int, n_jobs: int, notes: List[str]) -> Tuple[TrainedModel, Optional[EvalReport]]:
    groups = set(data.groups.tolist()) if data.groups is not None else set(range(data.n_rows))
    if len(groups) < 2:
        notes.append(f"{name}: fewer than two matrices, trained without a holdout")
        logger.warning("%s: fewer than two matrices, training without holdout", name)
        return train_model(learner, data, seed=seed, n_jobs=n_jobs), None
    result = random_search(default_space(learner, data.task), data, trials=trials, split=split,
                           seed=seed, learner=learner, n_jobs=n_jobs)
    return result.model, result.report


@log_performance_metrics
def train_pipeline(ds: SweepDataset, objective: str = "latency_seconds",
                   direction: Optional[str] = None, learner: str = "decision_tree",
                   regressor_learner: str = "decision_tree", trials: int = 20,
                   split: float = 0.8, seed: int = 0, n_jobs: int = 1) -> ModelPipeline:
    """One classifier per configuration dimension plus latency and objective regressors."""
    objective, direction = resolve_objective(objective, direction)
    labeled = label_dataset(ds, objective, direction)
    notes: List[str] = []
    reports: Dict[str, Optional[dict]] = {}

    classifiers = {}
    for dimension, data in labeled.items():
        if len(data.classes) < 2:
            note = f"classifier_{dimension}: degenerate labels, single class {data.classes[0]!r}"
            notes.append(note)
            logger.warning(note)
        model, report = _search_or_fit(f"classifier_{dimension}", data, learner, trials, split,
                                       seed, n_jobs, notes)
        classifiers[dimension] = model
        reports[f"classifier_{dimension}"] = report.to_dict() if report else None

    regressors = {}
    for name in dict.fromkeys((LATENCY_REGRESSOR, objective)):
        data = regression_dataset(ds, name)
        if data.n_rows == 0:
            raise InsufficientDataError(f"no feasible records carry '{name}'")
        model, report = _search_or_fit(f"regressor_{name}", data, regressor_learner, trials, split,
                                       seed, n_jobs, notes)
        regressors[name] = model
        reports[f"regressor_{name}"] = report.to_dict() if report else None

    manifest = {
        "objective": objective,
        "direction": direction,
        "space": ds.space.to_dict(),
        "feature_names": list(FEATURE_NAMES),
        "learner": learner,
        "regressor_learner": regressor_learner,
        "trials": trials,
        "split": split,
        "seed": seed,
        "dataset": {"records": len(ds), "matrices": len(ds.matrix_ids()),
                    "fingerprint": ds.fingerprint.to_dict()},
        "reports": reports,
        "notes": notes,
    }
    return ModelPipeline(manifest=manifest, classifiers=classifiers, regressors=regressors)


# -- compile-time mode ----------------------------------------------------------

def _predict_dimension(pipeline: ModelPipeline, space: ConfigSpace, dimension: str,
                       row: np.ndarray):
    try:
        model = pipeline.classifiers[dimension]
    except KeyError:
        raise ModelSchemaError(f"pipeline has no classifier for dimension '{dimension}'") from None
    label = str(model.predict(row)[0])
    try:
        return space.dimension(dimension).parse(label)
    except ValueError as e:
        raise ModelSchemaError(f"classifier_{dimension}: {e}") from None


def _score_points(model: TrainedModel, space: ConfigSpace, features: SparsityFeatures,
                  points: Sequence[ConfigPoint]) -> np.ndarray:
    base = features.as_vector()
    X = np.stack([np.concatenate([base, space.encode(p)]) for p in points])
    return np.asarray(model.predict(X), dtype=np.float64)


def best_point(model: TrainedModel, space: ConfigSpace, features: SparsityFeatures,
               direction: str = MIN) -> Tuple[ConfigPoint, float]:
    """Point of ``space`` with the best predicted objective; ties to the smaller point."""
    points = space.points()
    scores = _score_points(model, space, features, points)
    sign = 1.0 if direction == MIN else -1.0
    index = min(range(len(points)), key=lambda i: (sign * scores[i], points[i].sort_key))
    return points[index], float(scores[index])


def _restrict_format(space: ConfigSpace, fmt: str) -> ConfigSpace:
    if "format" not in space.names:
        return space
    if fmt not in space.dimension("format").values:
        raise ModelSchemaError(f"format '{fmt}' is not in the trained space "
                               f"{list(space.dimension('format').values)}")
    return space.restrict(format=fmt)


def predict_values(pipeline: ModelPipeline, features: SparsityFeatures,
                   strategy: str = CLASSIFY) -> Dict[str, Any]:
    """Compile-time configuration for one feature vector, format pinned to CSR."""
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    _check_schema(pipeline)
    space = pipeline_space(pipeline)
    csr_space = _restrict_format(space, "csr")
    if strategy == REGRESS:
        try:
            model = pipeline.regressors[pipeline.objective]
        except KeyError:
            raise ModelSchemaError(f"pipeline has no regressor for '{pipeline.objective}'") from None
        point, _ = best_point(model, csr_space, features, pipeline.direction)
        return point.as_dict()

    row = features.as_vector()[None, :]
    return {dimension: "csr" if dimension == "format"
            else _predict_dimension(pipeline, space, dimension, row)
            for dimension in csr_space.names}


@log_performance_metrics
def compile_time_optimize(matrix: MatrixInput, pipeline: ModelPipeline, matrix_id: Optional[str] = None,
                          strategy: str = CLASSIFY, verify: bool = False,
                          default_point: Optional[ConfigPoint] = None,
                          timing: TimingParams = TimingParams(),
                          format_params: FormatParams = FormatParams(),
                          clock: Callable[[], float] = time.perf_counter) -> Recommendation:
    """Predict every dimension except the format, which stays CSR."""
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    _check_schema(pipeline)
    m = _load(matrix)
    if matrix_id is None:
        matrix_id = Path(matrix).stem if not isinstance(matrix, TripletMatrix) else "matrix"
    space = pipeline_space(pipeline)
    values = predict_values(pipeline, extract_features(m), strategy)

    measured = None
    if verify:
        measured = _verify_recommendation(m, space, ConfigPoint.from_mapping(values), default_point,
                                          timing, format_params, clock)

    rec = Recommendation(matrix_id=matrix_id, objective=pipeline.objective,
                         direction=pipeline.direction, strategy=strategy, values=values,
                         flags=render_flags(values), fingerprints=pipeline.fingerprints(),
                         measured=measured)
    logger.info("Recommendation for %s: %s", matrix_id, rec.point())
    return rec


def _verify_recommendation(m: TripletMatrix, space: ConfigSpace, recommended: ConfigPoint,
                           default_point: Optional[ConfigPoint], timing: TimingParams,
                           format_params: FormatParams, clock) -> Optional[Dict[str, float]]:
    if any(name not in EXECUTABLE_DIMENSIONS for name in space.names):
        logger.warning("Cannot verify: space has non-executable dimensions %s", list(space.names))
        return None
    if default_point is None:
        default_point = ConfigPoint(tuple((d.name, d.values[0]) for d in space.dimensions))
    x = input_vector(m.n_cols)
    latencies = {}
    for label, point in (("default", default_point), ("recommended", recommended)):
        fmt, cfg = executable_point(point)
        a = format_params.convert(m, fmt)
        latencies[label] = measure_point(m, a, x, cfg, timing, clock).mean_seconds
    default, chosen = latencies["default"], latencies["recommended"]
    return {"default_latency_seconds": default, "recommended_latency_seconds": chosen,
            "improvement_percent": (default - chosen) / default * 100.0}


# -- run-time mode ----------------------------------------------------------------

def best_config_for_format(pipeline: ModelPipeline, features: SparsityFeatures,
                           fmt: str) -> Tuple[ConfigPoint, float]:
    """Lowest predicted latency over the non-format dimensions, format fixed."""
    space = _restrict_format(pipeline_space(pipeline), fmt)
    return best_point(pipeline.latency_regressor, space, features, MIN)


@log_performance_metrics
def run_time_optimize(matrix: MatrixInput, pipeline: ModelPipeline, overhead_model: OverheadModel,
                      expected_iterations: int, default_format: str = "csr",
                      matrix_id: Optional[str] = None,
                      format_params: FormatParams = FormatParams(),
                      perform_conversion: bool = True,
                      clock: Callable[[], float] = time.perf_counter) -> RuntimeDecision:
    """Predict the best format and gate the conversion on predicted gain vs overhead."""
    if int(expected_iterations) < 1:
        raise ValueError(f"expected_iterations must be at least 1, got {expected_iterations}")
    _check_schema(pipeline)
    m = _load(matrix)
    if matrix_id is None:
        matrix_id = Path(matrix).stem if not isinstance(matrix, TripletMatrix) else "matrix"
    features = extract_features(m)
    row = features.as_vector()[None, :]
    space = pipeline_space(pipeline)

    if "format" not in space.names:
        raise ModelSchemaError("pipeline space has no format dimension")
    predicted_format = _predict_dimension(pipeline, space, "format", row)
    default_config, default_latency = best_config_for_format(pipeline, features, default_format)
    config, predicted_latency = best_config_for_format(pipeline, features, predicted_format)

    infeasible = None
    params = {"block_h": format_params.block_h, "block_w": format_params.block_w,
              "slice_height": format_params.slice_height}
    if not is_feasible(m, default_format, format_params.slot_guard, **params):
        raise InfeasibleFormatError(
            f"{matrix_id}: default format {default_format} needs "
            f"{required_slots(m, default_format, **params)} slots, guard is {format_params.slot_guard}")
    if not is_feasible(m, predicted_format, format_params.slot_guard, **params):
        slots = required_slots(m, predicted_format, **params)
        infeasible = str(MemoryGuardError(predicted_format, slots, format_params.slot_guard))

    converts = infeasible is None and predicted_format != default_format
    overhead = overhead_model.breakdown(features, predicted_format if converts else None)
    decision = gate_decision(matrix_id, default_format, predicted_format, default_latency,
                             predicted_latency, overhead, expected_iterations,
                             infeasible_reason=infeasible,
                             config=(config if infeasible is None else default_config).as_dict())

    if decision.verdict == CONVERT and perform_conversion:
        start = clock()
        format_params.convert(m, predicted_format)
        elapsed = clock() - start
        decision = RuntimeDecision(**{**decision.to_dict(), "actual_conversion_seconds": elapsed})
        logger.info("Converted %s to %s in %.3e s (predicted %.3e s)", matrix_id, predicted_format,
                    elapsed, overhead["c_latency"])
    logger.info("Run-time decision for %s: %s (%s)", matrix_id, decision.verdict, decision.reason)
    return decision
