"""Self-describing JSON persistence for trained models and model pipelines."""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from .errors import ModelSchemaError
from .learners import ESTIMATORS, TASKS, FeatureScaler, TrainedModel

logger = logging.getLogger(__name__)

MODEL_FORMAT = "spmvtune-model"
MODEL_VERSION = 1
MANIFEST_FILE = "manifest.json"
OVERHEAD_FILE = "overhead_model.json"
LATENCY_REGRESSOR = "latency_seconds"

PathLike = Union[str, Path]


def dumps(document: Any) -> str:
    """Canonical JSON: sorted keys, exact float repr, trailing newline."""
    return json.dumps(document, sort_keys=True, indent=1) + "\n"


def write_document(document: Any, path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps(document), encoding="utf-8")
    os.replace(tmp, path)


def read_document(path: PathLike) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ModelSchemaError(f"{path}: cannot read model file: {e}") from e
    except json.JSONDecodeError as e:
        raise ModelSchemaError(f"{path}: not valid JSON: {e}") from e


def model_to_document(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "task": model.task,
        "feature_names": list(model.feature_names),
        "classes": list(model.classes),
        "params": model.params,
        "seed": model.seed,
        "target_transform": model.target_transform,
        "fingerprint": model.fingerprint,
        "scaler": model.scaler.to_dict() if model.scaler is not None else None,
        "meta": model.meta,
        "body": model.estimator.to_dict(),
    }


def model_from_document(document: dict, feature_names: Optional[Sequence[str]] = None,
                        classes: Optional[Sequence[str]] = None, source: str = "<document>") -> TrainedModel:
    """Rebuild a model, rejecting foreign documents and schema mismatches."""
    if not isinstance(document, dict) or document.get("format") != MODEL_FORMAT:
        raise ModelSchemaError(f"{source}: not a {MODEL_FORMAT} document")
    if document.get("version") != MODEL_VERSION:
        raise ModelSchemaError(
            f"{source}: model version {document.get('version')} is not supported "
            f"(expected {MODEL_VERSION})")
    kind = document.get("kind")
    if kind not in ESTIMATORS:
        raise ModelSchemaError(f"{source}: unknown model kind {kind!r}")
    if document.get("task") not in TASKS:
        raise ModelSchemaError(f"{source}: unknown task {document.get('task')!r}")

    stored_features = tuple(document["feature_names"])
    if feature_names is not None and tuple(feature_names) != stored_features:
        if len(feature_names) != len(stored_features):
            raise ModelSchemaError(
                f"{source}: model has {len(stored_features)} features, caller has {len(feature_names)}")
        raise ModelSchemaError(
            f"{source}: feature names {list(stored_features)} do not match {list(feature_names)}")
    stored_classes = tuple(document["classes"])
    if classes is not None and tuple(classes) != stored_classes:
        raise ModelSchemaError(
            f"{source}: label alphabet {list(stored_classes)} does not match {list(classes)}")

    try:
        estimator = ESTIMATORS[kind].from_dict(document["body"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelSchemaError(f"{source}: malformed model body: {e}") from e
    scaler = FeatureScaler.from_dict(document["scaler"]) if document.get("scaler") else None
    return TrainedModel(estimator=estimator, task=document["task"], feature_names=stored_features,
                        classes=stored_classes, target_transform=document["target_transform"],
                        scaler=scaler, seed=document.get("seed", 0),
                        fingerprint=document.get("fingerprint", ""), meta=document.get("meta", {}))


def save_model(model: TrainedModel, path: PathLike):
    write_document(model_to_document(model), path)
    logger.info("Saved %s %s model to %s", model.kind, model.task, path)


def load_model(path: PathLike, feature_names: Optional[Sequence[str]] = None,
               classes: Optional[Sequence[str]] = None) -> TrainedModel:
    return model_from_document(read_document(path), feature_names, classes, source=str(path))


@dataclass
class ModelPipeline:
    """Per-dimension classifiers and objective regressors trained together."""

    manifest: Dict[str, Any]
    classifiers: Dict[str, TrainedModel] = field(default_factory=dict)
    regressors: Dict[str, TrainedModel] = field(default_factory=dict)

    @property
    def objective(self) -> str:
        return self.manifest["objective"]

    @property
    def direction(self) -> str:
        return self.manifest["direction"]

    @property
    def feature_names(self):
        return tuple(self.manifest["feature_names"])

    @property
    def latency_regressor(self) -> TrainedModel:
        try:
            return self.regressors[LATENCY_REGRESSOR]
        except KeyError:
            raise ModelSchemaError("pipeline has no latency regressor") from None

    def fingerprints(self) -> Dict[str, str]:
        found = {f"classifier_{d}": m.fingerprint for d, m in self.classifiers.items()}
        found.update({f"regressor_{n}": m.fingerprint for n, m in self.regressors.items()})
        return dict(sorted(found.items()))


def save_pipeline(pipeline: ModelPipeline, directory: PathLike):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = dict(pipeline.manifest)
    manifest["classifiers"] = sorted(pipeline.classifiers)
    manifest["regressors"] = sorted(pipeline.regressors)
    for dimension, model in pipeline.classifiers.items():
        save_model(model, directory / f"classifier_{dimension}.json")
    for name, model in pipeline.regressors.items():
        save_model(model, directory / f"regressor_{name}.json")
    write_document(manifest, directory / MANIFEST_FILE)
    logger.info("Saved model pipeline to %s", directory)


def load_pipeline(directory: PathLike) -> ModelPipeline:
    directory = Path(directory)
    manifest = read_document(directory / MANIFEST_FILE)
    if not isinstance(manifest, dict) or "objective" not in manifest:
        raise ModelSchemaError(f"{directory}: manifest is missing or malformed")
    feature_names = manifest.get("feature_names")
    classifiers = {}
    for dimension in manifest.get("classifiers", []):
        classifiers[dimension] = load_model(directory / f"classifier_{dimension}.json",
                                            feature_names=feature_names)
    regressors = {}
    for name in manifest.get("regressors", []):
        regressors[name] = load_model(directory / f"regressor_{name}.json")
    return ModelPipeline(manifest=manifest, classifiers=classifiers, regressors=regressors)
