"""Holdout metrics: accuracy, macro-F1 and confusion counts; MSE and R^2."""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ModelSchemaError
from .learners import CLASSIFICATION, LabeledDataset, TrainedModel

logger = logging.getLogger(__name__)

R2_FLOOR = -1e12


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one model on one holdout set.

    Regression metrics are computed in the model's target space (after the
    log transform when the model uses one); ``target_transform`` says which.
    """

    task: str
    n: int
    accuracy: Optional[float] = None
    macro_f1: Optional[float] = None
    labels: Tuple[str, ...] = ()
    confusion: Dict[str, Dict[str, int]] = field(default_factory=dict)
    mse: Optional[float] = None
    r2: Optional[float] = None
    target_transform: str = "identity"

    def __post_init__(self):
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy out of range: {self.accuracy}")
        if self.macro_f1 is not None and not 0.0 <= self.macro_f1 <= 1.0:
            raise ValueError(f"macro_f1 out of range: {self.macro_f1}")
        if self.mse is not None and self.mse < 0:
            raise ValueError(f"mse negative: {self.mse}")
        if self.r2 is not None and self.r2 > 1.0:
            raise ValueError(f"r2 above 1: {self.r2}")

    @property
    def score(self) -> float:
        """Higher is better: accuracy, or negated MSE."""
        return self.accuracy if self.task == CLASSIFICATION else -self.mse

    def to_dict(self) -> dict:
        data = asdict(self)
        data["labels"] = list(self.labels)
        return data


def classification_metrics(truth: Sequence[str], predicted: Sequence[str]) -> dict:
    truth = [str(t) for t in truth]
    predicted = [str(p) for p in predicted]
    labels = tuple(sorted(set(truth) | set(predicted)))
    confusion = {t: {p: 0 for p in labels} for t in labels}
    for t, p in zip(truth, predicted):
        confusion[t][p] += 1

    f1_scores = []
    for label in labels:
        tp = confusion[label][label]
        fp = sum(confusion[t][label] for t in labels) - tp
        fn = sum(confusion[label].values()) - tp
        denominator = 2 * tp + fp + fn
        f1_scores.append(2 * tp / denominator if denominator else 0.0)

    correct = sum(confusion[label][label] for label in labels)
    return {
        "accuracy": correct / len(truth) if truth else 0.0,
        "macro_f1": float(np.mean(f1_scores)) if f1_scores else 0.0,
        "labels": labels,
        "confusion": confusion,
    }


def regression_metrics(truth: Sequence[float], predicted: Sequence[float]) -> dict:
    truth = np.asarray(truth, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    residual = truth - predicted
    ss_res = float(np.dot(residual, residual))
    ss_tot = float(np.sum((truth - truth.mean()) ** 2)) if truth.size else 0.0
    if ss_tot > 0:
        r2 = max(1.0 - ss_res / ss_tot, R2_FLOOR)
    else:
        scale = max(1.0, float(np.dot(truth, truth)))
        r2 = 0.0 if ss_res <= 1e-24 * scale else R2_FLOOR
    return {"mse": ss_res / truth.size if truth.size else 0.0, "r2": r2}


def evaluate(model: TrainedModel, holdout: LabeledDataset) -> EvalReport:
    """Score ``model`` on ``holdout``."""
    if holdout.n_rows == 0:
        raise ValueError("holdout set is empty")
    if len(holdout.feature_names) != len(model.feature_names):
        raise ModelSchemaError(
            f"holdout has {len(holdout.feature_names)} features, model expects "
            f"{len(model.feature_names)}")
    if holdout.task != model.task:
        raise ModelSchemaError(f"holdout is {holdout.task}, model is {model.task}")

    if model.task == CLASSIFICATION:
        metrics = classification_metrics(holdout.y, model.predict(holdout.X))
        return EvalReport(task=model.task, n=holdout.n_rows, **metrics)

    truth = model.transform_targets(holdout.y)
    metrics = regression_metrics(truth, model.predict_raw(holdout.X))
    return EvalReport(task=model.task, n=holdout.n_rows, target_transform=model.target_transform,
                      **metrics)
