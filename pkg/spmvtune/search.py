"""Seeded random hyperparameter search with a single holdout split."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from .learners import CLASSIFICATION, LabeledDataset, TrainedModel, train_model
from .metrics import EvalReport, evaluate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntRange:
    """Inclusive integer range sampled uniformly."""

    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"empty range [{self.low}, {self.high}]")

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.low, self.high + 1))

    def to_dict(self) -> dict:
        return {"low": self.low, "high": self.high}


Dimension = Union[IntRange, Sequence[Any]]

TREE_SPACE: Dict[str, Dimension] = {
    "criterion": ["gini", "entropy"],
    "splitter": ["best", "random"],
    "max_depth": IntRange(1, 20),
    "min_samples_leaf": IntRange(1, 5),
}
FOREST_SPACE: Dict[str, Dimension] = {
    "criterion": ["gini", "entropy"],
    "n_estimators": [50, 100, 150, 200],
    "max_depth": IntRange(1, 20),
    "min_samples_leaf": IntRange(1, 5),
}
CENTROID_SPACE: Dict[str, Dimension] = {"metric": ["manhattan", "euclidean"]}
KNN_SPACE: Dict[str, Dimension] = {"n_neighbors": IntRange(1, 10),
                                   "metric": ["manhattan", "euclidean"]}
LINEAR_SPACE: Dict[str, Dimension] = {"fit_intercept": [True]}

DEFAULT_SPACES = {
    "decision_tree": TREE_SPACE,
    "random_forest": FOREST_SPACE,
    "nearest_centroid": CENTROID_SPACE,
    "knn": KNN_SPACE,
    "linear": LINEAR_SPACE,
}


def default_space(learner: str, task: str = CLASSIFICATION) -> Dict[str, Dimension]:
    """Search ranges for ``learner``; regression drops the split criterion."""
    space = dict(DEFAULT_SPACES[learner])
    if task != CLASSIFICATION:
        space.pop("criterion", None)
    return space


@dataclass(frozen=True)
class TrialRecord:
    index: int
    params: Dict[str, Any]
    seed: int
    score: float

    def to_dict(self) -> dict:
        return {"index": self.index, "params": dict(self.params), "seed": self.seed,
                "score": self.score}


@dataclass
class SearchResult:
    model: TrainedModel
    report: EvalReport
    params: Dict[str, Any]
    trials: List[TrialRecord] = field(default_factory=list)

    @property
    def best_index(self) -> int:
        return int(self.model.meta.get("trial", 0))


def sample_point(space: Mapping[str, Dimension], rng: np.random.Generator) -> Dict[str, Any]:
    """One point, dimensions drawn in sorted-name order."""
    point = {}
    for name in sorted(space):
        dimension = space[name]
        if isinstance(dimension, IntRange):
            point[name] = dimension.sample(rng)
        else:
            values = list(dimension)
            if not values:
                raise ValueError(f"dimension '{name}' has no values")
            value = values[int(rng.integers(len(values)))]
            point[name] = value.item() if isinstance(value, np.generic) else value
    return point


def random_search(space: Mapping[str, Dimension], data: LabeledDataset, trials: int = 20,
                  split: float = 0.8, seed: int = 0, learner: str = "decision_tree",
                  n_jobs: int = 1, holdout: Optional[LabeledDataset] = None) -> SearchResult:
    """Train ``trials`` sampled configurations and keep the best on the holdout.

    Selection is by accuracy (classification) or MSE (regression); the earliest
    trial wins ties. The split uses ``seed`` and so does the trial sequence,
    so a longer search extends a shorter one with the same seed.
    """
    if not space:
        raise ValueError("search space is empty")
    if trials < 1:
        raise ValueError("trials must be at least 1")

    if holdout is None:
        train, holdout = data.split(split, seed)
    else:
        train = data
    rng = np.random.default_rng([seed, 1])

    best: Optional[SearchResult] = None
    log: List[TrialRecord] = []
    for index in range(trials):
        params = sample_point(space, rng)
        trial_seed = int(rng.integers(2 ** 31))
        model = train_model(learner, train, params, seed=trial_seed, n_jobs=n_jobs)
        report = evaluate(model, holdout)
        log.append(TrialRecord(index, params, trial_seed, report.score))
        logger.debug("Trial %d %s: score %.6g", index, params, report.score)
        if best is None or report.score > best.report.score:
            model.meta["trial"] = index
            best = SearchResult(model=model, report=report, params=params)

    best.trials = log
    logger.info("Random search (%s, %d trials): best trial %d score %.6g",
                learner, trials, best.best_index, best.report.score)
    return best
