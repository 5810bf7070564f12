"""From-scratch supervised learners.

Classification: decision tree, random forest, nearest centroid.
Regression: decision tree, random forest, k-nearest neighbours, least squares.

Every learner is a pure function of (data, hyperparameters, seed). Forest
members derive their random streams from ``[seed, tree_index]`` so the result
does not depend on how joblib schedules them.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .errors import InsufficientDataError, ModelSchemaError

logger = logging.getLogger(__name__)

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASKS = (CLASSIFICATION, REGRESSION)

CRITERIA = ("gini", "entropy")
SPLITTERS = ("best", "random")
METRICS = ("manhattan", "euclidean")

LOG_TRANSFORM = "log"
IDENTITY_TRANSFORM = "identity"

_GAIN_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix plus targets; ``groups`` names the matrix behind each row."""

    feature_names: Tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    task: str = CLASSIFICATION
    groups: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2 and X.size == 0:
            X = X.reshape(0, len(self.feature_names))
        if X.ndim != 2:
            raise ValueError(f"feature matrix must be two-dimensional, got shape {X.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        y = np.asarray(self.y, dtype=object if self.task == CLASSIFICATION else np.float64)
        if self.task == CLASSIFICATION:
            y = np.array([str(v) for v in y], dtype=object)
        object.__setattr__(self, "y", y)
        if self.groups is not None:
            object.__setattr__(self, "groups", np.asarray([str(g) for g in self.groups], dtype=object))

        errors = []
        if X.shape[1] != len(self.feature_names):
            errors.append(f"{X.shape[1]} feature columns but {len(self.feature_names)} names")
        if y.shape[0] != X.shape[0]:
            errors.append(f"{X.shape[0]} rows but {y.shape[0]} targets")
        if self.groups is not None and len(self.groups) != X.shape[0]:
            errors.append(f"{X.shape[0]} rows but {len(self.groups)} groups")
        if errors:
            raise ValueError(f"LabeledDataset invalid: {'; '.join(errors)}")

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])

    @property
    def classes(self) -> Tuple[str, ...]:
        if self.task != CLASSIFICATION:
            return ()
        return tuple(sorted(set(self.y.tolist())))

    def subset(self, index) -> "LabeledDataset":
        index = np.asarray(index, dtype=np.int64)
        groups = None if self.groups is None else self.groups[index]
        return LabeledDataset(self.feature_names, self.X[index], self.y[index], self.task, groups)

    def split(self, fraction: float = 0.8, seed: int = 0) -> Tuple["LabeledDataset", "LabeledDataset"]:
        """Seeded train/holdout split; rows sharing a group stay together."""
        if not 0 < fraction < 1:
            raise ValueError(f"split fraction must be in (0, 1), got {fraction}")
        rng = np.random.default_rng(seed)
        if self.groups is None:
            units = np.arange(self.n_rows)
            members = None
        else:
            units, members = np.unique(self.groups, return_inverse=True)
            members = members.ravel()
        if len(units) < 2:
            raise InsufficientDataError(f"need at least 2 rows (or groups) to split, got {len(units)}")

        order = rng.permutation(len(units))
        n_train = min(max(int(round(fraction * len(units))), 1), len(units) - 1)
        train_units = np.sort(order[:n_train])
        if members is None:
            train_mask = np.zeros(self.n_rows, dtype=bool)
            train_mask[train_units] = True
        else:
            train_mask = np.isin(members, train_units)
        return self.subset(np.nonzero(train_mask)[0]), self.subset(np.nonzero(~train_mask)[0])

    def fingerprint(self) -> str:
        """sha256 over feature names, feature matrix and targets."""
        digest = hashlib.sha256()
        digest.update("\x1f".join(self.feature_names).encode("utf-8"))
        digest.update(np.ascontiguousarray(self.X).tobytes())
        if self.task == CLASSIFICATION:
            digest.update("\x1f".join(self.y.tolist()).encode("utf-8"))
        else:
            digest.update(np.ascontiguousarray(self.y, dtype=np.float64).tobytes())
        return digest.hexdigest()


class FeatureScaler:
    """Standardise features; constant columns pass through unscaled."""

    def __init__(self, mean: Sequence[float] = (), std: Sequence[float] = ()):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)

    @property
    def constant(self) -> np.ndarray:
        return ~(self.std > 0)

    def fit(self, X: np.ndarray) -> "FeatureScaler":
        X = np.asarray(X, dtype=np.float64)
        self.mean = X.mean(axis=0)
        self.std = X.std(axis=0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        constant = self.constant
        center = np.where(constant, 0.0, self.mean)
        scale = np.where(constant, 1.0, self.std)
        return (X - center) / scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureScaler":
        return cls(data["mean"], data["std"])


def _impurity(counts: np.ndarray, totals: np.ndarray, criterion: str) -> np.ndarray:
    """Gini or entropy of class-count rows."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals[..., None]
        if criterion == "gini":
            return 1.0 - np.sum(p * p, axis=-1)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
        return -np.sum(p * logs, axis=-1)


class DecisionTree:
    """CART tree with axis-aligned ``x <= threshold`` splits.

    ``splitter="best"`` tries midpoints between consecutive distinct values;
    ``"random"`` draws one uniform threshold per candidate feature. Ties go
    to the lowest feature index, then the lowest threshold. Zero-gain splits
    are taken while a node is impure so XOR-like patterns are learnable.
    """

    kind = "decision_tree"

    def __init__(self, task: str = CLASSIFICATION, criterion: str = "gini",
                 max_depth: Optional[int] = 13, min_samples_leaf: int = 1,
                 max_features=None, splitter: str = "best", random_state=0):
        if task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {task!r}")
        if task == CLASSIFICATION and criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
        if splitter not in SPLITTERS:
            raise ValueError(f"splitter must be one of {SPLITTERS}, got {splitter!r}")
        if max_depth is not None and max_depth < 0:
            raise ValueError("max_depth must be non-negative or None")
        if min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be at least 1")
        self.task = task
        self.criterion = criterion if task == CLASSIFICATION else "squared_error"
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_features = max_features
        self.splitter = splitter
        self.random_state = random_state
        self.n_classes = 0
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[Any] = []

    def get_params(self) -> dict:
        return {"criterion": self.criterion, "max_depth": self.max_depth,
                "min_samples_leaf": self.min_samples_leaf, "max_features": self.max_features,
                "splitter": self.splitter}

    # -- training ---------------------------------------------------------

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: Optional[int] = None) -> "DecisionTree":
        """Fit on ``X``; classification targets are integer codes 0..n_classes-1."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise InsufficientDataError("cannot fit a tree on an empty dataset")
        if self.task == CLASSIFICATION:
            y = np.asarray(y, dtype=np.int64)
            self.n_classes = int(n_classes if n_classes is not None else y.max() + 1)
        else:
            y = np.asarray(y, dtype=np.float64)
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self._rng = np.random.default_rng(self.random_state)
        self._n_candidates = self._resolve_max_features(X.shape[1])
        self._grow(X, y, np.arange(X.shape[0]), 0)
        del self._rng
        return self

    def _resolve_max_features(self, n_features: int) -> int:
        mf = self.max_features
        if mf is None:
            return n_features
        if mf == "sqrt":
            return max(1, math.ceil(math.sqrt(n_features)))
        if mf == "third":
            return max(1, n_features // 3)
        return max(1, min(int(mf), n_features))

    def _leaf_payload(self, y: np.ndarray):
        if self.task == CLASSIFICATION:
            return np.bincount(y, minlength=self.n_classes).astype(np.int64).tolist()
        return float(np.mean(y))

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(None)
        return len(self.feature) - 1

    def _grow(self, X: np.ndarray, y: np.ndarray, index: np.ndarray, depth: int) -> int:
        node = self._new_node()
        y_node = y[index]
        self.value[node] = self._leaf_payload(y_node)

        pure = np.all(y_node == y_node[0])
        if (pure or (self.max_depth is not None and depth >= self.max_depth)
                or index.size < 2 * self.min_samples_leaf):
            return node

        split = self._best_split(X[index], y_node)
        if split is None:
            return node
        feature, threshold = split
        goes_left = X[index, feature] <= threshold
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = self._grow(X, y, index[goes_left], depth + 1)
        self.right[node] = self._grow(X, y, index[~goes_left], depth + 1)
        return node

    def _candidate_features(self, n_features: int) -> np.ndarray:
        if self._n_candidates >= n_features:
            return np.arange(n_features)
        return np.sort(self._rng.choice(n_features, self._n_candidates, replace=False))

    def _best_split(self, X: np.ndarray, y: np.ndarray) -> Optional[Tuple[int, float]]:
        n = X.shape[0]
        msl = self.min_samples_leaf
        best_gain = -np.inf
        best = None
        for feature in self._candidate_features(X.shape[1]):
            column = X[:, feature]
            order = np.argsort(column, kind="stable")
            xs = column[order]
            if xs[0] == xs[-1]:
                continue

            if self.splitter == "random":
                threshold = float(self._rng.uniform(xs[0], xs[-1]))
                n_left = int(np.searchsorted(xs, threshold, side="right"))
                if n_left < msl or n - n_left < msl:
                    continue
                positions = np.array([n_left - 1])
            else:
                positions = np.nonzero(xs[:-1] != xs[1:])[0]
                n_left_all = positions + 1
                positions = positions[(n_left_all >= msl) & (n - n_left_all >= msl)]
                if positions.size == 0:
                    continue
                threshold = None

            gains = self._gains(y[order], positions)
            i = int(np.argmax(gains))
            if gains[i] > best_gain + _GAIN_TOLERANCE:
                best_gain = float(gains[i])
                if threshold is None:
                    lo, hi = xs[positions[i]], xs[positions[i] + 1]
                    threshold = float((lo + hi) / 2.0)
                    if threshold >= hi:
                        threshold = float(lo)
                best = (int(feature), threshold)
        return best

    def _gains(self, ys: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Impurity decrease for splitting sorted targets after each position."""
        n = ys.size
        n_left = (positions + 1).astype(np.float64)
        n_right = n - n_left
        if self.task == CLASSIFICATION:
            onehot = np.zeros((n, self.n_classes), dtype=np.float64)
            onehot[np.arange(n), ys] = 1.0
            cumulative = np.cumsum(onehot, axis=0)
            left = cumulative[positions]
            total = cumulative[-1]
            right = total - left
            parent = _impurity(total[None, :], np.array([float(n)]), self.criterion)[0]
            child = (n_left * _impurity(left, n_left, self.criterion)
                     + n_right * _impurity(right, n_right, self.criterion)) / n
            return parent - child
        sums = np.cumsum(ys)
        squares = np.cumsum(ys * ys)
        left_sse = squares[positions] - sums[positions] ** 2 / n_left
        right_sum = sums[-1] - sums[positions]
        right_sse = (squares[-1] - squares[positions]) - right_sum ** 2 / n_right
        parent_sse = squares[-1] - sums[-1] ** 2 / n
        return (parent_sse - left_sse - right_sse) / n

    # -- inference --------------------------------------------------------

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        feature = np.asarray(self.feature, dtype=np.int64)
        threshold = np.asarray(self.threshold, dtype=np.float64)
        left = np.asarray(self.left, dtype=np.int64)
        right = np.asarray(self.right, dtype=np.int64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = np.nonzero(feature[node] >= 0)[0]
            if active.size == 0:
                return node
            current = node[active]
            goes_left = X[active, feature[current]] <= threshold[current]
            node[active] = np.where(goes_left, left[current], right[current])

    def predict_counts(self, X: np.ndarray) -> np.ndarray:
        table = np.asarray(self.value, dtype=np.float64)
        return table[self.apply(X)]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Class codes (argmax, lowest code on ties) or mean targets."""
        leaves = self.predict_counts(X)
        if self.task == CLASSIFICATION:
            return np.argmax(leaves, axis=1)
        return leaves

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = [0] * self.node_count
        for node in range(self.node_count):
            for child in (self.left[node], self.right[node]):
                if child >= 0:
                    depths[child] = depths[node] + 1
        return max(depths, default=0)

    def leaf_sizes(self) -> List[int]:
        """Training rows per leaf (classification trees only)."""
        return [int(sum(v)) for f, v in zip(self.feature, self.value) if f < 0]

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"params": self.get_params(), "task": self.task, "n_classes": self.n_classes,
                "feature": list(self.feature), "threshold": list(self.threshold),
                "left": list(self.left), "right": list(self.right), "value": list(self.value)}

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        tree = cls(task=data["task"], **data["params"])
        tree.n_classes = int(data["n_classes"])
        tree.feature = [int(v) for v in data["feature"]]
        tree.threshold = [float(v) for v in data["threshold"]]
        tree.left = [int(v) for v in data["left"]]
        tree.right = [int(v) for v in data["right"]]
        tree.value = list(data["value"])
        return tree


class RandomForest:
    """Bagged CART trees; majority vote (lowest class on ties) or mean."""

    kind = "random_forest"

    def __init__(self, task: str = CLASSIFICATION, n_estimators: int = 100,
                 criterion: str = "gini", max_depth: Optional[int] = 15,
                 min_samples_leaf: int = 1, max_features="auto", bootstrap: bool = True,
                 seed: int = 0, n_jobs: int = 1):
        if n_estimators < 1:
            raise ValueError("n_estimators must be at least 1")
        self.task = task
        self.n_estimators = int(n_estimators)
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bool(bootstrap)
        self.seed = seed
        self.n_jobs = n_jobs
        self.n_classes = 0
        self.trees: List[DecisionTree] = []

    def get_params(self) -> dict:
        return {"n_estimators": self.n_estimators, "criterion": self.criterion,
                "max_depth": self.max_depth, "min_samples_leaf": self.min_samples_leaf,
                "max_features": self.max_features, "bootstrap": self.bootstrap}

    def _tree_max_features(self):
        if self.max_features == "auto":
            return "sqrt" if self.task == CLASSIFICATION else "third"
        return self.max_features

    def _fit_tree(self, i: int, X: np.ndarray, y: np.ndarray) -> DecisionTree:
        n = X.shape[0]
        if self.bootstrap:
            sample = np.random.default_rng([self.seed, i, 0]).integers(0, n, n)
        else:
            sample = np.arange(n)
        tree = DecisionTree(task=self.task, criterion=self.criterion, max_depth=self.max_depth,
                            min_samples_leaf=self.min_samples_leaf,
                            max_features=self._tree_max_features(),
                            random_state=[self.seed, i, 1])
        return tree.fit(X[sample], y[sample], n_classes=self.n_classes or None)

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: Optional[int] = None) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise InsufficientDataError("cannot fit a forest on an empty dataset")
        if self.task == CLASSIFICATION:
            y = np.asarray(y, dtype=np.int64)
            self.n_classes = int(n_classes if n_classes is not None else y.max() + 1)
        else:
            y = np.asarray(y, dtype=np.float64)
        self.trees = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self._fit_tree)(i, X, y) for i in range(self.n_estimators))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        predictions = np.stack([tree.predict(X) for tree in self.trees])
        if self.task == CLASSIFICATION:
            votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
            for row in predictions:
                votes[np.arange(X.shape[0]), row] += 1
            return np.argmax(votes, axis=1)
        return predictions.mean(axis=0)

    def to_dict(self) -> dict:
        return {"params": self.get_params(), "task": self.task, "seed": self.seed,
                "n_classes": self.n_classes, "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, data: dict) -> "RandomForest":
        forest = cls(task=data["task"], seed=data["seed"], **data["params"])
        forest.n_classes = int(data["n_classes"])
        forest.trees = [DecisionTree.from_dict(t) for t in data["trees"]]
        return forest


def _distances(X: np.ndarray, points: np.ndarray, metric: str) -> np.ndarray:
    diff = X[:, None, :] - points[None, :, :]
    if metric == "manhattan":
        return np.abs(diff).sum(axis=2)
    return np.sqrt((diff * diff).sum(axis=2))


class NearestCentroid:
    """Per-class mean in scaled space; nearest wins, lowest class on ties."""

    kind = "nearest_centroid"
    task = CLASSIFICATION

    def __init__(self, metric: str = "manhattan"):
        if metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
        self.metric = metric
        self.centroids = np.zeros((0, 0))

    def get_params(self) -> dict:
        return {"metric": self.metric}

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: Optional[int] = None) -> "NearestCentroid":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n_classes = int(n_classes if n_classes is not None else y.max() + 1)
        centroids = np.full((n_classes, X.shape[1]), np.inf)
        for code in np.unique(y):
            centroids[code] = X[y == code].mean(axis=0)
        self.centroids = centroids
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmin(_distances(np.asarray(X, dtype=np.float64), self.centroids, self.metric), axis=1)

    def to_dict(self) -> dict:
        return {"params": self.get_params(),
                "centroids": [[None if not np.isfinite(v) else float(v) for v in row]
                              for row in self.centroids]}

    @classmethod
    def from_dict(cls, data: dict) -> "NearestCentroid":
        model = cls(**data["params"])
        model.centroids = np.array([[np.inf if v is None else v for v in row]
                                    for row in data["centroids"]], dtype=np.float64)
        return model


class KNearestRegressor:
    """Mean target of the ``n_neighbors`` closest training rows (stable on ties)."""

    kind = "knn"
    task = REGRESSION

    def __init__(self, n_neighbors: int = 5, metric: str = "euclidean"):
        if n_neighbors < 1:
            raise ValueError("n_neighbors must be at least 1")
        if metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
        self.n_neighbors = int(n_neighbors)
        self.metric = metric
        self.X = np.zeros((0, 0))
        self.y = np.zeros(0)

    def get_params(self) -> dict:
        return {"n_neighbors": self.n_neighbors, "metric": self.metric}

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: Optional[int] = None) -> "KNearestRegressor":
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        k = min(self.n_neighbors, self.y.size)
        distances = _distances(np.asarray(X, dtype=np.float64), self.X, self.metric)
        nearest = np.argsort(distances, axis=1, kind="stable")[:, :k]
        return self.y[nearest].mean(axis=1)

    def to_dict(self) -> dict:
        return {"params": self.get_params(), "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "KNearestRegressor":
        model = cls(**data["params"])
        model.X = np.asarray(data["X"], dtype=np.float64).reshape(len(data["y"]), -1)
        model.y = np.asarray(data["y"], dtype=np.float64)
        return model


class LinearRegressor:
    """Ordinary least squares with an intercept."""

    kind = "linear"
    task = REGRESSION

    def __init__(self, fit_intercept: bool = True):
        self.fit_intercept = bool(fit_intercept)
        self.coef = np.zeros(0)
        self.intercept = 0.0

    def get_params(self) -> dict:
        return {"fit_intercept": self.fit_intercept}

    def _design(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.fit_intercept:
            return np.hstack([X, np.ones((X.shape[0], 1))])
        return X

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: Optional[int] = None) -> "LinearRegressor":
        solution, _, _, _ = np.linalg.lstsq(self._design(X), np.asarray(y, dtype=np.float64), rcond=None)
        if self.fit_intercept:
            self.coef, self.intercept = solution[:-1], float(solution[-1])
        else:
            self.coef, self.intercept = solution, 0.0
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def to_dict(self) -> dict:
        return {"params": self.get_params(), "coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, data: dict) -> "LinearRegressor":
        model = cls(**data["params"])
        model.coef = np.asarray(data["coef"], dtype=np.float64)
        model.intercept = float(data["intercept"])
        return model


ESTIMATORS = {cls.kind: cls for cls in (DecisionTree, RandomForest, NearestCentroid,
                                          KNearestRegressor, LinearRegressor)}
LEARNER_TASKS = {
    "decision_tree": TASKS,
    "random_forest": TASKS,
    "nearest_centroid": (CLASSIFICATION,),
    "knn": (REGRESSION,),
    "linear": (REGRESSION,),
}
SCALED_LEARNERS = ("nearest_centroid", "knn")


@dataclass(eq=False)
class TrainedModel:
    """A fitted estimator plus the schema it was trained against."""

    estimator: Any
    task: str
    feature_names: Tuple[str, ...]
    classes: Tuple[str, ...] = ()
    target_transform: str = IDENTITY_TRANSFORM
    scaler: Optional[FeatureScaler] = None
    seed: int = 0
    fingerprint: str = ""
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.estimator.kind

    @property
    def params(self) -> dict:
        return self.estimator.get_params()

    def check_features(self, feature_names: Sequence[str]):
        if tuple(feature_names) != tuple(self.feature_names):
            raise ModelSchemaError(
                f"model expects features {list(self.feature_names)}, got {list(feature_names)}")

    def _prepare(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.feature_names):
            raise ModelSchemaError(
                f"model expects {len(self.feature_names)} features, got {X.shape[1]}")
        return self.scaler.transform(X) if self.scaler is not None else X

    def predict_raw(self, X) -> np.ndarray:
        """Estimator output before class decoding or inverse target transform."""
        return self.estimator.predict(self._prepare(X))

    def predict(self, X) -> np.ndarray:
        raw = self.predict_raw(X)
        if self.task == CLASSIFICATION:
            return np.array([self.classes[i] for i in raw], dtype=object)
        if self.target_transform == LOG_TRANSFORM:
            return np.exp(raw)
        return raw

    def transform_targets(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return np.log(y) if self.target_transform == LOG_TRANSFORM else y


def default_target_transform(learner: str, y: Optional[np.ndarray] = None) -> str:
    """Log for positive targets except under least squares."""
    if learner == "linear":
        return IDENTITY_TRANSFORM
    if y is not None and np.any(np.asarray(y, dtype=np.float64) <= 0):
        logger.warning("Non-positive regression targets; falling back to identity transform")
        return IDENTITY_TRANSFORM
    return LOG_TRANSFORM


def _build_estimator(learner: str, task: str, params: dict, seed: int, n_jobs: int):
    params = dict(params)
    if learner == "decision_tree":
        if task == REGRESSION:
            params.pop("criterion", None)
            params.setdefault("max_depth", None)
        return DecisionTree(task=task, random_state=seed, **params)
    if learner == "random_forest":
        if task == REGRESSION:
            params.pop("criterion", None)
            params.setdefault("max_depth", None)
        return RandomForest(task=task, seed=seed, n_jobs=n_jobs, **params)
    if learner == "nearest_centroid":
        return NearestCentroid(**params)
    if learner == "knn":
        return KNearestRegressor(**params)
    if learner == "linear":
        return LinearRegressor(**params)
    raise ValueError(f"Unknown learner '{learner}', expected one of {', '.join(LEARNER_TASKS)}")


def train_model(learner: str, data: LabeledDataset, hp: Optional[dict] = None,
                seed: int = 0, n_jobs: int = 1, target_transform: Optional[str] = None) -> TrainedModel:
    """Fit the named learner on ``data``."""
    if learner not in LEARNER_TASKS:
        raise ValueError(f"Unknown learner '{learner}', expected one of {', '.join(LEARNER_TASKS)}")
    if data.task not in LEARNER_TASKS[learner]:
        raise ValueError(f"learner '{learner}' does not support {data.task}")
    if data.n_rows < 1:
        raise InsufficientDataError("cannot train on an empty dataset")

    estimator = _build_estimator(learner, data.task, hp or {}, seed, n_jobs)
    scaler = FeatureScaler().fit(data.X) if learner in SCALED_LEARNERS else None
    X = scaler.transform(data.X) if scaler is not None else data.X

    if data.task == CLASSIFICATION:
        classes = data.classes
        codes = np.searchsorted(np.array(classes, dtype=object), data.y)
        estimator.fit(X, codes, n_classes=len(classes))
        transform = IDENTITY_TRANSFORM
    else:
        classes = ()
        transform = target_transform or default_target_transform(learner, data.y)
        y = np.log(data.y) if transform == LOG_TRANSFORM else data.y
        estimator.fit(X, y)

    logger.debug("Trained %s (%s) on %d rows", learner, data.task, data.n_rows)
    return TrainedModel(estimator=estimator, task=data.task, feature_names=data.feature_names,
                        classes=classes, target_transform=transform, scaler=scaler, seed=seed,
                        fingerprint=data.fingerprint())


def train_decision_tree(data: LabeledDataset, hp: Optional[dict] = None, seed: int = 0) -> TrainedModel:
    return train_model("decision_tree", data, hp, seed)


def train_random_forest(data: LabeledDataset, hp: Optional[dict] = None, seed: int = 0,
                        n_jobs: int = 1) -> TrainedModel:
    return train_model("random_forest", data, hp, seed, n_jobs)


def train_nearest_centroid(data: LabeledDataset, metric: str = "manhattan") -> TrainedModel:
    return train_model("nearest_centroid", data, {"metric": metric})


def train_knn(data: LabeledDataset, hp: Optional[dict] = None) -> TrainedModel:
    return train_model("knn", data, hp)


def train_linear(data: LabeledDataset) -> TrainedModel:
    return train_model("linear", data)
