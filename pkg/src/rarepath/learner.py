"""Observation-history features and a from-scratch random forest.

Feature layout for ``S`` symptoms (``2 * S + 2`` columns)::

    [ever_observed_0 .. ever_observed_{S-1},
     days_since_first_0 .. days_since_first_{S-1},
     elapsed_days, active_count]

``days_since_first`` is -1 for a symptom never observed, which sorts below
every real value so a single split can isolate it.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import stream
from .simulator import ObservationHistory, Trajectory

NEVER = -1
MODEL_FORMAT = "rarepath-forest"
MODEL_VERSION = 1


def feature_count(n_symptoms: int) -> int:
    return 2 * n_symptoms + 2


def feature_names(n_symptoms: int) -> list[str]:
    return (
        [f"ever_observed_{s}" for s in range(n_symptoms)]
        + [f"days_since_first_{s}" for s in range(n_symptoms)]
        + ["elapsed_days", "active_count"]
    )


@dataclass(frozen=True)
class FeatureVector:
    ever_observed: tuple[bool, ...]
    days_since_first: tuple[int, ...]
    elapsed_days: int
    active_count: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [*map(float, self.ever_observed), *map(float, self.days_since_first), self.elapsed_days, self.active_count],
            dtype=np.float64,
        )


def extract_features(history: ObservationHistory) -> FeatureVector:
    if history.first_observed_day is None:
        raise ValueError("no symptom observed yet; features are only defined after the first observation")
    first = history.first_observed_day
    ever = tuple(bool(days) for days in history.days_observed)
    since = tuple(days[0] - first if days else NEVER for days in history.days_observed)
    active = sum(1 for days in history.days_observed if days and days[-1] == history.t - 1)
    return FeatureVector(ever, since, history.t - first, active)


def trajectory_features(trajectory: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Features for every decision day from the first observation on.

    Returns ``(days, X)``. Row ``k`` of ``X`` equals
    ``extract_features(history_at(trajectory, days[k] + 1))``: a decision on
    day ``d`` sees the observations of day ``d`` itself.
    """
    first = trajectory.first_observed_day
    n_sym = trajectory.n_symptoms
    if first is None:
        return np.empty(0, dtype=np.int64), np.empty((0, feature_count(n_sym)))
    obs = trajectory.observed[:, first:]
    days = np.arange(first, trajectory.horizon_days, dtype=np.int64)
    seen = np.logical_or.accumulate(obs, axis=1)
    has_any = obs.any(axis=1)
    sym_first = np.where(has_any, np.argmax(obs, axis=1), NEVER)

    X = np.empty((days.size, feature_count(n_sym)), dtype=np.float64)
    X[:, :n_sym] = seen.T
    X[:, n_sym : 2 * n_sym] = np.where(seen.T, sym_first[None, :], NEVER)
    X[:, 2 * n_sym] = days - first + 1
    X[:, 2 * n_sym + 1] = obs.sum(axis=0)
    return days, X


def snapshot_days(trajectory: Trajectory, stride: int) -> np.ndarray:
    """Days on which the ever-observed set grows, plus every ``stride``-th
    day after the first observation."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    first = trajectory.first_observed_day
    if first is None:
        return np.empty(0, dtype=np.int64)
    obs = trajectory.observed
    firsts = np.argmax(obs, axis=1)[obs.any(axis=1)]
    periodic = np.arange(first + stride, trajectory.horizon_days, stride)
    return np.union1d(firsts, periodic).astype(np.int64)


@dataclass
class TrainingSet:
    X: np.ndarray
    y: np.ndarray
    trajectory_ids: np.ndarray

    @property
    def feature_count(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def class_counts(self) -> tuple[int, int]:
        pos = int(self.y.sum())
        return len(self) - pos, pos


def build_training_set(cohort: Sequence[Trajectory], snapshot_stride_days: int) -> TrainingSet:
    """Snapshot rows of every trajectory that has an observed symptom.

    The label is whether the trajectory's syndrome is rare.
    """
    n_sym = cohort[0].n_symptoms if cohort else 0
    xs, ys, ids = [], [], []
    for tid, traj in enumerate(cohort):
        snaps = snapshot_days(traj, snapshot_stride_days)
        if snaps.size == 0:
            continue
        days, X = trajectory_features(traj)
        xs.append(X[snaps - days[0]])
        ys.append(np.full(snaps.size, traj.is_rare))
        ids.append(np.full(snaps.size, tid))
    if not xs:
        return TrainingSet(np.empty((0, feature_count(n_sym))), np.empty(0, dtype=bool), np.empty(0, dtype=np.int64))
    return TrainingSet(np.vstack(xs), np.concatenate(ys).astype(bool), np.concatenate(ids).astype(np.int64))


# -- forest ----------------------------------------------------------------

@dataclass(frozen=True)
class ForestParams:
    tree_count: int = 100
    max_depth: int = 12
    min_leaf_size: int = 5
    features_per_split: int | None = None  # None: ceil(sqrt(feature_count))
    bootstrap: bool = True

    def n_split_features(self, n_features: int) -> int:
        k = self.features_per_split or math.ceil(math.sqrt(n_features))
        return min(k, n_features)


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat binary tree; node 0 is the root, leaves have ``feature == -1``.

    Rows go left when ``x[feature] <= threshold``. ``value`` is the
    positive-class fraction of the training rows reaching the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    _depth: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        depth = np.zeros(self.feature.size, dtype=np.int64)
        for i in range(self.feature.size):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        object.__setattr__(self, "_depth", int(depth.max()) if depth.size else 0)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def depth(self) -> int:
        return self._depth

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        leaf = np.empty(X.shape[0], dtype=np.int64)
        todo = [(0, np.arange(X.shape[0]))]
        while todo:
            node, rows = todo.pop()
            f = self.feature[node]
            if f < 0:
                leaf[rows] = node
                continue
            go_left = X[rows, f] <= self.threshold[node]
            todo.append((self.left[node], rows[go_left]))
            todo.append((self.right[node], rows[~go_left]))
        return leaf

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple[Tree, ...]
    params: ForestParams
    training_seed: int
    feature_count: int
    oob_accuracy: float | None = None

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """Mean leaf fraction over trees for each row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ValueError(f"expected rows of {self.feature_count} features, got shape {X.shape}")
        X = np.asfortranarray(X)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def predict_proba(forest: Forest, features: FeatureVector | np.ndarray) -> float:
    """Probability that the patient's syndrome is rare."""
    x = features.as_array() if isinstance(features, FeatureVector) else np.asarray(features, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a single feature vector, got shape {x.shape}")
    return float(forest.predict_matrix(x[None, :])[0])


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[float, float] | None:
    """Lowest weighted Gini split of one feature as ``(impurity, threshold)``.

    Impurity is ``n * gini`` summed over both children; the lowest threshold
    wins ties.
    """
    n = x.size
    if n < 2:
        return None
    order = np.argsort(x, kind="stable")
    xs = x[order]
    pos_left = np.cumsum(y[order])[:-1]
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    pos_right = y.sum() - pos_left
    ok = (xs[1:] != xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not ok.any():
        return None
    imp = 2.0 * (pos_left * (n_left - pos_left) / n_left + pos_right * (n_right - pos_right) / n_right)
    cand = np.flatnonzero(ok)
    i = cand[np.argmin(imp[cand])]
    return float(imp[i]), 0.5 * (xs[i] + xs[i + 1])


def _grow_tree(X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator) -> Tree:
    n_features = X.shape[1]
    k = params.n_split_features(n_features)
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        yn = y[idx]
        n = idx.size
        pos = float(yn.sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(pos / n)
        if depth >= params.max_depth or pos == 0 or pos == n or n < 2 * params.min_leaf_size:
            return node
        parent = 2.0 * pos * (n - pos) / n
        best = None
        for f in np.sort(rng.choice(n_features, k, replace=False)):
            split = _best_split(X[idx, f], yn, params.min_leaf_size)
            if split is not None and (best is None or split[0] < best[0]):
                best = (split[0], split[1], int(f))
        if best is None or best[0] >= parent * (1.0 - 1e-12):
            return node
        _, thr, f = best
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )


def bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, n, n)


def train_forest(data: TrainingSet, params: ForestParams = ForestParams(), seed: int = 0, threads: int = 1) -> Forest:
    """Fit ``params.tree_count`` CART trees on bootstrap resamples.

    Tree ``i`` uses the stream keyed by ``(seed, i)`` for both its bootstrap
    draw and its per-node feature subsets, so the forest does not depend on
    ``threads``.
    """
    for name in ("tree_count", "min_leaf_size"):
        if getattr(params, name) < 1:
            raise ValueError(f"{name} must be positive, got {getattr(params, name)}")
    if params.max_depth < 0 or (params.features_per_split is not None and params.features_per_split < 1):
        raise ValueError(f"invalid forest parameters {params}")
    n_neg, n_pos = data.class_counts()
    if n_neg == 0 or n_pos == 0:
        raise ValueError(
            f"training data needs both classes, got {n_pos} rare and {n_neg} non-rare rows"
        )
    X = np.asarray(data.X, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.float64)
    n = X.shape[0]

    def one(i: int) -> tuple[Tree, np.ndarray]:
        rng = stream(seed, i, "tree")
        idx = bootstrap_indices(n, rng) if params.bootstrap else np.arange(n)
        return _grow_tree(X[idx], y[idx], params, rng), idx

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(one, range(params.tree_count)))
    else:
        fitted = [one(i) for i in range(params.tree_count)]

    oob_sum = np.zeros(n)
    oob_n = np.zeros(n)
    for tree, idx in fitted:
        out = np.bincount(idx, minlength=n) == 0
        if out.any():
            oob_sum[out] += tree.predict(X[out])
            oob_n[out] += 1
    has = oob_n > 0
    oob = float(np.mean((oob_sum[has] / oob_n[has] > 0.5) == (y[has] > 0.5))) if has.any() else None

    return Forest(tuple(t for t, _ in fitted), params, int(seed), X.shape[1], oob)


# -- persistence -----------------------------------------------------------

def forest_to_dict(forest: Forest) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "feature_count": forest.feature_count,
        "training_seed": forest.training_seed,
        "oob_accuracy": forest.oob_accuracy,
        "params": asdict(forest.params),
        # node columns: feature, threshold, left, right, value
        "trees": [
            [
                [int(f), float(t), int(l), int(r), float(v)]
                for f, t, l, r, v in zip(tr.feature, tr.threshold, tr.left, tr.right, tr.value)
            ]
            for tr in forest.trees
        ],
    }


def dumps_forest(forest: Forest) -> str:
    return json.dumps(forest_to_dict(forest), sort_keys=True, separators=(",", ":")) + "\n"


def save_forest(forest: Forest, path: str | Path) -> None:
    Path(path).write_text(dumps_forest(forest), encoding="utf-8")


def forest_from_dict(data: dict) -> Forest:
    if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
        raise ValueError(f"not a {MODEL_FORMAT} v{MODEL_VERSION} model file")
    trees = []
    for nodes in data["trees"]:
        cols = list(zip(*nodes))
        trees.append(
            Tree(
                np.array(cols[0], dtype=np.int64),
                np.array(cols[1], dtype=np.float64),
                np.array(cols[2], dtype=np.int64),
                np.array(cols[3], dtype=np.int64),
                np.array(cols[4], dtype=np.float64),
            )
        )
    return Forest(
        tuple(trees),
        ForestParams(**data["params"]),
        int(data["training_seed"]),
        int(data["feature_count"]),
        data["oob_accuracy"],
    )


def load_forest(path: str | Path) -> Forest:
    return forest_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
