"""Bagged regression trees grown by variance reduction."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    ModelFormatError,
    NonFiniteInput,
    SizeMismatch,
)
from .persist import dump_model, read_model

LEAF = -1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int = 5
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1 or self.min_samples_leaf < 1 or self.features_per_split < 1:
            raise ValueError("n_trees, min_samples_leaf and features_per_split must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive when set")


@dataclass
class RegressionTree:
    """Flat node arrays; ``feature[i] == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active[rows] = self.feature[node[rows]] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@dataclass
class RandomForestModel:
    trees: list
    config: ForestConfig
    n_features: int
    importances: np.ndarray = field(default=None)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)


def _best_split(Xc: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (column, position, proxy) over the columns of ``Xc``.

    ``proxy`` is sum_L^2/n_L + sum_R^2/n_R, so the variance reduction is
    ``proxy - sum^2/n``. Earlier columns, then lower thresholds, win ties.
    """
    n, k = Xc.shape
    order = np.argsort(Xc, axis=0, kind="stable")
    xs = np.take_along_axis(Xc, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)[:-1]
    total = y.sum()
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    with np.errstate(divide="ignore", invalid="ignore"):
        proxy = csum**2 / n_left + (total - csum) ** 2 / n_right
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    proxy = np.where(valid, proxy, -np.inf)
    flat = proxy.T.ravel()
    best = int(np.argmax(flat))
    if flat[best] == -np.inf:
        return None
    col, pos = divmod(best, n - 1)
    lo, hi = xs[pos, col], xs[pos + 1, col]
    threshold = lo + (hi - lo) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    return col, float(threshold), float(flat[best])


def _grow_tree(X, y, config: ForestConfig, rng, importances):
    n_features = X.shape[1]
    k = min(config.features_per_split, n_features)
    feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(y[idx])))
        n_samples.append(len(idx))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        if (
            len(idx) < 2 * config.min_samples_leaf
            or (config.max_depth is not None and depth >= config.max_depth)
            or yn.max() == yn.min()
        ):
            continue
        feats = np.sort(rng.choice(n_features, size=k, replace=False))
        found = _best_split(X[np.ix_(idx, feats)], yn, config.min_samples_leaf)
        if found is None and k < n_features:
            # every sampled column is constant here; look at the rest
            feats = np.setdiff1d(np.arange(n_features), feats)
            found = _best_split(X[np.ix_(idx, feats)], yn, config.min_samples_leaf)
        if found is None:
            continue
        col, thr, proxy = found
        f = int(feats[col])
        parent = yn.sum() ** 2 / len(yn)
        importances[f] += max(0.0, proxy - parent)
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        np.array(n_samples, dtype=np.int64),
    )


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, tree_index])


def _check_matrix(X, name="features"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput(f"{name} contain NaN or infinite values")
    return X


def fit(features, targets, config: ForestConfig = ForestConfig()) -> RandomForestModel:
    X = _check_matrix(features)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if len(X) != len(y):
        raise SizeMismatch(f"{len(X)} feature rows but {len(y)} targets")
    if len(y) < 2:
        raise EmptyTrainingSet("need at least two training rows")
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("targets contain NaN or infinite values")
    importances = np.zeros(X.shape[1])
    trees = []
    for t in range(config.n_trees):
        rng = tree_rng(config.seed, t)
        if config.bootstrap:
            rows = rng.integers(0, len(y), size=len(y))
        else:
            rows = np.arange(len(y))
        trees.append(_grow_tree(X[rows], y[rows], config, rng, importances))
    total = importances.sum()
    if total > 0:
        importances = importances / total
    return RandomForestModel(trees, config, X.shape[1], importances)


def predict(model: RandomForestModel, features, clamp=(0.0, 5.0)) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.size == 0:
        return np.zeros(0)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got shape {X.shape}")
    out = np.mean([tree.predict(X) for tree in model.trees], axis=0)
    if clamp is not None:
        out = np.clip(out, *clamp)
    return out


def feature_importances(model: RandomForestModel) -> np.ndarray:
    return model.importances.copy()


def export_tree_dot(model: RandomForestModel, tree_index: int, feature_names=None) -> str:
    """Graphviz DOT text for one tree; internal nodes read ``f<idx> ≤ <threshold>``."""
    if not 0 <= tree_index < len(model.trees):
        raise IndexError(f"tree index {tree_index} out of range 0..{len(model.trees) - 1}")
    tree = model.trees[tree_index]
    lines = [
        f"digraph tree_{tree_index} {{",
        '  node [shape=box, fontname="Helvetica"];',
    ]
    for i in range(tree.n_nodes):
        if tree.feature[i] == LEAF:
            label = f"value = {tree.value[i]:.3f}\\nsamples = {tree.n_samples[i]}"
            lines.append(f'  n{i} [label="{label}", style=filled, fillcolor="#eeeeee"];')
        else:
            f = int(tree.feature[i])
            label = f"f{f} ≤ {tree.threshold[i]:.4f}"
            if feature_names is not None:
                label += f"\\n({feature_names[f]})"
            label += f"\\nsamples = {tree.n_samples[i]}"
            lines.append(f'  n{i} [label="{label}"];')
    for i in range(tree.n_nodes):
        if tree.feature[i] != LEAF:
            lines.append(f'  n{i} -> n{tree.left[i]} [label="yes"];')
            lines.append(f'  n{i} -> n{tree.right[i]} [label="no"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def save(model: RandomForestModel, path) -> None:
    payload = {
        "config": asdict(model.config),
        "n_features": model.n_features,
        "importances": model.importances.tolist(),
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
                "n_samples": t.n_samples.tolist(),
            }
            for t in model.trees
        ],
    }
    dump_model("random_forest", payload, path)


def load(path) -> RandomForestModel:
    doc = read_model(path, "random_forest")
    try:
        trees = [
            RegressionTree(
                np.array(t["feature"], dtype=np.int64),
                np.array(t["threshold"], dtype=np.float64),
                np.array(t["left"], dtype=np.int64),
                np.array(t["right"], dtype=np.int64),
                np.array(t["value"], dtype=np.float64),
                np.array(t["n_samples"], dtype=np.int64),
            )
            for t in doc["trees"]
        ]
        config = ForestConfig(**doc["config"])
        model = RandomForestModel(
            trees, config, int(doc["n_features"]), np.array(doc["importances"], dtype=np.float64)
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed random forest model: {exc}", path) from None
    for t in trees:
        sizes = {len(t.threshold), len(t.left), len(t.right), len(t.value), len(t.n_samples)}
        if sizes != {t.n_nodes} or t.n_nodes == 0:
            raise ModelFormatError("inconsistent tree arrays", path)
    return model
