"""Sentence-pair MLP regressor trained with plain mini-batch SGD.

Input is built from two sentence vectors ``u``, ``v`` as
``[u, v, |u - v|, u * v]``; three ReLU hidden layers (480/240/80 by default)
feed a linear output unit.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateVariance, DimensionMismatch, EmptyBatch, MissingGold, ModelFormatError
from .evaluation import pearson
from .features import pair_vectors
from .persist import decode_array, dump_model, encode_array, read_model

logger = logging.getLogger(__name__)

PAIR_FEATURES = ("elementwise", "scalar")


@dataclass(frozen=True)
class MlpConfig:
    embed_dim: int
    hidden: tuple = (480, 240, 80)
    learning_rate: float = 1e-4
    l2_coeff: float = 1e-4
    dropout_rate: float = 0.5
    patience_epochs: int = 200
    max_epochs: int = 10000
    batch_size: int = 32
    seed: int = 0
    # "elementwise": [u, v, |u-v|, u*v] (4d); "scalar": [u, v, |u-v|, u.v] (3d+1)
    pair_features: str = "elementwise"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.embed_dim < 1 or not self.hidden or min(self.hidden) < 1:
            raise ValueError("embed_dim and hidden widths must be positive")
        if not 0.0 < self.learning_rate < 1.0:
            raise ValueError("learning_rate must be in (0, 1)")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.l2_coeff < 0 or self.patience_epochs < 0:
            raise ValueError("l2_coeff and patience_epochs must be non-negative")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be positive")
        if self.pair_features not in PAIR_FEATURES:
            raise ValueError(f"pair_features must be one of {PAIR_FEATURES}")

    @property
    def input_width(self) -> int:
        d = self.embed_dim
        return 4 * d if self.pair_features == "elementwise" else 3 * d + 1

    @property
    def widths(self) -> tuple:
        return (self.input_width, *self.hidden, 1)


@dataclass
class MlpModel:
    config: MlpConfig
    weights: list
    biases: list

    def copy(self) -> "MlpModel":
        return MlpModel(self.config, [w.copy() for w in self.weights], [b.copy() for b in self.biases])


def build_input(u, v, mode: str = "elementwise") -> np.ndarray:
    return build_inputs(np.atleast_2d(u), np.atleast_2d(v), mode)[0]


def build_inputs(U, V, mode: str = "elementwise") -> np.ndarray:
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.shape != V.shape:
        raise DimensionMismatch(f"sentence vectors differ in shape: {U.shape} vs {V.shape}")
    if mode == "elementwise":
        last = U * V
    elif mode == "scalar":
        last = np.sum(U * V, axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown pair feature mode {mode!r}")
    return np.hstack([U, V, np.abs(U - V), last])


def init_model(config: MlpConfig) -> MlpModel:
    """Uniform fan-in scaled initialization (limit sqrt(6/fan_in)), zero biases."""
    rng = np.random.default_rng([config.seed, 0])
    weights, biases = [], []
    widths = config.widths
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(config, weights, biases)


def _check_input(model: MlpModel, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.weights[0].shape[0]:
        raise DimensionMismatch(f"model expects width {model.weights[0].shape[0]}, got {X.shape[1]}")
    return X


def _forward(model: MlpModel, X, masks=None):
    """Forward pass returning (outputs, cache). ``masks`` are 0/1 keep masks,
    one per hidden layer; kept units are scaled by 1/(1 - rate)."""
    scale = 1.0 / (1.0 - model.config.dropout_rate)
    acts = [X]
    pres = []
    h = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W + b
        pres.append(z)
        if i == last:
            h = z
        else:
            h = np.maximum(z, 0.0)
            if masks is not None:
                h = h * masks[i] * scale
        acts.append(h)
    return h[:, 0], (acts, pres)


def forward(model: MlpModel, x, dropout_mask=None):
    """Network output for one input vector (float) or a batch (array)."""
    X = _check_input(model, x)
    out, _ = _forward(model, X, dropout_mask)
    return float(out[0]) if np.ndim(x) == 1 else out


def _l2(model: MlpModel) -> float:
    return float(sum(np.sum(W * W) for W in model.weights))


def loss(model: MlpModel, X, y, masks=None) -> float:
    X = _check_input(model, X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) == 0:
        raise EmptyBatch("loss of an empty batch")
    out, _ = _forward(model, X, masks)
    return float(np.mean((out - y) ** 2)) + model.config.l2_coeff * _l2(model)


def grad(model: MlpModel, X, y, masks=None):
    """Backpropagated gradients ``(dW, db)`` of :func:`loss` and the loss value."""
    X = _check_input(model, X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) == 0:
        raise EmptyBatch("gradient of an empty batch")
    out, (acts, pres) = _forward(model, X, masks)
    n = len(y)
    scale = 1.0 / (1.0 - model.config.dropout_rate)
    l2 = model.config.l2_coeff
    delta = (2.0 / n) * (out - y)[:, None]
    dW = [None] * len(model.weights)
    db = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        dW[i] = acts[i].T @ delta + 2.0 * l2 * model.weights[i]
        db[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.weights[i].T
            if masks is not None:
                delta = delta * masks[i - 1] * scale
            delta = delta * (pres[i - 1] > 0)
    value = float(np.mean((out - y) ** 2)) + l2 * _l2(model)
    return dW, db, value


def sample_masks(model: MlpModel, batch: int, rng) -> list | None:
    rate = model.config.dropout_rate
    if rate == 0.0:
        return None
    return [(rng.random((batch, w)) >= rate).astype(np.float64) for w in model.config.hidden]


def predict(model: MlpModel, X, clamp=(0.0, 5.0)) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return np.zeros(0)
    out, _ = _forward(model, _check_input(model, X))
    if clamp is not None:
        out = np.clip(out, *clamp)
    return out


@dataclass
class TrainState:
    epoch: int = 0
    best_epoch: int = 0
    best_validation_correlation: float = -np.inf
    epochs_since_best: int = 0
    best_weights: MlpModel | None = None
    history: list = field(default_factory=list)


def _val_pearson(pred, gold) -> float:
    try:
        return pearson(pred, gold)
    except DegenerateVariance:
        return float("nan")


def train_arrays(X, y, X_val, y_val, config: MlpConfig, model: MlpModel | None = None):
    """Mini-batch SGD with validation-correlation early stopping.

    After every epoch the validation Pearson is computed; the weights are
    snapshotted whenever it improves, and training stops once ``patience``
    epochs pass without improvement (or at ``max_epochs``). Returns the best
    snapshot and the :class:`TrainState` with per-epoch history.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    X_val = np.asarray(X_val, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64).ravel()
    if len(X) == 0:
        raise EmptyBatch("no training rows")
    if X.shape[1] != config.input_width or X_val.shape[1] != config.input_width:
        raise DimensionMismatch(f"expected input width {config.input_width}")
    model = init_model(config) if model is None else model.copy()
    rng = np.random.default_rng([config.seed, 1])
    state = TrainState()
    lr = config.learning_rate
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(y))
        for start in range(0, len(y), config.batch_size):
            rows = order[start : start + config.batch_size]
            masks = sample_masks(model, len(rows), rng)
            dW, db, _ = grad(model, X[rows], y[rows], masks)
            for W, g in zip(model.weights, dW):
                W -= lr * g
            for b, g in zip(model.biases, db):
                b -= lr * g
        train_out, _ = _forward(model, X)
        val_out, _ = _forward(model, X_val)
        corr = _val_pearson(val_out, y_val)
        entry = {
            "epoch": epoch,
            "train_mse": float(np.mean((train_out - y) ** 2)),
            "val_mse": float(np.mean((val_out - y_val) ** 2)),
            "val_pearson": corr,
        }
        state.history.append(entry)
        state.epoch = epoch
        if epoch == 1 or corr > state.best_validation_correlation:
            if not np.isnan(corr):
                state.best_validation_correlation = corr
            state.best_epoch = epoch
            state.best_weights = model.copy()
            state.epochs_since_best = 0
        else:
            state.epochs_since_best += 1
        if epoch % 100 == 0:
            logger.info("epoch %d train_mse %.4f val_mse %.4f val_pearson %.4f",
                        epoch, entry["train_mse"], entry["val_mse"], corr)
        if state.epochs_since_best >= config.patience_epochs:
            break
    return state.best_weights, state


def train(pairs, ctx, config: MlpConfig, validation):
    """Train on two :class:`~clinsts.features.Dataset` objects using the
    sentence vectors available from the feature context ``ctx``."""
    if not pairs.has_gold or not validation.has_gold:
        raise MissingGold("encoder training needs gold scores for every pair")
    X = build_inputs(*pair_vectors(pairs, ctx), config.pair_features)
    X_val = build_inputs(*pair_vectors(validation, ctx), config.pair_features)
    return train_arrays(X, pairs.gold(), X_val, validation.gold(), config)


def predict_pairs(model: MlpModel, pairs, ctx) -> np.ndarray:
    return predict(model, build_inputs(*pair_vectors(pairs, ctx), model.config.pair_features))


def save(model: MlpModel, path) -> None:
    payload = {
        "config": asdict(model.config),
        "weights": [encode_array(W) for W in model.weights],
        "biases": [encode_array(b) for b in model.biases],
    }
    dump_model("mlp", payload, path)


def load(path) -> MlpModel:
    doc = read_model(path, "mlp")
    try:
        cfg = dict(doc["config"])
        cfg["hidden"] = tuple(cfg["hidden"])
        config = MlpConfig(**cfg)
        weights = [decode_array(w) for w in doc["weights"]]
        biases = [decode_array(b) for b in doc["biases"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed mlp model: {exc}", path) from None
    widths = config.widths
    shapes_ok = len(weights) == len(widths) - 1 and all(
        W.shape == (a, b) and bias.shape == (b,)
        for W, bias, a, b in zip(weights, biases, widths[:-1], widths[1:])
    )
    if not shapes_ok:
        raise ModelFormatError("layer shapes do not match the stored config", path)
    return MlpModel(config, weights, biases)
