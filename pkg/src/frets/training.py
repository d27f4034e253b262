"""Loss, metrics, min-max scaling, Adam and the train/evaluate loops."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from frets.errors import ConfigError, DimensionError, TrainingError
from frets.model import FreTSParams, frets_forward, init_params, loss_and_grads

EVAL_BATCH_SIZE = 256


def _pair(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction shape {pred.shape} != target shape {target.shape}")
    return pred, target


def mse_loss(pred, target):
    pred, target = _pair(pred, target)
    diff = pred - target
    return float(np.mean(diff * diff))


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float


def mae_rmse(pred, target):
    pred, target = _pair(pred, target)
    diff = pred - target
    return Metrics(float(np.mean(np.abs(diff))), float(np.sqrt(np.mean(diff * diff))))


# -- min-max scaling ----------------------------------------------------------

@dataclass
class MinMaxScaler:
    """Per-channel min-max statistics. Constant channels map to 0."""

    min: np.ndarray
    max: np.ndarray

    @property
    def degenerate(self):
        return self.max == self.min

    def _stats(self, ndim, axis):
        shape = [1] * ndim
        shape[axis] = self.min.size
        lo = self.min.reshape(shape)
        span = (self.max - self.min).reshape(shape)
        return lo, span, self.degenerate.reshape(shape)

    def apply(self, x, axis=0):
        x = np.asarray(x, dtype=np.float64)
        lo, span, flat = self._stats(x.ndim, axis)
        return np.where(flat, 0.0, (x - lo) / np.where(flat, 1.0, span))

    def invert(self, x, axis=0):
        x = np.asarray(x, dtype=np.float64)
        lo, span, _ = self._stats(x.ndim, axis)
        return x * span + lo


def scaler_fit(values):
    """Fit on an ``N x T`` training segment."""
    values = np.asarray(values, dtype=np.float64)
    return MinMaxScaler(values.min(axis=1), values.max(axis=1))


def scaler_apply(scaler, x, axis=0):
    return scaler.apply(x, axis)


def scaler_invert(scaler, x, axis=0):
    return scaler.invert(x, axis)


# -- Adam -------------------------------------------------------------------------

@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    arrays = params.named_arrays()
    return AdamState(
        m={k: np.zeros_like(a) for k, a in arrays.items()},
        v={k: np.zeros_like(a) for k, a in arrays.items()},
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(params, grads, state):
    """Bias-corrected Adam update, applied to ``params`` in place."""
    p_arrays = params.named_arrays()
    g_arrays = grads.named_arrays()
    for name, g in g_arrays.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name}")
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for name, p in p_arrays.items():
        g = g_arrays[name]
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# -- loops ----------------------------------------------------------------------

@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 100
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0 (0 disables), got {self.patience}")

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_mae: float
    val_rmse: float
    wall_time: float

    def to_line(self, with_time=True):
        record = asdict(self)
        if not with_time:
            del record["wall_time"]
        return json.dumps(record)


@dataclass
class TrainResult:
    params: FreTSParams
    log: list = field(default_factory=list)
    best_epoch: int | None = None
    best_val_mae: float | None = None


def predict(params, config, inputs, batch_size=EVAL_BATCH_SIZE):
    """Forward pass over many windows in fixed-size chunks."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.shape[0] == 0:
        return np.zeros((0, config.channels, config.horizon))
    chunks = [
        frets_forward(inputs[k : k + batch_size], params, config)
        for k in range(0, inputs.shape[0], batch_size)
    ]
    return np.concatenate(chunks, axis=0)


def evaluate(params, config, dataset, batch_size=EVAL_BATCH_SIZE):
    """MAE/RMSE over every window of ``dataset`` (normalized scale)."""
    if dataset is None or len(dataset) == 0:
        raise ConfigError("cannot evaluate on an empty split")
    return mae_rmse(predict(params, config, dataset.inputs, batch_size), dataset.targets)


def train(model_config, train_set, val_set, train_config, params=None, on_epoch=None):
    """Minibatch Adam on MSE; keeps the parameters with the best validation MAE.

    Shuffling uses ``train_config.seed``; with equal seeds two runs follow the
    same trajectory. ``on_epoch`` receives each :class:`EpochRecord`.
    """
    if train_set is None or len(train_set) == 0:
        raise ConfigError("training split has no windows")
    if val_set is None or len(val_set) == 0:
        raise ConfigError("validation split has no windows")
    params = init_params(model_config) if params is None else params.copy()
    result = TrainResult(params=params.copy())
    if train_config.epochs == 0:
        return result
    state = adam_init(params, train_config.lr)
    rng = np.random.default_rng(train_config.seed)
    n = len(train_set)
    best = math.inf
    stale = 0
    for epoch in range(1, train_config.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(n)
        total = 0.0
        for k in range(0, n, train_config.batch_size):
            idx = order[k : k + train_config.batch_size]
            X, Y = train_set.batch(idx)
            loss, grads = loss_and_grads(X, Y, params, model_config)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            adam_step(params, grads, state)
            total += loss * len(idx)
        metrics = evaluate(params, model_config, val_set)
        record = EpochRecord(epoch, total / n, metrics.mae, metrics.rmse, time.perf_counter() - start)
        result.log.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if metrics.mae < best:
            best = metrics.mae
            stale = 0
            result.params = params.copy()
            result.best_epoch = epoch
            result.best_val_mae = metrics.mae
        else:
            stale += 1
            if train_config.patience and stale >= train_config.patience:
                break
    return result
