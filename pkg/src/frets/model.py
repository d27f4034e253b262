"""FreTS network: embedding, frequency channel/temporal learners, projection.

Tensor layout is ``(batch, channels N, lookback L, embed d)`` throughout. The
channel learner transforms along N, the temporal learner along L; both apply a
:mod:`frets.fremlp` stack to the trailing ``d`` axis with the bin axis acting
as a batch axis. Reverse-mode gradients are written out by hand, including
the adjoints of the real DFT pair.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from frets import numeric as nm
from frets.errors import ConfigError, DimensionError
from frets.fremlp import (
    ACTIVATIONS,
    FreMLPParams,
    fremlp_init,
    fremlp_stack_backward,
    fremlp_stack_forward,
)

LEARNER_DOMAINS = ("frequency", "time")


@dataclass
class ModelConfig:
    lookback: int
    horizon: int
    channels: int
    embed_dim: int = 128
    hidden_dim: int = 256
    use_channel_learner: bool = True
    use_temporal_learner: bool = True
    channel_independent: bool = False
    fremlp_layers: int = 1
    seed: int = 0
    activation: str = "relu"
    projection_activation: str = "relu"
    # "time" swaps both learners for plain real MLPs on the embedding axis
    learner_domain: str = "frequency"

    def __post_init__(self):
        for name in ("lookback", "horizon", "channels", "embed_dim", "hidden_dim", "fremlp_layers"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if self.projection_activation not in ACTIVATIONS:
            raise ConfigError(f"projection_activation must be one of {ACTIVATIONS}")
        if self.learner_domain not in LEARNER_DOMAINS:
            raise ConfigError(f"learner_domain must be one of {LEARNER_DOMAINS}")
        if not (self.channel_enabled or self.temporal_enabled):
            raise ConfigError("at least one learner must be enabled")

    @property
    def channel_enabled(self):
        return self.use_channel_learner and not self.channel_independent

    @property
    def temporal_enabled(self):
        return self.use_temporal_learner

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class FreTSParams:
    embed: np.ndarray
    channel: list = field(default_factory=list)
    temporal: list = field(default_factory=list)
    w1: np.ndarray = None
    b1: np.ndarray = None
    w2: np.ndarray = None
    b2: np.ndarray = None

    def named_arrays(self):
        """Ordered ``name -> array`` view (the arrays themselves, not copies)."""
        out = {"embed": self.embed}
        for prefix, layers in (("channel", self.channel), ("temporal", self.temporal)):
            for k, layer in enumerate(layers):
                for name, arr in layer.arrays().items():
                    out[f"{prefix}.{k}.{name}"] = arr
        out.update(w1=self.w1, b1=self.b1, w2=self.w2, b2=self.b2)
        return out

    @classmethod
    def from_arrays(cls, arrays):
        def stack(prefix):
            layers = []
            k = 0
            while f"{prefix}.{k}.W_r" in arrays:
                layers.append(FreMLPParams(*(arrays[f"{prefix}.{k}.{n}"] for n in ("W_r", "W_i", "B_r", "B_i"))))
                k += 1
            return layers

        return cls(
            embed=arrays["embed"],
            channel=stack("channel"),
            temporal=stack("temporal"),
            w1=arrays["w1"],
            b1=arrays["b1"],
            w2=arrays["w2"],
            b2=arrays["b2"],
        )

    def map(self, fn):
        return FreTSParams.from_arrays({k: fn(v) for k, v in self.named_arrays().items()})

    def copy(self):
        return self.map(np.copy)

    def zeros_like(self):
        return self.map(np.zeros_like)


def init_params(config):
    """Seeded initialization.

    Child seeds are assigned to fixed slots (embedding, each channel layer,
    each temporal layer, projection) whether or not a learner is enabled, so
    ablation variants built from the same seed share their common parameters.
    """
    ell = config.fremlp_layers
    d, dh = config.embed_dim, config.hidden_dim
    children = np.random.SeedSequence(config.seed).spawn(2 * ell + 2)
    embed_rng = np.random.default_rng(children[0])
    embed = embed_rng.uniform(-1 / np.sqrt(d), 1 / np.sqrt(d), size=d)
    channel = [fremlp_init(d, children[1 + k]) for k in range(ell)] if config.channel_enabled else []
    temporal = (
        [fremlp_init(d, children[1 + ell + k]) for k in range(ell)] if config.temporal_enabled else []
    )
    proj_rng = np.random.default_rng(children[-1])
    fan1 = config.lookback * d
    w1 = proj_rng.uniform(-1 / np.sqrt(fan1), 1 / np.sqrt(fan1), size=(fan1, dh))
    w2 = proj_rng.uniform(-1 / np.sqrt(dh), 1 / np.sqrt(dh), size=(dh, config.horizon))
    return FreTSParams(embed, channel, temporal, w1, np.zeros(dh), w2, np.zeros(config.horizon))


def check_params(params, config):
    expected = {
        "embed": (config.embed_dim,),
        "w1": (config.lookback * config.embed_dim, config.hidden_dim),
        "b1": (config.hidden_dim,),
        "w2": (config.hidden_dim, config.horizon),
        "b2": (config.horizon,),
    }
    for name, shape in expected.items():
        actual = getattr(params, name).shape
        if actual != shape:
            raise ConfigError(f"parameter {name} has shape {actual}, config implies {shape}")
    for name, layers, enabled in (
        ("channel", params.channel, config.channel_enabled),
        ("temporal", params.temporal, config.temporal_enabled),
    ):
        want = config.fremlp_layers if enabled else 0
        if len(layers) != want:
            raise ConfigError(f"{name} learner has {len(layers)} layers, config implies {want}")
        if any(layer.d != config.embed_dim for layer in layers):
            raise ConfigError(f"{name} learner width does not match embed_dim")


# -- building blocks ------------------------------------------------------------

def dimension_extension(X, embed):
    """``H[..., n, l, k] = X[..., n, l] * embed[k]``."""
    X = np.asarray(X, dtype=np.float64)
    embed = np.asarray(embed, dtype=np.float64)
    if embed.ndim != 1:
        raise DimensionError(f"embedding must be a vector, got shape {embed.shape}")
    return X[..., None] * embed


def _as_layers(params):
    return [params] if isinstance(params, FreMLPParams) else list(params)


def _frequency_learner(H, layers, axis, activation, domain="frequency"):
    """Shared body of both learners; returns ``(output, cache)``."""
    if domain == "time":
        inputs, pre = [], []
        Z = H
        for layer in layers:
            if Z.shape[-1] != layer.d:
                raise DimensionError(f"trailing dimension {Z.shape[-1]} != layer width {layer.d}")
            inputs.append(Z)
            a = Z @ layer.W_r + layer.B_r
            pre.append(a)
            Z = np.maximum(a, 0.0) if activation == "relu" else a
        return Z, (inputs, pre)
    n = H.shape[axis]
    spec = nm.rfft(H, axis)
    out, inputs = fremlp_stack_forward(spec, layers, activation, return_inputs=True)
    return nm.irfft(out, n, axis), inputs


def _frequency_learner_backward(grad, layers, cache, axis, activation, domain, interior_scaling):
    if domain == "time":
        inputs, pre = cache
        grads = []
        for k in range(len(layers) - 1, -1, -1):
            g = grad * (pre[k] > 0) if activation == "relu" else grad
            d = layers[k].d
            g2 = g.reshape(-1, d)
            x2 = inputs[k].reshape(-1, d)
            grads.append(FreMLPParams(x2.T @ g2, np.zeros((d, d)), g2.sum(axis=0), np.zeros(d)))
            grad = g @ layers[k].W_r.T
        return grads[::-1], grad
    n = grad.shape[axis]
    g_spec = nm.irfft_adjoint(grad, n, axis, interior_scaling=interior_scaling)
    layer_grads, g_in = fremlp_stack_backward(cache, layers, g_spec.re, g_spec.im, activation)
    g_time = nm.rfft_adjoint(g_in, n, axis, interior_scaling=interior_scaling)
    return [g.params() for g in layer_grads], g_time


def _check_learner_input(H, axis_name):
    if H.ndim < 3:
        raise DimensionError(f"{axis_name} learner expects (..., N, L, d), got shape {H.shape}")


def channel_learner(H, params, activation="relu"):
    """Mix channels: DFT along N, FreMLP on d (shared over timestamps and bins), inverse DFT."""
    H = np.asarray(H, dtype=np.float64)
    _check_learner_input(H, "channel")
    return _frequency_learner(H, _as_layers(params), -3, activation)[0]


def temporal_learner(Z, params, activation="relu"):
    """Mix timestamps: DFT along L, FreMLP on d (shared over channels and bins), inverse DFT."""
    Z = np.asarray(Z, dtype=np.float64)
    _check_learner_input(Z, "temporal")
    return _frequency_learner(Z, _as_layers(params), -2, activation)[0]


def projection(S, w1, b1, w2, b2, activation="relu"):
    """Per-channel two-layer FFN over the flattened ``L*d`` features."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim < 3:
        raise DimensionError(f"projection expects (..., N, L, d), got shape {S.shape}")
    flat = S.reshape(S.shape[:-2] + (-1,))
    if flat.shape[-1] != w1.shape[0] or w1.shape[1] != b1.shape[0] or w2.shape[0] != w1.shape[1]:
        raise DimensionError(
            f"projection shapes do not chain: features {flat.shape[-1]}, "
            f"w1 {w1.shape}, b1 {b1.shape}, w2 {w2.shape}"
        )
    if w2.shape[1] != b2.shape[0]:
        raise DimensionError(f"w2 {w2.shape} and b2 {b2.shape} disagree")
    hidden = flat @ w1 + b1
    if activation == "relu":
        hidden = np.maximum(hidden, 0.0)
    return hidden @ w2 + b2


# -- full model -------------------------------------------------------------------

def _check_input(X, config):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[1:] != (config.channels, config.lookback):
        raise ConfigError(
            f"input shape {X.shape} does not match (B, {config.channels}, {config.lookback})"
        )
    return X


def _forward(X, params, config):
    X = _check_input(X, config)
    check_params(params, config)
    cache = {"X": X}
    S = dimension_extension(X, params.embed)
    if config.channel_enabled:
        S, cache["channel"] = _frequency_learner(
            S, params.channel, 1, config.activation, config.learner_domain
        )
    if config.temporal_enabled:
        S, cache["temporal"] = _frequency_learner(
            S, params.temporal, 2, config.activation, config.learner_domain
        )
    # one row per (window, channel); 2-D products stay on a single GEMM call
    flat = S.reshape(-1, config.lookback * config.embed_dim)
    pre = flat @ params.w1 + params.b1
    hidden = np.maximum(pre, 0.0) if config.projection_activation == "relu" else pre
    out = (hidden @ params.w2 + params.b2).reshape(X.shape[0], config.channels, config.horizon)
    cache.update(flat=flat, pre=pre, hidden=hidden)
    return out, cache


def frets_forward(X, params, config):
    """Forecast ``(B, N, horizon)`` from windows ``X`` of shape ``(B, N, lookback)``."""
    return _forward(X, params, config)[0]


def loss_and_grads(X, targets, params, config, loss_scale=1.0, interior_scaling=True):
    """MSE loss (times ``loss_scale``) and its gradient for every parameter.

    ``interior_scaling=False`` drops the conjugate-bin weighting in the DFT
    adjoints; it exists only as a negative control for the gradient checks.
    """
    pred, cache = _forward(X, params, config)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != pred.shape:
        raise DimensionError(f"targets shape {targets.shape} != prediction shape {pred.shape}")
    diff = pred - targets
    loss = loss_scale * float(np.mean(diff * diff))
    g_out = (2.0 * loss_scale / diff.size) * diff

    g_out2 = g_out.reshape(-1, config.horizon)
    g_hidden = g_out2 @ params.w2.T
    g_pre = g_hidden * (cache["pre"] > 0) if config.projection_activation == "relu" else g_hidden
    grads = FreTSParams(
        embed=None,
        w1=cache["flat"].T @ g_pre,
        b1=g_pre.sum(axis=0),
        w2=cache["hidden"].T @ g_out2,
        b2=g_out2.sum(axis=0),
    )
    g = (g_pre @ params.w1.T).reshape(cache["X"].shape + (config.embed_dim,))
    if config.temporal_enabled:
        grads.temporal, g = _frequency_learner_backward(
            g, params.temporal, cache["temporal"], 2, config.activation,
            config.learner_domain, interior_scaling,
        )
    if config.channel_enabled:
        grads.channel, g = _frequency_learner_backward(
            g, params.channel, cache["channel"], 1, config.activation,
            config.learner_domain, interior_scaling,
        )
    grads.embed = np.einsum("bnlk,bnl->k", g, cache["X"])
    return loss, grads


def frets_backward(X, targets, params, config, loss_scale=1.0):
    return loss_and_grads(X, targets, params, config, loss_scale)[1]
