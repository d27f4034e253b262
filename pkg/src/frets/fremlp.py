"""Complex-weighted MLP layer acting on frequency components.

The layer computes ``sigma(Y W + B)`` for complex ``Y``, ``W``, ``B`` in split
real/imaginary form::

    out.re = sigma(Y.re @ W_r - Y.im @ W_i + B_r)
    out.im = sigma(Y.re @ W_i + Y.im @ W_r + B_i)

with ``sigma`` applied to each part separately. Gradients are derived on this
split-real graph.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from frets.errors import ConfigError, DimensionError
from frets.numeric import ComplexTensor

ACTIVATIONS = ("relu", "identity")


@dataclass
class FreMLPParams:
    W_r: np.ndarray
    W_i: np.ndarray
    B_r: np.ndarray
    B_i: np.ndarray

    def __post_init__(self):
        d = self.W_r.shape[0]
        if (
            self.W_r.shape != (d, d)
            or self.W_i.shape != (d, d)
            or self.B_r.shape != (d,)
            or self.B_i.shape != (d,)
        ):
            raise DimensionError(
                "FreMLP blocks must be W (d, d) and B (d,), got "
                f"{self.W_r.shape}, {self.W_i.shape}, {self.B_r.shape}, {self.B_i.shape}"
            )

    @property
    def d(self):
        return self.W_r.shape[0]

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d), np.zeros((d, d)), np.zeros(d), np.zeros(d))

    def arrays(self):
        return {"W_r": self.W_r, "W_i": self.W_i, "B_r": self.B_r, "B_i": self.B_i}

    def copy(self):
        return FreMLPParams(self.W_r.copy(), self.W_i.copy(), self.B_r.copy(), self.B_i.copy())


@dataclass
class FreMLPGrads:
    W_r: np.ndarray
    W_i: np.ndarray
    B_r: np.ndarray
    B_i: np.ndarray
    input: ComplexTensor

    def params(self):
        return FreMLPParams(self.W_r, self.W_i, self.B_r, self.B_i)


def fremlp_init(d, seed):
    """Weights i.i.d. uniform on ``[-1/sqrt(d), 1/sqrt(d)]``, zero biases."""
    if d < 1:
        raise ConfigError(f"FreMLP width must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d)
    return FreMLPParams(
        rng.uniform(-bound, bound, size=(d, d)),
        rng.uniform(-bound, bound, size=(d, d)),
        np.zeros(d),
        np.zeros(d),
    )


def _check(Y, params, activation):
    if activation not in ACTIVATIONS:
        raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    if Y.shape[-1] != params.d:
        raise DimensionError(
            f"input trailing dimension {Y.shape[-1]} does not match layer width {params.d}"
        )


def _rows(a, d):
    # contiguous 2-D operands keep the products on the BLAS path
    return np.ascontiguousarray(a).reshape(-1, d)


def _preactivation(Y, p):
    d = p.d
    yr, yi = _rows(Y.re, d), _rows(Y.im, d)
    pre_r = yr @ p.W_r - yi @ p.W_i + p.B_r
    pre_i = yr @ p.W_i + yi @ p.W_r + p.B_i
    return pre_r.reshape(Y.shape), pre_i.reshape(Y.shape)


def fremlp_forward(Y, params, activation="relu"):
    _check(Y, params, activation)
    pre_r, pre_i = _preactivation(Y, params)
    if activation == "relu":
        return ComplexTensor(np.maximum(pre_r, 0.0), np.maximum(pre_i, 0.0))
    return ComplexTensor(pre_r, pre_i)


def fremlp_backward(Y, params, grad_re, grad_im, activation="relu", output=None):
    """Gradients of a scalar loss w.r.t. all parameter blocks and the input.

    ``grad_re``/``grad_im`` are the loss gradients w.r.t. the real and
    imaginary parts of the layer output. The relu subgradient at 0 is 0.
    Passing the forward ``output`` saves recomputing the relu masks.
    """
    _check(Y, params, activation)
    if np.shape(grad_re) != Y.shape or np.shape(grad_im) != Y.shape:
        raise DimensionError(
            f"upstream gradient shapes {np.shape(grad_re)}, {np.shape(grad_im)} "
            f"do not match layer output {Y.shape}"
        )
    gr = np.asarray(grad_re, dtype=np.float64)
    gi = np.asarray(grad_im, dtype=np.float64)
    if activation == "relu":
        if output is None:
            output = ComplexTensor(*_preactivation(Y, params))
        gr = gr * (output.re > 0)
        gi = gi * (output.im > 0)
    d = params.d
    yr, yi = _rows(Y.re, d), _rows(Y.im, d)
    gr2, gi2 = _rows(gr, d), _rows(gi, d)
    return FreMLPGrads(
        W_r=yr.T @ gr2 + yi.T @ gi2,
        W_i=yr.T @ gi2 - yi.T @ gr2,
        B_r=gr2.sum(axis=0),
        B_i=gi2.sum(axis=0),
        input=ComplexTensor(
            (gr2 @ params.W_r.T + gi2 @ params.W_i.T).reshape(Y.shape),
            (gi2 @ params.W_r.T - gr2 @ params.W_i.T).reshape(Y.shape),
        ),
    )


def fremlp_stack_forward(Y, layers, activation="relu", return_inputs=False):
    """Apply ``layers`` in sequence, starting from ``Y``.

    With ``return_inputs`` the per-layer inputs plus the final output are
    returned as well, which is what :func:`fremlp_stack_backward` needs.
    """
    if not layers:
        raise ConfigError("a FreMLP stack needs at least one layer")
    d = layers[0].d
    if any(layer.d != d for layer in layers):
        raise ConfigError("all layers of a FreMLP stack must share the same width")
    inputs = []
    for layer in layers:
        inputs.append(Y)
        Y = fremlp_forward(Y, layer, activation)
    if return_inputs:
        return Y, inputs + [Y]
    return Y


def fremlp_stack_backward(inputs, layers, grad_re, grad_im, activation="relu"):
    """Returns ``(per-layer FreMLPGrads, gradient w.r.t. the stack input)``.

    ``inputs`` is the list returned by ``fremlp_stack_forward(...,
    return_inputs=True)``.
    """
    grads = [None] * len(layers)
    for k in range(len(layers) - 1, -1, -1):
        g = fremlp_backward(inputs[k], layers[k], grad_re, grad_im, activation, output=inputs[k + 1])
        grads[k] = g
        grad_re, grad_im = g.input.re, g.input.im
    return grads, ComplexTensor(grad_re, grad_im)
