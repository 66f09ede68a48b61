"""Dense, LSTM and causal width-2 convolution layers with analytic backward passes.

Every layer consumes batched sequences shaped ``(batch, steps, features)``.
``forward`` records what ``backward`` needs; ``backward`` accumulates into
the layer's gradient slots and returns the gradient w.r.t. the input.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphNotRecorded, ShapeMismatch
from ._lstm_kernels import lstm_backward_kernel, lstm_forward_kernel
from .params import ParamSet, glorot_uniform


def sigmoid(v: np.ndarray) -> np.ndarray:
    # tanh form cannot overflow
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def softsign(v: np.ndarray) -> np.ndarray:
    return v / (1.0 + np.abs(v))


def _check_input(x: np.ndarray, dim: int, layer: str) -> None:
    if x.ndim != 3 or x.shape[-1] != dim:
        raise ShapeMismatch(f"{layer}: expected (batch, steps, {dim}), got {x.shape}")


class Layer:
    params: ParamSet

    def _require(self, attr: str):
        cache = getattr(self, attr, None)
        if cache is None:
            raise GraphNotRecorded(f"{type(self).__name__}.backward called before forward")
        return cache


class Dense(Layer):
    """Per-timestep affine map ``y[t] = x[t] @ W + b`` (no activation)."""

    def __init__(self, in_dim: int, units: int, rng: np.random.Generator | None = None):
        self.in_dim, self.units = in_dim, units
        self.params = ParamSet()
        w = glorot_uniform(rng, (in_dim, units), in_dim, units) if rng is not None else np.zeros((in_dim, units))
        self.W = self.params.add("W", w)
        self.b = self.params.add("b", np.zeros(units))
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        _check_input(x, self.in_dim, "Dense")
        self._x = x
        return x @ self.W + self.b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x = self._require("_x")
        self.params.grads["W"] += x.reshape(-1, self.in_dim).T @ dy.reshape(-1, self.units)
        self.params.grads["b"] += dy.sum(axis=(0, 1))
        return dy @ self.W.T


class LSTM(Layer):
    """LSTM with sigmoid gates and softsign in place of tanh.

    Gate columns of ``W`` (shape ``(D+U, 4U)``) are ordered input, forget,
    candidate, output. Rows ``[:D]`` act on the input, ``[D:]`` on ``h_{t-1}``.
    """

    def __init__(
        self,
        in_dim: int,
        units: int,
        return_sequence: bool = True,
        rng: np.random.Generator | None = None,
        forget_bias: float = 1.0,
    ):
        self.in_dim, self.units, self.return_sequence = in_dim, units, return_sequence
        self.params = ParamSet()
        shape = (in_dim + units, 4 * units)
        if rng is not None:
            w = glorot_uniform(rng, shape, in_dim + units, 4 * units)
            b = np.zeros(4 * units)
            b[units : 2 * units] = forget_bias
        else:
            w, b = np.zeros(shape), np.zeros(4 * units)
        self.W = self.params.add("W", w)
        self.b = self.params.add("b", b)
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        _check_input(x, self.in_dim, "LSTM")
        B, T, D = x.shape
        U = self.units
        xproj = np.ascontiguousarray(x @ self.W[:D] + self.b)
        Wh = np.ascontiguousarray(self.W[D:])
        gates = np.empty((B, T, 4 * U))
        c = np.zeros((B, T + 1, U))
        h = np.zeros((B, T + 1, U))
        s = np.empty((B, T, U))
        lstm_forward_kernel(xproj, Wh, gates, c, h, s)
        self._cache = (x, gates, c, h, s)
        return h[:, 1:].copy() if self.return_sequence else h[:, T].copy()

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x, gates, c, h, s = self._require("_cache")
        B, T, D = x.shape
        U = self.units
        Wh = np.ascontiguousarray(self.W[D:])
        dh_in = np.ascontiguousarray(dy if self.return_sequence else dy[:, None, :], dtype=np.float64)
        dZ = np.empty((B, T, 4 * U))
        lstm_backward_kernel(dh_in, self.return_sequence, Wh, gates, c, s, dZ)
        dZ2 = dZ.reshape(-1, 4 * U)
        gW = self.params.grads["W"]
        gW[:D] += x.reshape(-1, D).T @ dZ2
        gW[D:] += h[:, :T].reshape(-1, U).T @ dZ2
        self.params.grads["b"] += dZ2.sum(axis=0)
        return dZ @ self.W[:D].T


class Conv1D(Layer):
    """Width-2, stride-1 convolution with one causal zero row of padding.

    ``y[t, k] = act(sum_c x[t-1, c] w[0, c, k] + x[t, c] w[1, c, k] + b[k])``
    with ``x[-1] = 0``, so the output keeps the input's length.
    """

    def __init__(self, in_ch: int, kernels: int, activation: str = "relu", rng: np.random.Generator | None = None):
        if activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {activation!r}")
        self.in_ch, self.kernels, self.activation = in_ch, kernels, activation
        self.params = ParamSet()
        shape = (2, in_ch, kernels)
        w = glorot_uniform(rng, shape, 2 * in_ch, 2 * kernels) if rng is not None else np.zeros(shape)
        self.w = self.params.add("w", w)
        self.b = self.params.add("b", np.zeros(kernels))
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        _check_input(x, self.in_ch, "Conv1D")
        pre = x @ self.w[1] + self.b
        pre[:, 1:] += x[:, :-1] @ self.w[0]
        if self.activation == "relu":
            mask = pre > 0
            out = pre * mask
        else:
            mask = None
            out = pre
        self._cache = (x, mask)
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x, mask = self._require("_cache")
        C, K = self.in_ch, self.kernels
        dpre = dy * mask if mask is not None else dy
        g = self.params.grads["w"]
        g[1] += x.reshape(-1, C).T @ dpre.reshape(-1, K)
        g[0] += x[:, :-1].reshape(-1, C).T @ dpre[:, 1:].reshape(-1, K)
        self.params.grads["b"] += dpre.sum(axis=(0, 1))
        dx = dpre @ self.w[1].T
        dx[:, :-1] += dpre[:, 1:] @ self.w[0].T
        return dx


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    return x, False


def dense_forward(p: ParamSet, x: np.ndarray) -> np.ndarray:
    """Apply a dense layer held in ``p`` (keys ``W``, ``b``) to a T×D matrix or batch."""
    W = p["W"]
    xb, single = _as_batch(x)
    if xb.shape[-1] != W.shape[0] or p["b"].shape != (W.shape[1],):
        raise ShapeMismatch(f"dense: input dim {xb.shape[-1]} vs weight {W.shape}")
    layer = Dense.__new__(Dense)
    layer.in_dim, layer.units, layer.params, layer.W, layer.b = W.shape[0], W.shape[1], p, W, p["b"]
    y = layer.forward(xb)
    return y[0] if single else y


def lstm_forward(p: ParamSet, x: np.ndarray, units: int, return_sequence: bool = True) -> np.ndarray:
    """Run the LSTM held in ``p`` over a T×D matrix; returns T×U or 1×U."""
    W = p["W"]
    xb, single = _as_batch(x)
    D = xb.shape[-1]
    if W.shape != (D + units, 4 * units) or p["b"].shape != (4 * units,):
        raise ShapeMismatch(f"lstm: weight {W.shape} incompatible with D={D}, U={units}")
    layer = LSTM.__new__(LSTM)
    layer.in_dim, layer.units, layer.return_sequence = D, units, return_sequence
    layer.params, layer.W, layer.b = p, W, p["b"]
    y = layer.forward(xb)
    if single:
        return y[0] if return_sequence else y[0][None, :]
    return y


def conv1d_forward(p: ParamSet, x: np.ndarray, activation: str = "relu") -> np.ndarray:
    """Apply the causal width-2 convolution held in ``p`` (keys ``w``, ``b``)."""
    w = p["w"]
    xb, single = _as_batch(x)
    if w.ndim != 3 or w.shape[0] != 2 or w.shape[1] != xb.shape[-1] or p["b"].shape != (w.shape[2],):
        raise ShapeMismatch(f"conv1d: kernel {w.shape} incompatible with C={xb.shape[-1]}")
    layer = Conv1D.__new__(Conv1D)
    layer.in_ch, layer.kernels, layer.activation = w.shape[1], w.shape[2], activation
    layer.params, layer.w, layer.b = p, w, p["b"]
    y = layer.forward(xb)
    return y[0] if single else y
