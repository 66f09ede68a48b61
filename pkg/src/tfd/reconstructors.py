"""The time-domain LSTM autoencoder and the frequency-domain convolutional residual network.

Both map a batch of ``(16, 2)`` normalized feature matrices to a same-shape
reconstruction. ``forward`` records the graph; ``backward`` takes the
gradient of a loss w.r.t. the model output and fills every parameter's
gradient slot.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch
from .nncore import LSTM, Conv1D, Dense, ParamSet, sigmoid
from .nncore.losses import bce_loss, bce_per_sample, mse_loss, mse_per_sample
from .rng import substream

N_STEPS = 16
N_FEATURES = 2
FREQ_KERNELS = (32, 26, 8, 4, 2)


def _batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[-1] != N_FEATURES:
        raise ShapeMismatch(f"expected (..., steps, {N_FEATURES}) input, got {x.shape}")
    return x, single


class TimeReconstructor:
    """LSTM(32) -> LSTM(8, last state) -> repeat x16 -> LSTM(8) -> LSTM(32) -> Dense(2)."""

    kind = "time"
    optimizer = "adagrad"

    def __init__(self, seed: int | None = 0, n_steps: int = N_STEPS):
        rng = substream(seed, "init", "time") if seed is not None else None
        self.n_steps = n_steps
        self.enc1 = LSTM(N_FEATURES, 32, return_sequence=True, rng=rng)
        self.enc2 = LSTM(32, 8, return_sequence=False, rng=rng)
        self.dec1 = LSTM(8, 8, return_sequence=True, rng=rng)
        self.dec2 = LSTM(8, 32, return_sequence=True, rng=rng)
        self.out = Dense(32, N_FEATURES, rng=rng)
        self.params = ParamSet.union(
            {"enc1": self.enc1.params, "enc2": self.enc2.params, "dec1": self.dec1.params,
             "dec2": self.dec2.params, "out": self.out.params}
        )
        self.boosted = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        xb, single = _batch(x)
        z = self.enc2.forward(self.enc1.forward(xb))
        # channel enhancement: the 1x8 code repeated once per time step
        self.boosted = np.repeat(z[:, None, :], xb.shape[1], axis=1)
        y = self.out.forward(self.dec2.forward(self.dec1.forward(self.boosted)))
        return y[0] if single else y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dyb = dy[None] if dy.ndim == 2 else dy
        d = self.dec1.backward(self.dec2.backward(self.out.backward(dyb)))
        dx = self.enc1.backward(self.enc2.backward(d.sum(axis=1)))
        return dx[0] if dy.ndim == 2 else dx

    def loss(self, x: np.ndarray, xr: np.ndarray) -> tuple[float, np.ndarray]:
        return mse_loss(x, xr)

    def score(self, x: np.ndarray) -> np.ndarray:
        """Per-sample reconstruction MSE."""
        xb, single = _batch(x)
        r = mse_per_sample(xb, self.forward(xb))
        return r[0] if single else r


class FreqReconstructor:
    """Five causal width-2 convolutions added back onto the input, then a logistic squash."""

    kind = "freq"
    optimizer = "adam"

    def __init__(self, seed: int | None = 0, kernels: tuple[int, ...] = FREQ_KERNELS):
        if kernels[-1] != N_FEATURES:
            raise ShapeMismatch(f"last block must have {N_FEATURES} kernels, got {kernels[-1]}")
        rng = substream(seed, "init", "freq") if seed is not None else None
        self.kernels = tuple(kernels)
        self.convs: list[Conv1D] = []
        in_ch = N_FEATURES
        for k, n in enumerate(kernels):
            act = "linear" if k == len(kernels) - 1 else "relu"
            self.convs.append(Conv1D(in_ch, n, activation=act, rng=rng))
            in_ch = n
        self.params = ParamSet.union({f"conv{k + 1}": c.params for k, c in enumerate(self.convs)})
        self._out = None

    def pre_squash(self, x: np.ndarray) -> np.ndarray:
        """Residual sum ``x + F(x)`` before the logistic squash."""
        xb, single = _batch(x)
        h = xb
        for conv in self.convs:
            h = conv.forward(h)
        s = xb + h
        return s[0] if single else s

    def forward(self, x: np.ndarray) -> np.ndarray:
        p = sigmoid(self.pre_squash(x))
        self._out = p
        return p

    def backward(self, dy: np.ndarray) -> np.ndarray:
        p = self._out
        if p is None:
            from .errors import GraphNotRecorded

            raise GraphNotRecorded("FreqReconstructor.backward called before forward")
        ds = dy * p * (1.0 - p)
        single = ds.ndim == 2
        d = ds[None] if single else ds
        for conv in reversed(self.convs):
            d = conv.backward(d)
        dx = (ds[None] if single else ds) + d
        return dx[0] if single else dx

    def loss(self, x: np.ndarray, xr: np.ndarray) -> tuple[float, np.ndarray]:
        return bce_loss(x, xr)

    def score(self, x: np.ndarray) -> np.ndarray:
        """Per-sample reconstruction cross-entropy."""
        xb, single = _batch(x)
        r = bce_per_sample(xb, self.forward(xb))
        return r[0] if single else r


def init_time(seed: int) -> TimeReconstructor:
    return TimeReconstructor(seed)


def init_freq(seed: int) -> FreqReconstructor:
    return FreqReconstructor(seed)


def build(kind: str, seed: int | None = 0):
    if kind == "time":
        return TimeReconstructor(seed)
    if kind == "freq":
        return FreqReconstructor(seed)
    raise ValueError(f"unknown reconstructor kind {kind!r}")


def time_forward(model: TimeReconstructor, x: np.ndarray) -> np.ndarray:
    return model.forward(x)


def freq_forward(model: FreqReconstructor, x: np.ndarray) -> np.ndarray:
    return model.forward(x)


def score_time(model: TimeReconstructor, x: np.ndarray):
    return model.score(x)


def score_freq(model: FreqReconstructor, x: np.ndarray):
    return model.score(x)
