"""AdaGrad and Adam, applied in place to a ParamSet as gradient descent."""

from __future__ import annotations

import numpy as np

from .params import ParamSet

EPS = 1e-8


class AdaGrad:
    def __init__(self, lr: float, eps: float = EPS):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.lr, self.eps = lr, eps
        self.G: dict[str, np.ndarray] = {}

    def step(self, params: ParamSet) -> None:
        for name, theta in params.items():
            g = params.grads[name]
            G = self.G.get(name)
            if G is None:
                G = self.G[name] = np.zeros_like(theta)
            G += g * g
            theta -= self.lr * g / (np.sqrt(G) + self.eps)


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = EPS):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: ParamSet) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, theta in params.items():
            g = params.grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(theta)
                self.v[name] = np.zeros_like(theta)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            theta -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def make_optimizer(algorithm: str, lr: float):
    if algorithm.lower() == "adagrad":
        return AdaGrad(lr)
    if algorithm.lower() == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {algorithm!r}")
