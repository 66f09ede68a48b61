"""Reconstruction losses. Each returns ``(loss, d loss / d reconstruction)``."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

BCE_CLIP = 1e-7


def _check(x: np.ndarray, xr: np.ndarray) -> None:
    if np.shape(x) != np.shape(xr):
        raise ShapeMismatch(f"loss operands differ in shape: {np.shape(x)} vs {np.shape(xr)}")


def mse_loss(x: np.ndarray, xr: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over every element."""
    _check(x, xr)
    diff = np.asarray(x, dtype=np.float64) - xr
    return float(np.mean(diff * diff)), -2.0 * diff / diff.size


def bce_loss(x: np.ndarray, p: np.ndarray) -> tuple[float, np.ndarray]:
    """Binary cross-entropy ``-mean[x ln p + (1-x) ln(1-p)]``.

    ``p`` is clipped to ``[1e-7, 1 - 1e-7]``; the gradient is zero where the
    clip is active.
    """
    _check(x, p)
    x = np.asarray(x, dtype=np.float64)
    pc = np.clip(p, BCE_CLIP, 1.0 - BCE_CLIP)
    loss = -np.mean(x * np.log(pc) + (1.0 - x) * np.log1p(-pc))
    grad = -(x / pc - (1.0 - x) / (1.0 - pc)) / x.size
    grad = np.where((p < BCE_CLIP) | (p > 1.0 - BCE_CLIP), 0.0, grad)
    return float(loss), grad


def mse_per_sample(x: np.ndarray, xr: np.ndarray) -> np.ndarray:
    """MSE of each sample in a batch ``(N, ...)``."""
    _check(x, xr)
    diff = x - xr
    return np.mean((diff * diff).reshape(len(diff), -1), axis=1)


def bce_per_sample(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    _check(x, p)
    pc = np.clip(p, BCE_CLIP, 1.0 - BCE_CLIP)
    terms = x * np.log(pc) + (1.0 - x) * np.log1p(-pc)
    return -np.mean(terms.reshape(len(terms), -1), axis=1)
