"""Small float64 neural-network engine: layers, losses, optimizers, gradient oracle."""

from .gradcheck import max_relative_error, numerical_grad
from .layers import LSTM, Conv1D, Dense, conv1d_forward, dense_forward, lstm_forward, sigmoid, softsign
from .losses import bce_loss, bce_per_sample, mse_loss, mse_per_sample
from .optim import Adam, AdaGrad, make_optimizer
from .params import ParamSet, glorot_uniform

__all__ = [
    "LSTM", "Conv1D", "Dense", "ParamSet", "Adam", "AdaGrad",
    "conv1d_forward", "dense_forward", "lstm_forward", "sigmoid", "softsign",
    "bce_loss", "bce_per_sample", "mse_loss", "mse_per_sample",
    "make_optimizer", "glorot_uniform", "numerical_grad", "max_relative_error",
]
