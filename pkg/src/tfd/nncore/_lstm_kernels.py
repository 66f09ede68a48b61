"""Compiled LSTM recurrences (forward and backward through time).

Gate layout along the last axis is ``[input, forget, candidate, output]``.
Gates use the logistic function; candidate and cell squash use softsign.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath={"reassoc", "contract"})
def lstm_forward_kernel(xproj, Wh, gates, c, h, s):
    B, T, G = xproj.shape
    U = G // 4
    z = np.empty(G)
    for b in range(B):
        for t in range(T):
            for j in range(G):
                z[j] = xproj[b, t, j]
            for k in range(U):
                hk = h[b, t, k]
                for j in range(G):
                    z[j] += hk * Wh[k, j]
            for j in range(U):
                ig = 1.0 / (1.0 + math.exp(-z[j]))
                fg = 1.0 / (1.0 + math.exp(-z[U + j]))
                zg = z[2 * U + j]
                gg = zg / (1.0 + abs(zg))
                og = 1.0 / (1.0 + math.exp(-z[3 * U + j]))
                gates[b, t, j] = ig
                gates[b, t, U + j] = fg
                gates[b, t, 2 * U + j] = gg
                gates[b, t, 3 * U + j] = og
                cc = fg * c[b, t, j] + ig * gg
                c[b, t + 1, j] = cc
                sc = cc / (1.0 + abs(cc))
                s[b, t, j] = sc
                h[b, t + 1, j] = og * sc


@njit(cache=True, fastmath={"reassoc", "contract"})
def lstm_backward_kernel(dh_in, sequence, Wh, gates, c, s, dZ):
    """Fill ``dZ`` (pre-activation gate gradients) from upstream ``dh_in``.

    ``dh_in`` is ``(B, T, U)`` when ``sequence`` is true, else ``(B, U)``
    holding the gradient of the last hidden state only.
    """
    B, T, G = gates.shape
    U = G // 4
    dh = np.empty(U)
    dc = np.empty(U)
    for b in range(B):
        for k in range(U):
            dc[k] = 0.0
            dh[k] = 0.0 if sequence else dh_in[b, 0, k]
        for t in range(T - 1, -1, -1):
            if sequence:
                for k in range(U):
                    dh[k] += dh_in[b, t, k]
            for j in range(U):
                ig = gates[b, t, j]
                fg = gates[b, t, U + j]
                gg = gates[b, t, 2 * U + j]
                og = gates[b, t, 3 * U + j]
                st = s[b, t, j]
                ds = 1.0 - abs(st)
                dcj = dc[j] + dh[j] * og * ds * ds
                dg = 1.0 - abs(gg)
                dZ[b, t, j] = dcj * gg * ig * (1.0 - ig)
                dZ[b, t, U + j] = dcj * c[b, t, j] * fg * (1.0 - fg)
                dZ[b, t, 2 * U + j] = dcj * ig * dg * dg
                dZ[b, t, 3 * U + j] = dh[j] * st * og * (1.0 - og)
                dc[j] = dcj * fg
            for k in range(U):
                acc = 0.0
                for j in range(G):
                    acc += dZ[b, t, j] * Wh[k, j]
                dh[k] = acc
