"""Minimal NHWC layer kernels with hand-written backward passes."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d(x, w, b):
    """'same' convolution. x: (N, H, W, C), w: (O, C, k, k) -> (N, H, W, O)."""
    n, h, wd, c = x.shape
    o, _, k, _ = w.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0))) if p else x
    cols = sliding_window_view(xp, (k, k), axis=(1, 2)).reshape(n * h * wd, c * k * k)
    y = cols @ w.reshape(o, -1).T
    y += b
    return y.reshape(n, h, wd, o), (cols, x.shape, w)


def conv2d_backward(dy, cache, need_dx=True):
    cols, xshape, w = cache
    n, h, wd, c = xshape
    o, _, k, _ = w.shape
    dyf = dy.reshape(-1, o)
    dw = (dyf.T @ cols).reshape(w.shape)
    db = dyf.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dcols = (dyf @ w.reshape(o, -1)).reshape(n, h, wd, c, k, k)
    p = k // 2
    dxp = np.zeros((n, h + 2 * p, wd + 2 * p, c), dtype=dy.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + h, j:j + wd, :] += dcols[..., i, j]
    return dxp[:, p:p + h, p:p + wd, :], dw, db


def relu(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dy, mask):
    return dy * mask


def maxpool2(x):
    n, h, w, c = x.shape
    win = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
    idx = win.argmax(axis=-1)
    y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return y, (idx, x.shape)


def maxpool2_backward(dy, cache):
    idx, shape = cache
    n, h, w, c = shape
    dwin = np.zeros((*dy.shape, 4), dtype=dy.dtype)
    np.put_along_axis(dwin, idx[..., None], dy[..., None], axis=-1)
    return dwin.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(shape)


def upsample2(x):
    return x.repeat(2, axis=1).repeat(2, axis=2)


def upsample2_backward(dy):
    n, h, w, c = dy.shape
    return dy.reshape(n, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))


def softplus_bce(z, y):
    """Elementwise ``max(z, 0) - z*y + log(1 + exp(-|z|))``."""
    return np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))


def sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1 / (1 + e), e / (1 + e))
