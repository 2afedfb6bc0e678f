"""Primitive forward/backward pairs used by the sequence backbones.

Every backward consumes the cache its forward produced; gradients are exact
reverse-mode derivatives in float64.
"""
from __future__ import annotations

import numpy as np

LN_EPS = 1e-5


def layernorm_fw(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def layernorm_bw(dy: np.ndarray, cache):
    xhat, inv, g = cache
    d = xhat.shape[-1]
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True) / d)
    return dx, dg, db


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def silu_fw(x: np.ndarray):
    s = sigmoid(x)
    return x * s, (x, s)


def silu_bw(dy: np.ndarray, cache):
    x, s = cache
    return dy * (s + x * s * (1.0 - s))


def softplus_fw(x: np.ndarray):
    out = np.logaddexp(0.0, x)
    return out, sigmoid(x)


def softplus_bw(dy: np.ndarray, sig):
    return dy * sig


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)
