"""Layers with explicit forward and backward passes.

Sequences are channels-last: a batch of 1-D signals has shape
``(batch, length, channels)``.
"""
from __future__ import annotations

import numpy as np


def dense_forward(x, W, b):
    x = np.asarray(x)
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"input width {x.shape[-1]} does not match weight rows {W.shape[0]}")
    return x @ W + b


def relu(x):
    return np.maximum(x, 0)


def _windows(x, k):
    """``(B, L, C) -> (B, L-k+1, k*C)`` sliding windows, tap-major."""
    B, L, C = x.shape
    out_len = L - k + 1
    idx = np.arange(out_len)[:, None] + np.arange(k)[None, :]
    return x[:, idx, :].reshape(B, out_len, k * C)


def conv1d_forward(seq, kernels, biases):
    """Valid, stride-1 1-D convolution (cross-correlation).

    ``seq`` is ``(L,)``, ``(L, C)`` or ``(B, L, C)``; ``kernels`` is ``(k, C, F)``
    or ``(k,)`` for a single-channel single-filter kernel.
    """
    x = np.asarray(seq, dtype=float)
    squeeze = x.ndim
    kernels = np.asarray(kernels, dtype=float)
    if kernels.ndim == 1:
        kernels = kernels[:, None, None]
    if x.ndim == 1:
        x = x[None, :, None]
    elif x.ndim == 2:
        x = x[None]
    k, C, F = kernels.shape
    if x.shape[1] < k:
        raise ValueError(f"sequence length {x.shape[1]} shorter than kernel size {k}")
    if x.shape[2] != C:
        raise ValueError(f"expected {C} input channels, got {x.shape[2]}")
    y = _windows(x, k) @ kernels.reshape(k * C, F) + np.asarray(biases, dtype=float)
    if squeeze == 1 and F == 1:
        return y[0, :, 0]
    return y[0] if squeeze <= 2 else y


def maxpool1d(seq, pool=2):
    """Non-overlapping max pooling; a trailing partial window is dropped."""
    x = np.asarray(seq)
    flat = x.ndim == 1
    if flat:
        x = x[None, :, None]
    B, L, C = x.shape
    if L == 0:
        raise ValueError("empty sequence")
    n = L // pool
    y = x[:, : n * pool].reshape(B, n, pool, C).max(axis=2)
    return y[0, :, 0] if flat else y


class Layer:
    """Base layer: stateless unless it owns parameters."""

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def output_shape(self, shape: tuple[int, ...]) -> tuple[int, ...]:
        return shape

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"type": type(self).__name__}


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng=None, dtype=np.float64, bias: float = 0.0):
        self.n_in, self.n_out = int(n_in), int(n_out)
        limit = np.sqrt(6.0 / self.n_in)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.W = rng.uniform(-limit, limit, (self.n_in, self.n_out)).astype(dtype)
        self.b = np.full(self.n_out, bias, dtype=dtype)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def output_shape(self, shape):
        if shape != (self.n_in,):
            raise ValueError(f"dense layer expects ({self.n_in},), got {shape}")
        return (self.n_out,)

    def forward(self, x):
        self._x = x
        return dense_forward(x, self.W, self.b)

    def backward(self, dy):
        self.dW[...] = self._x.T @ dy
        self.db[...] = dy.sum(axis=0)
        return dy @ self.W.T

    def describe(self):
        return {"type": "Dense", "units": self.n_out}


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.maximum(x, 0)

    def backward(self, dy):
        return dy * self._mask


class Conv1D(Layer):
    def __init__(self, in_channels: int, filters: int, kernel_size: int, rng=None, dtype=np.float64, bias: float = 0.0):
        self.C, self.F, self.k = int(in_channels), int(filters), int(kernel_size)
        fan_in = self.k * self.C
        limit = np.sqrt(6.0 / fan_in)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.W = rng.uniform(-limit, limit, (self.k, self.C, self.F)).astype(dtype)
        self.b = np.full(self.F, bias, dtype=dtype)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def output_shape(self, shape):
        L, C = shape
        if C != self.C:
            raise ValueError(f"conv layer expects {self.C} channels, got {C}")
        if L < self.k:
            raise ValueError(f"sequence length {L} shorter than kernel size {self.k}")
        return (L - self.k + 1, self.F)

    def forward(self, x):
        self._in_shape = x.shape
        self._cols = _windows(x, self.k)
        B, out_len, width = self._cols.shape
        # one 2-D GEMM; a batched 3-D matmul is far slower here
        y = self._cols.reshape(B * out_len, width) @ self.W.reshape(width, self.F)
        y += self.b
        return y.reshape(B, out_len, self.F)

    def backward(self, dy):
        B, L, C = self._in_shape
        k, F = self.k, self.F
        out_len = L - k + 1
        cols = self._cols.reshape(B * out_len, k * C)
        g = dy.reshape(B * out_len, F)
        self.dW[...] = (cols.T @ g).reshape(k, C, F)
        self.db[...] = g.sum(axis=0)
        dx = np.zeros(self._in_shape, dtype=dy.dtype)
        for tap in range(k):
            dx[:, tap : tap + out_len, :] += (g @ self.W[tap].T).reshape(B, out_len, C)
        return dx

    def describe(self):
        return {"type": "Conv1D", "filters": self.F, "kernel_size": self.k}


class MaxPool1D(Layer):
    def __init__(self, pool: int = 2):
        self.pool = int(pool)

    def output_shape(self, shape):
        L, C = shape
        return (L // self.pool, C)

    def forward(self, x):
        B, L, C = x.shape
        n, p = L // self.pool, self.pool
        self._in_shape = x.shape
        win = x[:, : n * p].reshape(B, n, p, C)
        self._arg = win.argmax(axis=2)
        return np.take_along_axis(win, self._arg[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(self, dy):
        B, L, C = self._in_shape
        n, p = L // self.pool, self.pool
        win = np.zeros((B, n, p, C), dtype=dy.dtype)
        np.put_along_axis(win, self._arg[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = np.zeros(self._in_shape, dtype=dy.dtype)
        dx[:, : n * p] = win.reshape(B, n * p, C)
        return dx

    def describe(self):
        return {"type": "MaxPool1D", "pool": self.pool}


class Flatten(Layer):
    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._in_shape)


class Permute(Layer):
    """Reorder input columns; ``order[i]`` is the source column of output column ``i``."""

    def __init__(self, order):
        self.order = np.asarray(order, dtype=int)
        self._inverse = np.argsort(self.order)

    def output_shape(self, shape):
        if shape != (len(self.order),):
            raise ValueError(f"permutation of {len(self.order)} columns applied to shape {shape}")
        return shape

    def forward(self, x):
        return x[:, self.order]

    def backward(self, dy):
        return dy[:, self._inverse]

    def describe(self):
        return {"type": "Permute", "order": self.order.tolist()}


class AddChannel(Layer):
    """``(B, L) -> (B, L, 1)``: a feature row read as a one-channel sequence."""

    def output_shape(self, shape):
        return shape + (1,)

    def forward(self, x):
        return x[:, :, None]

    def backward(self, dy):
        return dy[:, :, 0]
