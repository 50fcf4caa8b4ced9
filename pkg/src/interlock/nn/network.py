"""Sequential networks and the two surrogate architectures."""
from __future__ import annotations

import numpy as np

from .layers import AddChannel, Conv1D, Dense, Flatten, Layer, MaxPool1D, Permute, ReLU

N_OUTPUTS = 9
MLP_HIDDEN = (256, 256, 256, 128, 64, 32, 16, 8)
CNN_FILTERS = (256, 32)
CNN_KERNEL = 3
CNN_POOL = 2
CNN_DENSE = 80
# small positive bias on ReLU layers so narrow layers start with live units
HIDDEN_BIAS = 0.01


class Network:
    """Sequential stack of layers trained on mean squared error."""

    def __init__(self, layers: list[Layer], input_len: int, kind: str, config: dict):
        self.layers = layers
        self.input_len = int(input_len)
        self.kind = kind
        self.config = dict(config)
        self.shape_chain(include_all=True)  # validates the stack

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    @property
    def dtype(self):
        return self.params()[0].dtype

    def shape_chain(self, include_all: bool = False) -> list[tuple[int, ...]]:
        """Per-sample shapes from input to output.

        By default activations and the channel-axis insertion are skipped so the
        chain lists only layers that change the data shape.
        """
        shape = (self.input_len,)
        chain = [shape]
        for layer in self.layers:
            shape = layer.output_shape(shape)
            if include_all or not isinstance(layer, (ReLU, AddChannel, Permute)):
                chain.append(shape)
        return chain

    def trace_shapes(self, x) -> list[tuple[int, ...]]:
        """Shapes actually produced by a forward pass, batch axis dropped."""
        h = np.asarray(x, dtype=self.dtype)
        chain = [h.shape[1:]]
        for layer in self.layers:
            h = layer.forward(h)
            if not isinstance(layer, (ReLU, AddChannel, Permute)):
                chain.append(h.shape[1:])
        return chain

    def forward(self, x) -> np.ndarray:
        h = np.asarray(x, dtype=self.dtype)
        if h.ndim != 2 or h.shape[1] != self.input_len:
            raise ValueError(f"expected input of shape (batch, {self.input_len}), got {h.shape}")
        for layer in self.layers:
            h = layer.forward(h)
        return h

    def backward(self, dy) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def loss_and_grads(self, x, y) -> float:
        """Mean squared error over all outputs; fills every layer's gradient buffers."""
        y = np.asarray(y, dtype=self.dtype)
        diff = self.forward(x) - y
        loss = float(np.mean(diff.astype(np.float64) ** 2))
        self.backward((2.0 / diff.size) * diff)
        return loss

    def get_weights(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params()]

    def set_weights(self, weights) -> None:
        params = self.params()
        if len(weights) != len(params):
            raise ValueError(f"expected {len(params)} weight arrays, got {len(weights)}")
        for p, w in zip(params, weights):
            w = np.asarray(w)
            if w.shape != p.shape:
                raise ValueError(f"weight shape {w.shape} does not match {p.shape}")
            p[...] = w


def build_mlp(input_len: int, hidden=MLP_HIDDEN, n_out: int = N_OUTPUTS, seed: int = 0, dtype=np.float64) -> Network:
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    width = input_len
    for units in hidden:
        layers += [Dense(width, units, rng, dtype, HIDDEN_BIAS), ReLU()]
        width = units
    layers.append(Dense(width, n_out, rng, dtype))
    return Network(layers, input_len, "mlp", {"hidden": list(hidden), "n_out": n_out})


def build_cnn(
    input_len: int,
    filters=CNN_FILTERS,
    kernel_size: int = CNN_KERNEL,
    pool: int = CNN_POOL,
    dense_units: int = CNN_DENSE,
    n_out: int = N_OUTPUTS,
    seed: int = 0,
    dtype=np.float64,
    input_order=None,
) -> Network:
    """Valid convolutions over the feature row read as a one-channel sequence.

    ``input_order`` optionally permutes the row first.  Floor pooling discards
    the tail of the last feature map, and with it every input that only
    reaches that tail, so the layout of the row matters.
    """
    rng = np.random.default_rng(seed)
    layers: list[Layer] = [AddChannel()]
    if input_order is not None:
        if sorted(input_order) != list(range(input_len)):
            raise ValueError(f"input_order must permute range({input_len})")
        layers.insert(0, Permute(input_order))
    channels = 1
    for f in filters:
        layers += [Conv1D(channels, f, kernel_size, rng, dtype, HIDDEN_BIAS), ReLU()]
        channels = f
    length = input_len - len(filters) * (kernel_size - 1)
    if length < 1:
        raise ValueError(f"input length {input_len} too short for {len(filters)} convolutions of size {kernel_size}")
    flat = (length // pool) * channels
    if flat < 1:
        raise ValueError("pooling leaves an empty feature map")
    layers += [MaxPool1D(pool), Flatten(), Dense(flat, dense_units, rng, dtype, HIDDEN_BIAS), ReLU(), Dense(dense_units, n_out, rng, dtype)]
    config = {"filters": list(filters), "kernel_size": kernel_size, "pool": pool, "dense_units": dense_units, "n_out": n_out,
              "input_order": None if input_order is None else [int(i) for i in input_order]}
    return Network(layers, input_len, "cnn", config)


def visible_inputs(net: Network) -> list[int]:
    """Input columns that can influence the output, found by probing each one."""
    base = np.zeros((1, net.input_len), dtype=np.float64)
    saved = net.get_weights()
    for p in net.params():
        p[...] = 1.0  # positive weights keep every ReLU open
    try:
        ref = net.forward(base)
        seen = []
        for j in range(net.input_len):
            probe = base.copy()
            probe[0, j] = 1.0
            if not np.array_equal(net.forward(probe), ref):
                seen.append(j)
    finally:
        net.set_weights(saved)
    return seen


def build_network(kind: str, input_len: int, config: dict | None = None, seed: int = 0, dtype=np.float64) -> Network:
    config = dict(config or {})
    if kind == "mlp":
        return build_mlp(input_len, seed=seed, dtype=dtype, **config)
    if kind == "cnn":
        return build_cnn(input_len, seed=seed, dtype=dtype, **config)
    raise ValueError(f"unknown network kind {kind!r}; expected 'mlp' or 'cnn'")
