"""Reference ReLU networks: layer specs, forward pass and a small SGD trainer.

Images are laid out as ``(h, w, c)``; convolution kernels as ``(n, c, k, k)``.
Convolutions are "valid" (no padding, stride 1) and pooling is a
non-overlapping average over ``j x j`` windows. Flattening before a dense
layer is row-major over ``(h, w, c)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

log = logging.getLogger(__name__)

__all__ = [
    "AvgPool",
    "Conv",
    "Dense",
    "ForwardResult",
    "NetworkSpec",
    "Output",
    "ShapeError",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "ann_forward",
    "accuracy",
    "init_ffnn",
    "loss_and_grads",
    "train_ffnn",
]


class ShapeError(ValueError):
    def __init__(self, message: str, layer: Optional[int] = None):
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


class TrainingError(RuntimeError):
    pass


@dataclass
class Dense:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    kind = "dense"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)


@dataclass
class Output(Dense):
    """Final linear layer; no rectification."""

    kind = "output"


@dataclass
class Conv:
    kernels: np.ndarray  # (n, c, k, k)
    bias: np.ndarray  # (n,)
    kind = "conv"

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)

    @property
    def size(self) -> int:
        return self.kernels.shape[-1]


@dataclass
class AvgPool:
    window: int
    kind = "avgpool"


Layer = Union[Dense, Output, Conv, AvgPool]


def _check_finite(arr: np.ndarray, what: str, index: int) -> None:
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{what} contains non-finite values", index)


@dataclass
class NetworkSpec:
    input_shape: Tuple[int, ...]
    layers: List[Layer] = field(default_factory=list)

    def __post_init__(self):
        if isinstance(self.input_shape, int):
            self.input_shape = (self.input_shape,)
        self.input_shape = tuple(int(n) for n in self.input_shape)

    def shapes(self) -> List[Tuple[int, ...]]:
        """Output shape of every layer; raises :class:`ShapeError` on mismatch."""
        shape = self.input_shape
        out = []
        if not self.layers:
            raise ShapeError("network has no layers")
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Dense):
                n_in = int(np.prod(shape))
                w = layer.weights
                if w.ndim != 2 or w.shape[1] != n_in:
                    raise ShapeError(f"weights {w.shape} do not accept {n_in} inputs", i)
                if layer.bias.shape != (w.shape[0],):
                    raise ShapeError(f"bias shape {layer.bias.shape} != ({w.shape[0]},)", i)
                _check_finite(w, "weights", i)
                _check_finite(layer.bias, "bias", i)
                shape = (w.shape[0],)
            elif isinstance(layer, Conv):
                if len(shape) != 3:
                    raise ShapeError(f"convolution needs an (h, w, c) input, got {shape}", i)
                h, w_, c = shape
                kern = layer.kernels
                if kern.ndim != 4 or kern.shape[1] != c or kern.shape[2] != kern.shape[3]:
                    raise ShapeError(f"kernels {kern.shape} do not fit {c} input channels", i)
                k = kern.shape[-1]
                if k < 1 or k > h or k > w_:
                    raise ShapeError(f"kernel size {k} does not fit a {h}x{w_} map", i)
                if layer.bias.shape != (kern.shape[0],):
                    raise ShapeError(f"bias shape {layer.bias.shape} != ({kern.shape[0]},)", i)
                _check_finite(kern, "kernels", i)
                _check_finite(layer.bias, "bias", i)
                shape = (h - k + 1, w_ - k + 1, kern.shape[0])
            elif isinstance(layer, AvgPool):
                j = int(layer.window)
                if len(shape) != 3:
                    raise ShapeError(f"pooling needs an (h, w, c) input, got {shape}", i)
                if j < 1 or shape[0] % j or shape[1] % j:
                    raise ShapeError(f"pool window {j} does not divide {shape[:2]}", i)
                shape = (shape[0] // j, shape[1] // j, shape[2])
            else:
                raise ShapeError(f"unsupported layer type {type(layer).__name__}", i)
            out.append(shape)
        if not isinstance(self.layers[-1], Output):
            raise ShapeError("final layer must be an Output layer", len(self.layers) - 1)
        if self.layers[-1].weights.shape[0] < 1:
            raise ShapeError("output layer is empty", len(self.layers) - 1)
        for i, layer in enumerate(self.layers[:-1]):
            if isinstance(layer, Output):
                raise ShapeError("Output layer may only appear last", i)
        return out

    def validate(self) -> "NetworkSpec":
        self.shapes()
        return self

    @property
    def n_classes(self) -> int:
        return self.layers[-1].weights.shape[0]

    def describe(self) -> str:
        parts = ["x".join(str(n) for n in self.input_shape)]
        for layer in self.layers:
            if isinstance(layer, Output):
                parts.append(f"{layer.weights.shape[0]}o")
            elif isinstance(layer, Dense):
                parts.append(str(layer.weights.shape[0]))
            elif isinstance(layer, Conv):
                parts.append(f"{layer.kernels.shape[0]}c{layer.size}")
            else:
                parts.append(f"{layer.window}s")
        return "[" + "-".join(parts) + "]"


# -- forward pass -------------------------------------------------------------


def conv_valid(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Valid cross-correlation of ``(..., h, w, c)`` maps with ``(n, c, k, k)``."""
    k = kernels.shape[-1]
    win = sliding_window_view(x, (k, k), axis=(-3, -2))  # (..., h', w', c, k, k)
    return np.einsum("...hwcij,ncij->...hwn", win, kernels, optimize=True)


def avg_pool(x: np.ndarray, j: int) -> np.ndarray:
    *lead, h, w, c = x.shape
    return x.reshape(*lead, h // j, j, w // j, j, c).mean(axis=(-4, -2))


def apply_layer(layer: Layer, x: np.ndarray, batched: bool) -> np.ndarray:
    """Pre-activation of ``layer`` (pooling has none, it is linear)."""
    if isinstance(layer, Dense):
        flat = x.reshape(x.shape[0], -1) if batched else x.reshape(-1)
        return flat @ layer.weights.T + layer.bias
    if isinstance(layer, Conv):
        return conv_valid(x, layer.kernels) + layer.bias
    return avg_pool(x, int(layer.window))


@dataclass
class ForwardResult:
    activations: List[np.ndarray]
    output: np.ndarray

    def prediction(self):
        return np.argmax(self.output, axis=-1)


def ann_forward(net: NetworkSpec, x) -> ForwardResult:
    """Run the network on one input or a batch (leading axis).

    Hidden layers are rectified; the output layer is linear. Dropout is
    never applied here.
    """
    shapes = net.shapes()
    x = np.asarray(x, dtype=float)
    in_shape = net.input_shape
    if x.shape == in_shape:
        batched = False
    elif x.shape[1:] == in_shape:
        batched = True
    elif len(in_shape) == 1 and x.ndim == 1 and x.size == in_shape[0]:
        batched = False
    else:
        raise ShapeError(f"input shape {x.shape} does not match {in_shape}", 0)
    if not np.all(np.isfinite(x)):
        raise ShapeError("input contains non-finite values", 0)
    acts = []
    h = x
    for i, layer in enumerate(net.layers):
        h = apply_layer(layer, h, batched)
        if not isinstance(layer, (Output, AvgPool)):
            h = np.maximum(h, 0.0)
        expect = shapes[i]
        got = h.shape[1:] if batched else h.shape
        if got != expect:
            raise ShapeError(f"produced {got}, expected {expect}", i)
        acts.append(h)
    return ForwardResult(activations=acts[:-1], output=acts[-1])


def accuracy(net: NetworkSpec, features, labels) -> float:
    out = ann_forward(net, features).output
    if out.shape[-1] == 1:
        pred = (out[:, 0] > 0.5).astype(int)
    else:
        pred = np.argmax(out, axis=-1)
    return float(np.mean(pred == np.asarray(labels)))


# -- training -----------------------------------------------------------------


@dataclass
class TrainConfig:
    lr: float = 0.1
    dropout: float = 0.5
    epochs: int = 800
    batch: int = 5
    seed: int = 0
    momentum: float = 0.0
    use_bias: bool = True

    def __post_init__(self):
        if not 0 <= self.dropout < 1:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.epochs < 0 or self.batch < 1:
            raise ValueError("epochs must be >= 0 and batch >= 1")


@dataclass
class TrainResult:
    net: NetworkSpec
    train_accuracy: float
    val_accuracy: Optional[float]
    losses: List[float]


def init_ffnn(sizes: Sequence[int], rng: np.random.Generator, use_bias: bool = True) -> NetworkSpec:
    """Glorot-uniform dense network ``sizes[0] -> ... -> sizes[-1]``, zero biases."""
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output size")
    layers: List[Layer] = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = np.sqrt(6.0 / (n_in + n_out))
        w = rng.uniform(-limit, limit, size=(n_out, n_in))
        cls = Output if i == len(sizes) - 2 else Dense
        layers.append(cls(w, np.zeros(n_out)))
    return NetworkSpec((int(sizes[0]),), layers)


def _targets(labels: np.ndarray, n_out: int) -> np.ndarray:
    if n_out == 1:
        return labels.astype(float).reshape(-1, 1)
    t = np.zeros((labels.size, n_out))
    t[np.arange(labels.size), labels.astype(int)] = 1.0
    return t


def loss_and_grads(net: NetworkSpec, x: np.ndarray, targets: np.ndarray, masks=None):
    """Mean loss and gradients for a dense network.

    Softmax cross-entropy when there are several outputs, half squared error
    for a single output. ``masks`` are optional (already inverted-scaled)
    dropout masks, one per hidden layer. Returns ``(loss, [(dW, db), ...])``.
    """
    n = x.shape[0]
    acts = [x]
    h = x
    for i, layer in enumerate(net.layers[:-1]):
        h = np.maximum(h @ layer.weights.T + layer.bias, 0.0)
        if masks is not None:
            h = h * masks[i]
        acts.append(h)
    out_layer = net.layers[-1]
    z = h @ out_layer.weights.T + out_layer.bias
    if z.shape[1] == 1:
        diff = z - targets
        loss = 0.5 * float(np.mean(np.sum(diff**2, axis=1)))
        delta = diff / n
    else:
        z_shift = z - z.max(axis=1, keepdims=True)
        logp = z_shift - np.log(np.exp(z_shift).sum(axis=1, keepdims=True))
        loss = -float(np.mean(np.sum(targets * logp, axis=1)))
        delta = (np.exp(logp) - targets) / n
    grads = []
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        a_prev = acts[i]
        grads.append((delta.T @ a_prev, delta.sum(axis=0)))
        if i == 0:
            break
        delta = delta @ layer.weights
        if masks is not None:
            delta = delta * masks[i - 1]
        delta = delta * (acts[i] > 0)
    grads.reverse()
    return loss, grads


def train_ffnn(
    sizes: Sequence[int],
    x_train,
    y_train,
    cfg: TrainConfig,
    x_val=None,
    y_val=None,
) -> TrainResult:
    """Mini-batch SGD with inverted dropout on hidden layers.

    ``y_*`` are integer class labels (0/1 targets for a single-output net).
    Deterministic given ``cfg.seed``.
    """
    rng = np.random.default_rng(cfg.seed)
    x = np.asarray(x_train, dtype=float)
    y = np.asarray(y_train)
    if x.ndim != 2 or x.shape[1] != sizes[0]:
        raise ValueError(f"training data of shape {x.shape} does not match input size {sizes[0]}")
    net = init_ffnn(sizes, rng, cfg.use_bias)
    targets = _targets(y, sizes[-1])
    velocity = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in net.layers]
    keep = 1.0 - cfg.dropout
    losses: List[float] = []
    n = x.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch):
            idx = order[start : start + cfg.batch]
            masks = None
            if cfg.dropout > 0:
                masks = [
                    (rng.random((idx.size, l.weights.shape[0])) < keep) / keep for l in net.layers[:-1]
                ]
            loss, grads = loss_and_grads(net, x[idx], targets[idx], masks)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch starting {start}")
            total += loss * idx.size
            for layer, (gw, gb), vel in zip(net.layers, grads, velocity):
                vel[0][:] = cfg.momentum * vel[0] - cfg.lr * gw
                layer.weights += vel[0]
                if cfg.use_bias:
                    vel[1][:] = cfg.momentum * vel[1] - cfg.lr * gb
                    layer.bias += vel[1]
        losses.append(total / n)
        if epoch % 100 == 0:
            log.debug("epoch %d loss %.5f", epoch, losses[-1])
    train_acc = accuracy(net, x, y)
    val_acc = accuracy(net, x_val, y_val) if x_val is not None else None
    return TrainResult(net, train_acc, val_acc, losses)
