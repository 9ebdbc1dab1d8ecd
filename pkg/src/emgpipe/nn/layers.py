"""Layer definitions and float32 ops.

Convolution and the fully connected layer accumulate contributions in a fixed
ascending (in_channel, tap) order with float32 arithmetic throughout, so
results are bit-identical to a naive nested-loop evaluation in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch

__all__ = [
    "Conv1d",
    "Relu",
    "MaxPool",
    "Gap",
    "Fc",
    "Softmax",
    "conv1d",
    "relu",
    "maxpool1d",
    "global_avg_pool",
    "fully_connected",
    "softmax",
    "out_len",
]


def out_len(length: int, kernel: int, stride: int) -> int:
    return (length - kernel) // stride + 1


@dataclass(eq=False)
class Conv1d:
    in_channels: int
    out_channels: int
    kernel: int
    stride: int
    weights: np.ndarray  # float32 (out, in, kernel)
    bias: np.ndarray  # float32 (out,)


@dataclass(eq=False)
class Relu:
    pass


@dataclass(eq=False)
class MaxPool:
    kernel: int = 2
    stride: int = 2


@dataclass(eq=False)
class Gap:
    pass


@dataclass(eq=False)
class Fc:
    in_features: int
    out_features: int
    weights: np.ndarray  # float32 (out, in)
    bias: np.ndarray  # float32 (out,)


@dataclass(eq=False)
class Softmax:
    pass


def conv1d(x: np.ndarray, layer: Conv1d) -> np.ndarray:
    c_in, length = x.shape
    if c_in != layer.in_channels:
        raise ShapeMismatch(f"conv expects {layer.in_channels} channels, got {c_in}")
    if length < layer.kernel:
        raise ShapeMismatch(f"input length {length} shorter than kernel {layer.kernel}")
    n_out = out_len(length, layer.kernel, layer.stride)
    x = np.ascontiguousarray(x, dtype=np.float32)
    w = layer.weights
    acc = np.empty((layer.out_channels, n_out), dtype=np.float32)
    acc[:] = layer.bias[:, None]
    stride = layer.stride
    for ci in range(layer.in_channels):
        row = x[ci]
        for t in range(layer.kernel):
            acc += w[:, ci, t][:, None] * row[t : t + stride * n_out : stride][None, :]
    return acc


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def maxpool1d(x: np.ndarray, layer: MaxPool) -> np.ndarray:
    _, length = x.shape
    if length < layer.kernel:
        raise ShapeMismatch(f"input length {length} shorter than pool kernel {layer.kernel}")
    n_out = out_len(length, layer.kernel, layer.stride)
    out = x[:, 0 : layer.stride * n_out : layer.stride].copy()
    for t in range(1, layer.kernel):
        np.maximum(out, x[:, t : t + layer.stride * n_out : layer.stride], out=out)
    return out


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    if x.shape[1] < 1:
        raise ShapeMismatch("global average pool needs length >= 1")
    return x.mean(axis=1, keepdims=True, dtype=np.float32)


def fully_connected(x: np.ndarray, layer: Fc) -> np.ndarray:
    flat = x.reshape(-1).astype(np.float32, copy=False)
    if flat.shape[0] != layer.in_features:
        raise ShapeMismatch(f"fc expects {layer.in_features} features, got {flat.shape[0]}")
    y = layer.bias.copy()
    for i in range(layer.in_features):
        y += layer.weights[:, i] * flat[i]
    return y


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits.astype(np.float64) - float(np.max(logits))
    e = np.exp(z)
    return (e / e.sum()).astype(np.float64)
