"""Model container, validation, input preparation, and the float inference path."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelInvalid, ShapeMismatch
from .layers import (
    Conv1d,
    Fc,
    Gap,
    MaxPool,
    Relu,
    Softmax,
    conv1d,
    fully_connected,
    global_avg_pool,
    maxpool1d,
    out_len,
    relu,
    softmax,
)

__all__ = [
    "Model",
    "Prediction",
    "prepare_input",
    "validate_model",
    "parameter_count",
    "random_reference_model",
    "apply_layer",
    "infer",
]


@dataclass(eq=False)
class Model:
    layers: list
    input_len: int = 3840
    class_count: int = 7

    @property
    def arch_id(self) -> str:
        """Short structural signature, e.g. 'c16k16s16-r-...-f7-sm'."""
        parts = []
        for layer in self.layers:
            if isinstance(layer, Conv1d) or type(layer).__name__ == "QConv1d":
                parts.append(f"c{layer.out_channels}k{layer.kernel}s{layer.stride}")
            elif isinstance(layer, Relu):
                parts.append("r")
            elif isinstance(layer, MaxPool):
                parts.append(f"p{layer.kernel}s{layer.stride}")
            elif isinstance(layer, Gap):
                parts.append("g")
            elif isinstance(layer, Fc) or type(layer).__name__ == "QFc":
                parts.append(f"f{layer.out_features}")
            elif isinstance(layer, Softmax):
                parts.append("sm")
            else:
                parts.append("?")
        return "-".join(parts)


@dataclass(eq=False)
class Prediction:
    probabilities: np.ndarray  # (class_count,)
    label: int  # argmax, lowest index on ties
    inference_duration: float  # seconds


def prepare_input(samples: np.ndarray) -> np.ndarray:
    """Flatten a (window_len, channel_count) int16 window to a 1xN float32 tensor.

    Element (t, c) lands at flat index channel_count*t + c; int16 values are
    exact in float32.
    """
    if samples.ndim != 2:
        raise ShapeMismatch(f"window must be 2-D, got shape {samples.shape}")
    return np.ascontiguousarray(samples, dtype=np.float32).reshape(1, -1)


def shape_chain(model: Model) -> list[tuple[int, int]]:
    """(channels, length) after each layer, starting from the input tensor."""
    c, length = 1, model.input_len
    chain = [(c, length)]
    for layer in model.layers:
        # attribute checks rather than isinstance so int8 layer variants
        # (QConv1d/QFc) share the same shape algebra
        if hasattr(layer, "in_channels"):
            if c != layer.in_channels:
                raise ModelInvalid(f"conv input channels {c} != {layer.in_channels}")
            if length < layer.kernel:
                raise ModelInvalid(f"conv kernel {layer.kernel} exceeds length {length}")
            c, length = layer.out_channels, out_len(length, layer.kernel, layer.stride)
        elif isinstance(layer, MaxPool):
            if length < layer.kernel:
                raise ModelInvalid(f"pool kernel {layer.kernel} exceeds length {length}")
            length = out_len(length, layer.kernel, layer.stride)
        elif isinstance(layer, Gap):
            length = 1
        elif hasattr(layer, "in_features"):
            if length != 1 or c != layer.in_features:
                raise ModelInvalid(
                    f"fc expects {layer.in_features}x1 input, got {c}x{length}"
                )
            c, length = layer.out_features, 1
        elif isinstance(layer, (Relu, Softmax)):
            pass
        else:
            raise ModelInvalid(f"unknown layer type {type(layer).__name__}")
        chain.append((c, length))
    return chain


def validate_model(model: Model) -> None:
    if not model.layers:
        raise ModelInvalid("model has no layers")
    chain = shape_chain(model)
    c, length = chain[-1]
    if (c, length) != (model.class_count, 1):
        raise ModelInvalid(f"model ends with {c}x{length}, expected {model.class_count}x1")
    for layer in model.layers:
        if isinstance(layer, (Conv1d, Fc)):
            if not (np.isfinite(layer.weights).all() and np.isfinite(layer.bias).all()):
                raise ModelInvalid("non-finite parameters")


def parameter_count(model: Model) -> int:
    total = 0
    for layer in model.layers:
        if hasattr(layer, "weights"):
            total += int(np.prod(layer.weights.shape)) + int(np.prod(layer.bias.shape))
    return total


def random_reference_model(seed: int = 0) -> Model:
    """The reference architecture with random weights; for tests and benches."""
    rng = np.random.default_rng(seed)

    def conv(c_in, c_out, k, s):
        std = np.sqrt(2.0 / (c_in * k))
        w = rng.normal(0.0, std, (c_out, c_in, k)).astype(np.float32)
        b = rng.normal(0.0, 0.1, c_out).astype(np.float32)
        return Conv1d(c_in, c_out, k, s, w, b)

    fc_w = rng.normal(0.0, np.sqrt(1.0 / 32), (7, 32)).astype(np.float32)
    fc_b = rng.normal(0.0, 0.1, 7).astype(np.float32)
    layers = [
        conv(1, 16, 16, 16),
        Relu(),
        conv(16, 16, 3, 1),
        Relu(),
        conv(16, 32, 3, 1),
        Relu(),
        MaxPool(2, 2),
        Gap(),
        Fc(32, 7, fc_w, fc_b),
        Softmax(),
    ]
    return Model(layers)


def apply_layer(layer, x: np.ndarray) -> np.ndarray:
    if isinstance(layer, Conv1d):
        return conv1d(x, layer)
    if isinstance(layer, Relu):
        return relu(x)
    if isinstance(layer, MaxPool):
        return maxpool1d(x, layer)
    if isinstance(layer, Gap):
        return global_avg_pool(x)
    if isinstance(layer, Fc):
        return fully_connected(x, layer)
    if isinstance(layer, Softmax):
        return softmax(x)
    raise ModelInvalid(f"cannot apply layer {type(layer).__name__}")


def infer(model: Model, samples: np.ndarray) -> Prediction:
    """Run the float path on a (window_len, channel_count) sample matrix."""
    t0 = time.perf_counter()
    x = prepare_input(samples)
    if x.shape[1] != model.input_len:
        raise ShapeMismatch(f"model expects {model.input_len} inputs, window gives {x.shape[1]}")
    for layer in model.layers:
        x = apply_layer(layer, x)
    probs = np.asarray(x).reshape(-1)
    label = int(np.argmax(probs))
    return Prediction(probs, label, time.perf_counter() - t0)
