"""Export trained weights to the deployment container.

Batch norm folds into the preceding conv and the 1/256 input scaling folds
into conv1, both in float64, so the written file is exactly the deployed
layer stack: conv/relu x3, maxpool, gap, fc, softmax.
"""

from __future__ import annotations

import numpy as np
import torch

from emgpipe.errors import ShapeMismatch
from emgpipe.nn import Conv1d, Fc, Gap, MaxPool, Model, Relu, Softmax, save_model
from emgpipe.nn.model import validate_model

from .train import INPUT_SCALE, RefNet, TrainResult

_CONV_SHAPES = {"conv1": (16, 1, 16), "conv2": (16, 16, 3), "conv3": (32, 16, 3)}
_FC_SHAPE = (7, 32)


def _fold_bn(conv: torch.nn.Conv1d, bn: torch.nn.BatchNorm1d):
    w = conv.weight.detach().numpy().astype(np.float64)
    b = conv.bias.detach().numpy().astype(np.float64)
    gamma = bn.weight.detach().numpy().astype(np.float64)
    beta = bn.bias.detach().numpy().astype(np.float64)
    mean = bn.running_mean.detach().numpy().astype(np.float64)
    var = bn.running_var.detach().numpy().astype(np.float64)
    s = gamma / np.sqrt(var + bn.eps)
    return w * s[:, None, None], (b - mean) * s + beta


def export_weights(source: TrainResult | RefNet, path) -> Model:
    """Write the float32 NEMW file; returns the Model that was saved."""
    net = source.net if isinstance(source, TrainResult) else source
    for name, want in _CONV_SHAPES.items():
        got = tuple(getattr(net, name).weight.shape)
        if got != want:
            raise ShapeMismatch(f"{name} weights {got}, reference needs {want}")
    if tuple(net.fc.weight.shape) != _FC_SHAPE:
        raise ShapeMismatch(f"fc weights {tuple(net.fc.weight.shape)}, reference needs {_FC_SHAPE}")

    w1, b1 = _fold_bn(net.conv1, net.bn1)
    w1 *= INPUT_SCALE  # exact: power-of-two scale shifts the exponent
    w2, b2 = _fold_bn(net.conv2, net.bn2)
    w3, b3 = _fold_bn(net.conv3, net.bn3)
    wf = net.fc.weight.detach().numpy().astype(np.float64)
    bf = net.fc.bias.detach().numpy().astype(np.float64)

    def f32(a):
        return a.astype(np.float32)

    model = Model(
        layers=[
            Conv1d(1, 16, 16, 16, f32(w1), f32(b1)),
            Relu(),
            Conv1d(16, 16, 3, 1, f32(w2), f32(b2)),
            Relu(),
            Conv1d(16, 32, 3, 1, f32(w3), f32(b3)),
            Relu(),
            MaxPool(2, 2),
            Gap(),
            Fc(32, 7, f32(wf), f32(bf)),
            Softmax(),
        ],
        input_len=3840,
        class_count=7,
    )
    validate_model(model)
    save_model(model, path)
    return model
