"""Post-training int8 quantization and the integer inference path.

Weights are per-tensor symmetric (scale = max|w|/127, zero point 0);
activations are per-tensor affine with ranges observed on calibration windows
and forced to include zero. Conv/fc outputs are calibrated after the following
ReLU when one is present, so negative pre-activations saturate at the zero
point and the int-domain ReLU max(q, zp) is exact. Biases are stored as int32
at scale in_scale * w_scale; accumulators are 32-bit; the head stays float.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyCalibration, ModelInvalid, ShapeMismatch
from .layers import Conv1d, Fc, Gap, MaxPool, Relu, Softmax, maxpool1d, out_len, softmax
from .model import Model, Prediction, apply_layer, prepare_input, validate_model

__all__ = ["QConv1d", "QFc", "quantize_model", "infer_quant", "round_half_away"]


@dataclass(eq=False)
class QConv1d:
    in_channels: int
    out_channels: int
    kernel: int
    stride: int
    weights: np.ndarray  # int8 (out, in, kernel)
    bias: np.ndarray  # int32 (out,), at scale in_scale * w_scale
    w_scale: float
    in_scale: float
    in_zp: int
    out_scale: float
    out_zp: int


@dataclass(eq=False)
class QFc:
    in_features: int
    out_features: int
    weights: np.ndarray  # int8 (out, in)
    bias: np.ndarray  # int32 (out,)
    w_scale: float
    in_scale: float
    in_zp: int
    out_scale: float
    out_zp: int


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _weight_scale(w: np.ndarray) -> np.float32:
    peak = float(np.max(np.abs(w))) if w.size else 0.0
    if peak == 0.0:
        return np.float32(1.0)  # degenerate all-zero tensor
    return np.float32(peak / 127.0)


def _quantize_weights(w: np.ndarray, scale: np.float32) -> np.ndarray:
    q = round_half_away(w.astype(np.float64) / float(scale))
    return np.clip(q, -128, 127).astype(np.int8)


def _affine_params(lo: float, hi: float) -> tuple[np.float32, int]:
    lo, hi = min(lo, 0.0), max(hi, 0.0)  # representable range must include zero
    if hi == lo:
        return np.float32(1.0), 0
    scale = np.float32((hi - lo) / 255.0)
    zp = int(np.clip(round_half_away(np.float64(-128.0 - lo / float(scale))), -128, 127))
    return scale, zp


def quantize_model(model: Model, calibration) -> Model:
    """Quantize a float model using activation ranges from calibration windows."""
    windows = [w.samples if hasattr(w, "samples") else w for w in calibration]
    if not windows:
        raise EmptyCalibration("need at least one calibration window")
    validate_model(model)

    n = len(model.layers)
    lows = np.full(n + 1, np.inf)
    highs = np.full(n + 1, -np.inf)
    for samples in windows:
        x = prepare_input(samples)
        lows[0] = min(lows[0], float(x.min()))
        highs[0] = max(highs[0], float(x.max()))
        for i, layer in enumerate(model.layers):
            x = apply_layer(layer, x)
            arr = np.asarray(x)
            lows[i + 1] = min(lows[i + 1], float(arr.min()))
            highs[i + 1] = max(highs[i + 1], float(arr.max()))

    def activation(pos: int) -> tuple[np.float32, int]:
        return _affine_params(float(lows[pos]), float(highs[pos]))

    qlayers = []
    # relu/maxpool/gap reuse their input's quantization, so each conv/fc must
    # take its in-params from the running tensor, not a fresh calibration cut
    in_scale, in_zp = activation(0)
    for i, layer in enumerate(model.layers):
        if isinstance(layer, (Conv1d, Fc)):
            followed_by_relu = i + 1 < n and isinstance(model.layers[i + 1], Relu)
            out_scale, out_zp = activation(i + 2 if followed_by_relu else i + 1)
            w_scale = _weight_scale(layer.weights)
            qw = _quantize_weights(layer.weights, w_scale)
            bias_scale = float(in_scale) * float(w_scale)
            qb = np.clip(
                round_half_away(layer.bias.astype(np.float64) / bias_scale),
                np.iinfo(np.int32).min,
                np.iinfo(np.int32).max,
            ).astype(np.int32)
            if isinstance(layer, Conv1d):
                qlayers.append(
                    QConv1d(
                        layer.in_channels,
                        layer.out_channels,
                        layer.kernel,
                        layer.stride,
                        qw,
                        qb,
                        float(w_scale),
                        float(in_scale),
                        in_zp,
                        float(out_scale),
                        out_zp,
                    )
                )
            else:
                qlayers.append(
                    QFc(
                        layer.in_features,
                        layer.out_features,
                        qw,
                        qb,
                        float(w_scale),
                        float(in_scale),
                        in_zp,
                        float(out_scale),
                        out_zp,
                    )
                )
            in_scale, in_zp = out_scale, out_zp
        elif isinstance(layer, Relu):
            qlayers.append(Relu())
        elif isinstance(layer, MaxPool):
            qlayers.append(MaxPool(layer.kernel, layer.stride))
        elif isinstance(layer, Gap):
            qlayers.append(Gap())
        elif isinstance(layer, Softmax):
            qlayers.append(Softmax())
        else:
            raise ModelInvalid(f"cannot quantize layer {type(layer).__name__}")
    return Model(qlayers, model.input_len, model.class_count)


def _qconv(q: np.ndarray, layer: QConv1d) -> np.ndarray:
    c_in, length = q.shape
    if c_in != layer.in_channels:
        raise ShapeMismatch(f"conv expects {layer.in_channels} channels, got {c_in}")
    n_out = out_len(length, layer.kernel, layer.stride)
    xz = q.astype(np.int32) - np.int32(layer.in_zp)
    w = layer.weights.astype(np.int32)
    acc = np.zeros((layer.out_channels, n_out), dtype=np.int32)
    stride = layer.stride
    for ci in range(layer.in_channels):
        row = xz[ci]
        for t in range(layer.kernel):
            acc += w[:, ci, t][:, None] * row[t : t + stride * n_out : stride][None, :]
    acc += layer.bias[:, None]
    return acc


def _requant(acc: np.ndarray, multiplier: float, zp: int) -> np.ndarray:
    q = round_half_away(acc.astype(np.float64) * multiplier) + zp
    return np.clip(q, -128, 127).astype(np.int32)


def infer_quant(model: Model, samples: np.ndarray) -> Prediction:
    """Run the int8 path on a (window_len, channel_count) sample matrix."""
    t0 = time.perf_counter()
    if not model.layers or not isinstance(model.layers[0], QConv1d):
        raise ModelInvalid("int8 inference needs a quantized model")
    x = prepare_input(samples)
    if x.shape[1] != model.input_len:
        raise ShapeMismatch(f"model expects {model.input_len} inputs, window gives {x.shape[1]}")

    first = model.layers[0]
    scale, zp = first.in_scale, first.in_zp
    q = np.clip(
        round_half_away(x.astype(np.float64) / scale) + zp, -128, 127
    ).astype(np.int32)

    logits: np.ndarray | None = None
    probs: np.ndarray | None = None
    for layer in model.layers:
        if isinstance(layer, QConv1d):
            if abs(layer.in_scale - scale) > 1e-9 or layer.in_zp != zp:
                raise ModelInvalid("layer input quantization does not match incoming tensor")
            acc = _qconv(q, layer)
            multiplier = layer.in_scale * layer.w_scale / layer.out_scale
            q = _requant(acc, multiplier, layer.out_zp)
            scale, zp = layer.out_scale, layer.out_zp
        elif isinstance(layer, Relu):
            q = np.maximum(q, zp)
        elif isinstance(layer, MaxPool):
            q = maxpool1d(q, layer)
        elif isinstance(layer, Gap):
            centered = (q - zp).sum(axis=1, dtype=np.int64) / q.shape[1]
            q = (zp + round_half_away(centered)).astype(np.int32)[:, None]
        elif isinstance(layer, QFc):
            if abs(layer.in_scale - scale) > 1e-9 or layer.in_zp != zp:
                raise ModelInvalid("layer input quantization does not match incoming tensor")
            xz = q.reshape(-1).astype(np.int32) - np.int32(layer.in_zp)
            if xz.shape[0] != layer.in_features:
                raise ShapeMismatch(f"fc expects {layer.in_features} features, got {xz.shape[0]}")
            acc = layer.weights.astype(np.int32) @ xz + layer.bias
            logits = acc.astype(np.float64) * (layer.in_scale * layer.w_scale)
        elif isinstance(layer, Softmax):
            if logits is None:
                raise ModelInvalid("softmax before the fully connected head")
            probs = softmax(logits)
        else:
            raise ModelInvalid(f"cannot apply layer {type(layer).__name__} on the int8 path")
    if probs is None:
        raise ModelInvalid("quantized model produced no probabilities")
    label = int(np.argmax(probs))
    return Prediction(probs, label, time.perf_counter() - t0)
