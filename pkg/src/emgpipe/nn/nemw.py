"""NEMW weight container.

Little-endian layout: magic "NEMW" | version u16 | dtype u8 (0=f32, 1=i8) |
layer_count u8 | layer records | crc8_maxim over all preceding bytes.

Layer record: type u8 (1 conv1d, 2 relu, 3 maxpool, 4 gap, 5 fc, 6 softmax).
conv1d: in u16, out u16, kernel u16, stride u16,
        [i8 only: w_scale f32, in_scale f32, in_zp i8, out_scale f32, out_zp i8],
        weights (out*in*kernel x dtype), bias (out x f32 | out x i32);
maxpool: kernel u16, stride u16; fc: in u16, out u16 then params as conv1d;
relu/gap/softmax carry no body.
"""

from __future__ import annotations

import struct

import numpy as np

from ..crc8 import crc8_maxim
from ..errors import BadMagic, ChecksumMismatch, ModelInvalid, TruncatedFile, UnsupportedVersion
from .layers import Conv1d, Fc, Gap, MaxPool, Relu, Softmax
from .model import Model, validate_model
from .quant import QConv1d, QFc

__all__ = ["save_model", "load_model", "MAGIC", "VERSION", "DTYPE_F32", "DTYPE_I8"]

MAGIC = b"NEMW"
VERSION = 1
DTYPE_F32 = 0
DTYPE_I8 = 1

_T_CONV, _T_RELU, _T_MAXPOOL, _T_GAP, _T_FC, _T_SOFTMAX = 1, 2, 3, 4, 5, 6

_QPARAMS = struct.Struct("<ffbfb")  # w_scale, in_scale, in_zp, out_scale, out_zp


def _model_dtype(model: Model) -> int:
    has_q = any(isinstance(l, (QConv1d, QFc)) for l in model.layers)
    has_f = any(isinstance(l, (Conv1d, Fc)) for l in model.layers)
    if has_q and has_f:
        raise ModelInvalid("model mixes float and int8 parameter layers")
    return DTYPE_I8 if has_q else DTYPE_F32


def save_model(model: Model, path) -> None:
    dtype = _model_dtype(model)
    if len(model.layers) > 255:
        raise ModelInvalid("too many layers for the container")
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<HBB", VERSION, dtype, len(model.layers))
    for layer in model.layers:
        if isinstance(layer, (Conv1d, QConv1d)):
            buf.append(_T_CONV)
            buf += struct.pack(
                "<HHHH", layer.in_channels, layer.out_channels, layer.kernel, layer.stride
            )
            _pack_params(buf, layer, dtype)
        elif isinstance(layer, Relu):
            buf.append(_T_RELU)
        elif isinstance(layer, MaxPool):
            buf.append(_T_MAXPOOL)
            buf += struct.pack("<HH", layer.kernel, layer.stride)
        elif isinstance(layer, Gap):
            buf.append(_T_GAP)
        elif isinstance(layer, (Fc, QFc)):
            buf.append(_T_FC)
            buf += struct.pack("<HH", layer.in_features, layer.out_features)
            _pack_params(buf, layer, dtype)
        elif isinstance(layer, Softmax):
            buf.append(_T_SOFTMAX)
        else:
            raise ModelInvalid(f"cannot serialize layer {type(layer).__name__}")
    buf.append(crc8_maxim(bytes(buf)))
    with open(path, "wb") as f:
        f.write(buf)


def _pack_params(buf: bytearray, layer, dtype: int) -> None:
    if dtype == DTYPE_I8:
        buf += _QPARAMS.pack(
            np.float32(layer.w_scale),
            np.float32(layer.in_scale),
            layer.in_zp,
            np.float32(layer.out_scale),
            layer.out_zp,
        )
        buf += np.ascontiguousarray(layer.weights, dtype=np.int8).tobytes()
        buf += np.ascontiguousarray(layer.bias, dtype="<i4").tobytes()
    else:
        buf += np.ascontiguousarray(layer.weights, dtype="<f4").tobytes()
        buf += np.ascontiguousarray(layer.bias, dtype="<f4").tobytes()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(
                f"needed {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: struct.Struct):
        return fmt.unpack(self.take(fmt.size))


_HHHH = struct.Struct("<HHHH")
_HH = struct.Struct("<HH")


def load_model(path, input_len: int = 3840, class_count: int = 7) -> Model:
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise BadMagic(f"not a NEMW file: {path}")
    (version,) = struct.unpack("<H", r.take(2))
    if version != VERSION:
        raise UnsupportedVersion(f"container version {version}, supported {VERSION}")
    dtype, layer_count = r.take(1)[0], r.take(1)[0]
    if dtype not in (DTYPE_F32, DTYPE_I8):
        raise UnsupportedVersion(f"unknown dtype code {dtype}")
    layers = []
    for _ in range(layer_count):
        kind = r.take(1)[0]
        if kind == _T_CONV:
            c_in, c_out, kernel, stride = r.unpack(_HHHH)
            layers.append(_read_params(r, dtype, (c_out, c_in, kernel), c_out, stride))
        elif kind == _T_RELU:
            layers.append(Relu())
        elif kind == _T_MAXPOOL:
            kernel, stride = r.unpack(_HH)
            layers.append(MaxPool(kernel, stride))
        elif kind == _T_GAP:
            layers.append(Gap())
        elif kind == _T_FC:
            n_in, n_out = r.unpack(_HH)
            layers.append(_read_params(r, dtype, (n_out, n_in), n_out, None))
        elif kind == _T_SOFTMAX:
            layers.append(Softmax())
        else:
            raise TruncatedFile(f"unknown layer type {kind} at offset {r.pos - 1}")
    crc_pos = r.pos
    crc = r.take(1)[0]
    if crc != crc8_maxim(data[:crc_pos]):
        raise ChecksumMismatch("container checksum does not match")
    if r.pos != len(data):
        raise TruncatedFile(f"{len(data) - r.pos} unexpected trailing bytes")
    model = Model(layers, input_len=input_len, class_count=class_count)
    validate_model(model)
    return model


def _read_params(r: _Reader, dtype: int, w_shape: tuple, n_bias: int, conv_stride: int | None):
    n_w = int(np.prod(w_shape))
    if dtype == DTYPE_I8:
        w_scale, in_scale, in_zp, out_scale, out_zp = r.unpack(_QPARAMS)
        w = np.frombuffer(r.take(n_w), dtype=np.int8).reshape(w_shape).copy()
        b = np.frombuffer(r.take(4 * n_bias), dtype="<i4").astype(np.int32)
        if conv_stride is not None:
            c_out, c_in, kernel = w_shape
            return QConv1d(
                c_in, c_out, kernel, conv_stride, w, b,
                w_scale, in_scale, in_zp, out_scale, out_zp,
            )
        n_out, n_in = w_shape
        return QFc(n_in, n_out, w, b, w_scale, in_scale, in_zp, out_scale, out_zp)
    w = np.frombuffer(r.take(4 * n_w), dtype="<f4").reshape(w_shape).astype(np.float32)
    b = np.frombuffer(r.take(4 * n_bias), dtype="<f4").astype(np.float32)
    if conv_stride is not None:
        c_out, c_in, kernel = w_shape
        return Conv1d(c_in, c_out, kernel, conv_stride, w, b)
    n_out, n_in = w_shape
    return Fc(n_in, n_out, w, b)
