"""Layer ops vs independently written naive oracles.

Two oracles per arithmetic layer: a scalar float32 oracle replaying the
documented accumulation order (must match bit-exactly) and a float64 oracle
with arbitrary order (must match to 1e-5 relative).
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emgpipe.errors import ShapeMismatch
from emgpipe.nn.layers import (
    Conv1d,
    Fc,
    MaxPool,
    conv1d,
    fully_connected,
    global_avg_pool,
    maxpool1d,
    out_len,
    relu,
    softmax,
)

N_INSTANCES = 1000


def conv_oracle_exact(layer, x):
    n = out_len(x.shape[1], layer.kernel, layer.stride)
    acc = np.empty((layer.out_channels, n), dtype=np.float32)
    for co in range(layer.out_channels):
        for j in range(n):
            s = np.float32(layer.bias[co])
            for ci in range(layer.in_channels):
                for t in range(layer.kernel):
                    s = np.float32(s + np.float32(layer.weights[co, ci, t] * x[ci, j * layer.stride + t]))
            acc[co, j] = s
    return acc


def conv_oracle_f64(layer, x):
    n = out_len(x.shape[1], layer.kernel, layer.stride)
    w = layer.weights.astype(np.float64)
    xf = x.astype(np.float64)
    acc = np.zeros((layer.out_channels, n), dtype=np.float64)
    for j in range(n):
        patch = xf[:, j * layer.stride : j * layer.stride + layer.kernel]
        acc[:, j] = (w * patch[None, :, :]).sum(axis=(1, 2))
    return acc + layer.bias.astype(np.float64)[:, None]


def fc_oracle_exact(layer, x):
    flat = x.reshape(-1)
    y = np.empty(layer.out_features, dtype=np.float32)
    for o in range(layer.out_features):
        s = np.float32(layer.bias[o])
        for i in range(layer.in_features):
            s = np.float32(s + np.float32(layer.weights[o, i] * flat[i]))
        y[o] = s
    return y


def maxpool_oracle(layer, x):
    n = out_len(x.shape[1], layer.kernel, layer.stride)
    out = np.empty((x.shape[0], n), dtype=x.dtype)
    for c in range(x.shape[0]):
        for j in range(n):
            out[c, j] = max(x[c, j * layer.stride : j * layer.stride + layer.kernel])
    return out


def _random_conv(rng):
    cin, cout = int(rng.integers(1, 5)), int(rng.integers(1, 6))
    k, s = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    length = int(rng.integers(k, 30))
    layer = Conv1d(
        cin, cout, k, s,
        rng.normal(size=(cout, cin, k)).astype(np.float32),
        rng.normal(size=cout).astype(np.float32),
    )
    x = rng.normal(scale=3.0, size=(cin, length)).astype(np.float32)
    return layer, x


def test_conv_matches_exact_order_oracle():
    rng = np.random.default_rng(101)
    for _ in range(N_INSTANCES):
        layer, x = _random_conv(rng)
        got = conv1d(x, layer)
        assert np.array_equal(got, conv_oracle_exact(layer, x))


def test_conv_matches_float64_oracle_within_tolerance():
    rng = np.random.default_rng(102)
    for _ in range(N_INSTANCES):
        layer, x = _random_conv(rng)
        got = conv1d(x, layer).astype(np.float64)
        want = conv_oracle_f64(layer, x)
        assert np.allclose(got, want, rtol=1e-5, atol=1e-5)


def test_fc_matches_exact_order_oracle():
    rng = np.random.default_rng(103)
    for _ in range(N_INSTANCES):
        n_in, n_out = int(rng.integers(1, 40)), int(rng.integers(1, 10))
        layer = Fc(
            n_in, n_out,
            rng.normal(size=(n_out, n_in)).astype(np.float32),
            rng.normal(size=n_out).astype(np.float32),
        )
        x = rng.normal(size=(n_in, 1)).astype(np.float32)
        got = fully_connected(x, layer)
        assert np.array_equal(got, fc_oracle_exact(layer, x))


def test_maxpool_matches_oracle():
    rng = np.random.default_rng(104)
    for _ in range(N_INSTANCES):
        k, s = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        c = int(rng.integers(1, 6))
        length = int(rng.integers(k, 40))
        layer = MaxPool(k, s)
        x = rng.normal(size=(c, length)).astype(np.float32)
        assert np.array_equal(maxpool1d(x, layer), maxpool_oracle(layer, x))


def test_gap_matches_float64_mean():
    rng = np.random.default_rng(105)
    for _ in range(N_INSTANCES):
        c = int(rng.integers(1, 8))
        length = int(rng.integers(1, 200))
        x = rng.normal(scale=5.0, size=(c, length)).astype(np.float32)
        got = global_avg_pool(x)
        want = x.astype(np.float64).sum(axis=1, keepdims=True) / length
        assert got.shape == (c, 1)
        assert np.allclose(got.astype(np.float64), want, rtol=1e-5, atol=1e-6)


def test_relu_matches_oracle():
    rng = np.random.default_rng(106)
    for _ in range(N_INSTANCES):
        x = rng.normal(size=(3, int(rng.integers(1, 30)))).astype(np.float32)
        got = relu(x)
        assert np.array_equal(got, np.where(x > 0, x, np.float32(0.0)))
        assert got.dtype == np.float32


def test_softmax_matches_oracle_and_is_probability_vector():
    rng = np.random.default_rng(107)
    for _ in range(N_INSTANCES):
        z = rng.normal(scale=10.0, size=int(rng.integers(2, 12))).astype(np.float32)
        p = softmax(z)
        want = np.exp(z.astype(np.float64)) / np.exp(z.astype(np.float64)).sum()
        assert np.allclose(p, want, rtol=1e-9, atol=1e-12)
        assert abs(p.sum() - 1.0) < 1e-9
        assert np.all(p >= 0)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=10), st.floats(-100, 100))
def test_softmax_argmax_shift_invariant(logits, shift):
    # shift in float64: float32-spaced logits stay distinct, so the shifted
    # vector is the same ranking (a float32 add could collapse near-ties)
    z = np.asarray(logits, dtype=np.float32)
    shifted = z.astype(np.float64) + shift
    assert np.argmax(softmax(z)) == np.argmax(z)
    assert np.allclose(softmax(z), softmax(shifted), rtol=1e-12, atol=1e-15)


def test_softmax_handles_large_logits():
    p = softmax(np.array([1000.0, 1001.0, 999.0], dtype=np.float32))
    assert np.isfinite(p).all() and abs(p.sum() - 1.0) < 1e-9


@given(
    length=st.integers(1, 10_000),
    kernel=st.integers(1, 64),
    stride=st.integers(1, 64),
)
def test_out_len_formula(length, kernel, stride):
    if kernel > length:
        return
    n = out_len(length, kernel, stride)
    assert n == (length - kernel) // stride + 1
    assert (n - 1) * stride + kernel <= length  # last tap in bounds
    assert n * stride + kernel > length or n * stride > length - kernel


def test_conv_shape_errors():
    layer = Conv1d(2, 3, 4, 1, np.zeros((3, 2, 4), np.float32), np.zeros(3, np.float32))
    with pytest.raises(ShapeMismatch):
        conv1d(np.zeros((3, 10), np.float32), layer)  # wrong channel count
    with pytest.raises(ShapeMismatch):
        conv1d(np.zeros((2, 3), np.float32), layer)  # shorter than kernel


def test_fc_shape_error():
    layer = Fc(4, 2, np.zeros((2, 4), np.float32), np.zeros(2, np.float32))
    with pytest.raises(ShapeMismatch):
        fully_connected(np.zeros((5, 1), np.float32), layer)
