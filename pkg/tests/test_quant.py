"""Quantizer formulas, bounds, and float/int8 path agreement."""

import numpy as np
import pytest

from emgpipe.emulator import synth_block
from emgpipe.errors import EmptyCalibration, ModelInvalid
from emgpipe.nn import infer, infer_quant, quantize_model, random_reference_model
from emgpipe.nn.layers import Conv1d, Fc
from emgpipe.nn.quant import (
    QConv1d,
    QFc,
    _affine_params,
    _quantize_weights,
    _weight_scale,
    round_half_away,
)


@pytest.fixture(scope="module")
def windows():
    labels = np.random.default_rng(8).integers(0, 7, size=400 * 20)
    frames = synth_block(labels, t0=0, seed=12)
    return frames.reshape(400, 20, 192)


@pytest.fixture(scope="module")
def model():
    return random_reference_model(3)


@pytest.fixture(scope="module")
def qmodel(model, windows):
    return quantize_model(model, list(windows[:100]))


def test_weight_scale_formula():
    w = np.array([0.5, -1.27, 0.3], dtype=np.float32)
    assert _weight_scale(w) == np.float32(1.27 / 127)  # = 0.01
    assert float(_weight_scale(w)) == pytest.approx(0.01)


def test_known_quantized_value():
    scale = _weight_scale(np.array([1.27], dtype=np.float32))
    q = _quantize_weights(np.array([0.635], dtype=np.float32), scale)
    assert q.dtype == np.int8
    assert q[0] == 64  # 63.5 rounds half away from zero


def test_round_half_away_from_zero():
    x = np.array([0.5, -0.5, 1.5, -1.5, 2.4, -2.4, 0.0])
    assert np.array_equal(round_half_away(x), [1, -1, 2, -2, 2, -2, 0])


def test_zero_weights_fall_back_to_positive_scale():
    scale = _weight_scale(np.zeros(10, dtype=np.float32))
    assert float(scale) > 0
    assert np.all(_quantize_weights(np.zeros(10, dtype=np.float32), scale) == 0)


def test_saturating_cast():
    scale = np.float32(0.01)
    q = _quantize_weights(np.array([5.0, -5.0], dtype=np.float32), scale)
    assert q[0] == 127 and q[1] == -128


def test_affine_params_include_zero():
    scale, zp = _affine_params(10.0, 20.0)  # range must stretch to cover 0
    assert -128 <= zp <= 127
    lo_q = (0.0 - 20.0) / float(scale)  # check 0 maps inside [-128, 127]
    assert -128.5 <= lo_q + 127


def test_affine_degenerate_range():
    scale, zp = _affine_params(0.0, 0.0)
    assert float(scale) > 0


def test_quantize_requires_calibration(model):
    with pytest.raises(EmptyCalibration):
        quantize_model(model, [])


def test_dequantized_weights_within_half_scale(model, qmodel):
    pairs = [
        (a, b)
        for a, b in zip(model.layers, qmodel.layers)
        if isinstance(b, (QConv1d, QFc))
    ]
    assert len(pairs) == 4
    for orig, q in pairs:
        err = np.abs(orig.weights.astype(np.float64) - q.weights.astype(np.float64) * q.w_scale)
        assert err.max() <= q.w_scale / 2 + 1e-12


def test_quantized_layers_mirror_float_geometry(model, qmodel):
    for a, b in zip(model.layers, qmodel.layers):
        if isinstance(a, Conv1d):
            assert isinstance(b, QConv1d)
            assert (a.in_channels, a.out_channels, a.kernel, a.stride) == (
                b.in_channels, b.out_channels, b.kernel, b.stride,
            )
            assert b.bias.dtype == np.int32
        elif isinstance(a, Fc):
            assert isinstance(b, QFc)
            assert (a.in_features, a.out_features) == (b.in_features, b.out_features)


def test_quant_chain_scales_are_consistent(qmodel):
    qlayers = [l for l in qmodel.layers if isinstance(l, (QConv1d, QFc))]
    for producer, consumer in zip(qlayers, qlayers[1:]):
        assert consumer.in_scale == producer.out_scale
        assert consumer.in_zp == producer.out_zp


def test_bias_quantized_at_input_times_weight_scale(model, qmodel):
    conv0, qconv0 = model.layers[0], qmodel.layers[0]
    expect = round_half_away(conv0.bias.astype(np.float64) / (qconv0.in_scale * qconv0.w_scale))
    assert np.array_equal(qconv0.bias, expect.astype(np.int32))


def test_argmax_agreement(model, qmodel, windows):
    test_set = windows[100:400]
    agree = sum(
        infer(model, w).label == infer_quant(qmodel, w).label for w in test_set
    )
    assert agree / len(test_set) >= 0.95


def test_quant_probabilities_are_probability_vectors(qmodel, windows):
    p = infer_quant(qmodel, windows[0]).probabilities
    assert p.shape == (7,)
    assert abs(float(p.sum()) - 1.0) < 1e-5
    assert np.all(p >= 0)


def test_all_zero_window_same_argmax(windows):
    # logits tie in both paths; the shared lowest-index rule must resolve them
    zero = random_reference_model(0)
    for layer in zero.layers:
        if hasattr(layer, "weights"):
            layer.weights[:] = 0
            layer.bias[:] = 0
    qzero = quantize_model(zero, list(windows[:10]))  # exercises fallback scales
    w = np.zeros((20, 192), dtype=np.int16)
    f, q = infer(zero, w), infer_quant(qzero, w)
    assert f.label == q.label == 0
    assert np.allclose(f.probabilities, 1 / 7)
    assert np.allclose(q.probabilities, 1 / 7)


def test_infer_quant_is_deterministic(qmodel, windows):
    a = infer_quant(qmodel, windows[5]).probabilities
    b = infer_quant(qmodel, windows[5]).probabilities
    assert np.array_equal(a, b)


def test_infer_quant_rejects_float_model(model, windows):
    with pytest.raises(ModelInvalid):
        infer_quant(model, windows[0])


def test_infer_rejects_quant_model(qmodel, windows):
    with pytest.raises(ModelInvalid):
        infer(qmodel, windows[0])
