"""Dependency-light 1D CNN inference: float32 path, int8 path, weight container."""

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
    relu,
    softmax,
)
from .model import (
    Model,
    Prediction,
    infer,
    prepare_input,
    parameter_count,
    random_reference_model,
    validate_model,
)
from .nemw import load_model, save_model
from .quant import QConv1d, QFc, infer_quant, quantize_model

__all__ = [
    "Conv1d",
    "Relu",
    "MaxPool",
    "Gap",
    "Fc",
    "Softmax",
    "QConv1d",
    "QFc",
    "Model",
    "Prediction",
    "conv1d",
    "relu",
    "maxpool1d",
    "global_avg_pool",
    "fully_connected",
    "softmax",
    "prepare_input",
    "parameter_count",
    "validate_model",
    "random_reference_model",
    "infer",
    "infer_quant",
    "quantize_model",
    "save_model",
    "load_model",
]
