"""Offline trainer for the streaming gesture classifier."""

from .dataset import Dataset, build_dataset, cut_windows
from .errors import DivergedTraining, EmgTrainError, EmptyDataset, MissingClass
from .export import export_weights
from .train import RefNet, TrainConfig, TrainResult, train_model

__all__ = [
    "Dataset",
    "build_dataset",
    "cut_windows",
    "TrainConfig",
    "TrainResult",
    "RefNet",
    "train_model",
    "export_weights",
    "EmgTrainError",
    "EmptyDataset",
    "MissingClass",
    "DivergedTraining",
]
