"""Training loop for the reference architecture.

The torch module mirrors the deployed layer stack, with two train-time-only
additions that fold away at export: batch norm after each conv, and a 1/256
input scaling for conditioning (a power of two, so folding it into conv1 is
exact in float). Single-threaded torch keeps runs reproducible; it is also
faster at these layer sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .dataset import Dataset, N_CLASSES
from .errors import DivergedTraining, EmptyDataset, MissingClass

INPUT_SCALE = 1.0 / 256.0


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 25
    seed: int = 0
    batch_size: int = 32
    learning_rate: float = 1e-3
    val_fraction: float = 0.2

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")


class RefNet(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv1d(1, 16, kernel_size=16, stride=16)
        self.bn1 = nn.BatchNorm1d(16)
        self.conv2 = nn.Conv1d(16, 16, kernel_size=3)
        self.bn2 = nn.BatchNorm1d(16)
        self.conv3 = nn.Conv1d(16, 32, kernel_size=3)
        self.bn3 = nn.BatchNorm1d(32)
        self.pool = nn.MaxPool1d(2, stride=2)
        self.fc = nn.Linear(32, 7)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x * INPUT_SCALE
        x = F.relu(self.bn1(self.conv1(x)))
        x = F.relu(self.bn2(self.conv2(x)))
        x = F.relu(self.bn3(self.conv3(x)))
        x = self.pool(x)
        x = x.mean(dim=2)
        return self.fc(x)  # logits; deployment applies softmax


def _to_inputs(windows: np.ndarray) -> torch.Tensor:
    # (n, window_len, channels) int16 -> (n, 1, window_len*channels) float32;
    # row-major flattening is the deployment's time-major order
    n = windows.shape[0]
    return torch.from_numpy(windows.reshape(n, 1, -1).astype(np.float32))


@dataclass
class TrainResult:
    net: RefNet
    config: TrainConfig
    val_accuracy: float
    final_loss: float
    epochs_run: int

    def predict(self, windows: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Argmax labels for (n, window_len, channels) int16 windows."""
        self.net.eval()
        out = []
        with torch.no_grad():
            x = _to_inputs(windows)
            for i in range(0, len(x), batch_size):
                out.append(self.net(x[i : i + batch_size]).argmax(dim=1))
        return torch.cat(out).numpy().astype(np.int64)


def train_model(ds: Dataset, cfg: TrainConfig) -> TrainResult:
    cfg.validate()
    if len(ds) == 0:
        raise EmptyDataset("dataset has no windows")
    missing = sorted(set(range(N_CLASSES)) - set(np.unique(ds.labels).tolist()))
    if missing:
        raise MissingClass(f"dataset lacks classes {missing}")

    torch.manual_seed(cfg.seed)
    torch.set_num_threads(1)
    net = RefNet()
    x_train = _to_inputs(ds.train_windows)
    y_train = torch.from_numpy(ds.train_labels)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    shuffle = torch.Generator().manual_seed(cfg.seed)

    net.train()
    last_loss = math.nan
    for epoch in range(cfg.epochs):
        perm = torch.randperm(len(y_train), generator=shuffle)
        for i in range(0, len(perm), cfg.batch_size):
            batch = perm[i : i + cfg.batch_size]
            opt.zero_grad()
            loss = loss_fn(net(x_train[batch]), y_train[batch])
            if not torch.isfinite(loss):
                raise DivergedTraining(f"non-finite loss in epoch {epoch + 1}")
            loss.backward()
            opt.step()
            last_loss = loss.detach().item()

    result = TrainResult(net, cfg, math.nan, last_loss, cfg.epochs)
    if len(ds.val_idx):
        pred = result.predict(ds.val_windows)
        result.val_accuracy = float((pred == ds.val_labels).mean())
    return result
