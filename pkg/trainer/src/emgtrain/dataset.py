"""Window extraction from recorded sessions and the stratified split.

Windows are cut exactly as the deployment bridge cuts them (length 20, hop 20
by default) so trained weights see the same geometry the pipeline feeds.
Windows that span a label change, or that touch unlabeled rows, are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from emgpipe.emulator import SessionRecording, load_recording

from .errors import EmptyDataset

WINDOW_LEN = 20
HOP = 20
CHANNELS = 192
N_CLASSES = 7


@dataclass
class Dataset:
    windows: np.ndarray  # (n, window_len, channels) int16
    labels: np.ndarray  # (n,) int64, 0..6
    val_fraction: float
    train_idx: np.ndarray = field(repr=False)
    val_idx: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def train_windows(self) -> np.ndarray:
        return self.windows[self.train_idx]

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[self.train_idx]

    @property
    def val_windows(self) -> np.ndarray:
        return self.windows[self.val_idx]

    @property
    def val_labels(self) -> np.ndarray:
        return self.labels[self.val_idx]


def cut_windows(
    rec: SessionRecording, window_len: int = WINDOW_LEN, hop: int = HOP
) -> tuple[np.ndarray, np.ndarray]:
    """Single-label windows from one recording; mixed or unlabeled are dropped."""
    n = len(rec)
    wins, labels = [], []
    for start in range(0, n - window_len + 1, hop):
        lab = rec.labels[start : start + window_len]
        if lab[0] < 0 or (lab != lab[0]).any():
            continue
        wins.append(rec.samples[start : start + window_len])
        labels.append(int(lab[0]))
    if not wins:
        return (
            np.empty((0, window_len, rec.channel_count), dtype=np.int16),
            np.empty(0, dtype=np.int64),
        )
    return np.stack(wins), np.asarray(labels, dtype=np.int64)


def _stratified_split(labels: np.ndarray, val_fraction: float, seed: int):
    rng = np.random.default_rng(seed)
    train, val = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n_val = int(round(val_fraction * len(idx)))
        val.extend(idx[:n_val])
        train.extend(idx[n_val:])
    return np.sort(np.asarray(train, dtype=np.int64)), np.sort(np.asarray(val, dtype=np.int64))


def build_dataset(paths, cfg) -> Dataset:
    """Cut and pool windows from recording CSVs, then split per cfg.

    cfg supplies seed and val_fraction (a TrainConfig works); recordings must
    share the deployment channel count.
    """
    all_wins, all_labels = [], []
    for path in paths:
        rec = load_recording(path, expect_channels=CHANNELS)
        wins, labels = cut_windows(rec)
        if len(labels):
            all_wins.append(wins)
            all_labels.append(labels)
    if not all_labels:
        raise EmptyDataset("no single-label windows in the given recordings")
    windows = np.concatenate(all_wins)
    labels = np.concatenate(all_labels)
    train_idx, val_idx = _stratified_split(labels, cfg.val_fraction, cfg.seed)
    return Dataset(windows, labels, cfg.val_fraction, train_idx, val_idx)
