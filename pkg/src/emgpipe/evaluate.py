"""Cue-schedule evaluation of prediction logs.

Cue times are shifted later by a fixed response offset and each cue's class
holds until the next shifted cue. Windows captured before the first shifted
cue are excluded; no smoothing is applied, and transition windows count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyLog

__all__ = ["Cue", "CueSchedule", "EvalResult", "load_schedule", "evaluate"]

N_CLASSES = 7
DEFAULT_OFFSET_S = 1.365


@dataclass(frozen=True)
class Cue:
    time_s: float
    class_id: int


@dataclass(frozen=True)
class CueSchedule:
    cues: tuple[Cue, ...]
    offset_s: float = DEFAULT_OFFSET_S

    def validate(self) -> None:
        if not self.cues:
            raise ValueError("schedule has no cues")
        times = [c.time_s for c in self.cues]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("cue times must be strictly increasing")
        if any(not 0 <= c.class_id < N_CLASSES for c in self.cues):
            raise ValueError("cue classes must be in 0..6")


def load_schedule(path, offset_s: float = DEFAULT_OFFSET_S) -> CueSchedule:
    """Schedule JSON: a list of {"time_s": seconds, "class": 0..6}."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    cues = tuple(Cue(float(c["time_s"]), int(c["class"])) for c in raw)
    sched = CueSchedule(cues, offset_s)
    sched.validate()
    return sched


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # (7, 7) int, rows = ground truth, cols = prediction
    per_class_accuracy: np.ndarray  # (7,)
    window_count: int
    segments_evaluated: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "per_class_accuracy": self.per_class_accuracy.tolist(),
            "window_count": self.window_count,
            "segments_evaluated": self.segments_evaluated,
        }


def evaluate(log, schedule: CueSchedule) -> EvalResult:
    """Score log rows against the shifted schedule; pure in (log, schedule)."""
    schedule.validate()
    rows = getattr(log, "rows", log)
    if not rows:
        raise EmptyLog("prediction log has no rows")
    starts = np.array([c.time_s + schedule.offset_s for c in schedule.cues])
    classes = np.array([c.class_id for c in schedule.cues])

    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    segments_hit = set()
    for row in rows:
        t = row.capture_ms / 1000.0
        if not np.isfinite(t):
            continue  # capture time did not survive the transport
        idx = int(np.searchsorted(starts, t, side="right")) - 1
        if idx < 0:
            continue  # before the first shifted cue
        truth = int(classes[idx])
        confusion[truth, row.label] += 1
        segments_hit.add(idx)
    total = int(confusion.sum())
    if total == 0:
        raise EmptyLog("no log rows fall inside the shifted schedule")
    row_sums = confusion.sum(axis=1)
    with np.errstate(invalid="ignore"):
        per_class = np.where(row_sums > 0, np.diag(confusion) / np.maximum(row_sums, 1), 0.0)
    return EvalResult(
        accuracy=float(np.trace(confusion)) / total,
        confusion=confusion,
        per_class_accuracy=per_class.astype(np.float64),
        window_count=total,
        segments_evaluated=len(segments_hit),
    )
