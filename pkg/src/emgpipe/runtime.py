"""Pipelined acquire -> transfer -> infer runtime with latency profiling.

Three tasks run concurrently: the bridge reader (owns socket, decoder,
assembler), the transfer task (bridge queue -> link offer), and the inference
consumer (link fetch -> model -> log). The run duration clock starts at the
first fetched window, so warm-up discard does not eat into the measured span;
shutdown drains the queue and the link so every assembled window is either
fetched or counted as dropped.
"""

from __future__ import annotations

import json
import math
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np

from .bridge import BridgeConfig, Window, start_session
from .errors import EmptyReport, LinkClosed, ModelInvalid
from .link import (
    SocketController,
    SocketPeripheral,
    create_inprocess_link,
    fetch_window,
    offer_window,
)
from .nn import infer, infer_quant, load_model
from .nn.quant import QConv1d

__all__ = [
    "PipelineConfig",
    "LogRow",
    "PredictionLog",
    "StageStats",
    "LatencyReport",
    "run_pipeline",
    "bench_report",
    "load_log",
]

LOG_HEADER = "first_seq,capture_ms,fetch_ms,infer_start_ms,infer_end_ms,label," + ",".join(
    f"p{i}" for i in range(7)
)


@dataclass(frozen=True)
class PipelineConfig:
    bridge: BridgeConfig
    model_path: str
    mode: str = "float"  # "float" | "int8"
    transport: str = "inproc"  # "inproc" | "socket"
    duration_s: float | None = 60.0  # None: run until the stream ends
    log_path: str | None = None
    report_path: str | None = None
    fetch_timeout: float = 2.0


@dataclass
class LogRow:
    first_seq: int
    capture_ms: float  # stream-relative; NaN if the transport dropped it
    fetch_ms: float
    infer_start_ms: float
    infer_end_ms: float
    label: int
    probabilities: tuple[float, ...]


class PredictionLog:
    def __init__(self, rows: list[LogRow] | None = None):
        self.rows: list[LogRow] = rows if rows is not None else []

    def __len__(self) -> int:
        return len(self.rows)

    def save(self, path) -> None:
        def fmt(v: float) -> str:
            return "" if math.isnan(v) else f"{v:.3f}"

        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(LOG_HEADER + "\n")
            for r in self.rows:
                probs = ",".join(f"{p:.8g}" for p in r.probabilities)
                f.write(
                    f"{r.first_seq},{fmt(r.capture_ms)},{fmt(r.fetch_ms)},"
                    f"{fmt(r.infer_start_ms)},{fmt(r.infer_end_ms)},{r.label},{probs}\n"
                )


def load_log(path) -> PredictionLog:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != LOG_HEADER:
            raise ValueError(f"unexpected log header in {path}")
        for line in f:
            parts = line.rstrip("\n").split(",")
            seq, times, label, probs = parts[0], parts[1:5], parts[5], parts[6:]
            nums = [float(v) if v else math.nan for v in times]
            rows.append(
                LogRow(int(seq), *nums, int(label), tuple(float(p) for p in probs))
            )
    return PredictionLog(rows)


@dataclass
class StageStats:
    mean_ms: float
    p95_ms: float
    count: int

    @classmethod
    def from_durations(cls, durations_s) -> "StageStats":
        xs = np.asarray([d for d in durations_s if np.isfinite(d)], dtype=np.float64)
        if xs.size == 0:
            return cls(math.nan, math.nan, 0)
        return cls(float(xs.mean() * 1e3), float(np.percentile(xs, 95) * 1e3), int(xs.size))


@dataclass
class LatencyReport:
    window_count: int
    drop_count: int
    wall_duration_s: float
    throughput_wps: float
    fill: StageStats
    transfer: StageStats
    inference: StageStats
    end_to_end: StageStats

    def to_dict(self) -> dict:
        stages = {
            name: vars(getattr(self, name))
            for name in ("fill", "transfer", "inference", "end_to_end")
        }
        return {
            "window_count": self.window_count,
            "drop_count": self.drop_count,
            "wall_duration_s": self.wall_duration_s,
            "throughput_wps": self.throughput_wps,
            "stages": stages,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def from_dict(cls, d: dict) -> "LatencyReport":
        stages = {name: StageStats(**d["stages"][name]) for name in d["stages"]}
        return cls(
            window_count=d["window_count"],
            drop_count=d["drop_count"],
            wall_duration_s=d["wall_duration_s"],
            throughput_wps=d["throughput_wps"],
            **stages,
        )


def load_report(path) -> LatencyReport:
    with open(path, "r", encoding="utf-8") as f:
        return LatencyReport.from_dict(json.load(f))


def bench_report(report: LatencyReport) -> str:
    """Human-readable per-stage summary; the JSON form is report.to_dict()."""
    if report.window_count < 1:
        raise EmptyReport("report covers no windows")
    lines = [
        f"windows {report.window_count}  drops {report.drop_count}  "
        f"wall {report.wall_duration_s:.2f} s  throughput {report.throughput_wps:.2f}/s"
    ]
    for name in ("fill", "transfer", "inference", "end_to_end"):
        s: StageStats = getattr(report, name)
        lines.append(f"{name:>10}: mean {s.mean_ms:8.3f} ms  p95 {s.p95_ms:8.3f} ms  n={s.count}")
    return "\n".join(lines)


def _transfer_loop(q: "queue.Queue[Window | None]", peripheral) -> None:
    try:
        while True:
            w = q.get()
            if w is None:
                return
            offer_window(peripheral, w)
    except Exception:
        pass  # link torn down mid-offer during shutdown
    finally:
        peripheral.close()


def run_pipeline(cfg: PipelineConfig):
    """Returns (PredictionLog, LatencyReport); writes them if paths are set."""
    bridge_cfg = cfg.bridge
    input_len = bridge_cfg.window_len * bridge_cfg.acquisition.channel_count
    model = load_model(cfg.model_path, input_len=input_len)
    quantized = isinstance(model.layers[0], QConv1d)
    if cfg.mode == "int8" and not quantized:
        raise ModelInvalid("int8 mode needs an int8 NEMW file")
    if cfg.mode == "float" and quantized:
        raise ModelInvalid("float mode cannot run an int8 NEMW file")
    run_infer = infer_quant if cfg.mode == "int8" else infer

    session = start_session(bridge_cfg)

    if cfg.transport == "socket":
        peripheral = SocketPeripheral()
        controller = SocketController(
            peripheral.endpoint, bridge_cfg.window_len, bridge_cfg.acquisition.channel_count
        )
    else:
        peripheral, controller = create_inprocess_link()

    q: "queue.Queue[Window | None]" = queue.Queue(maxsize=bridge_cfg.queue_capacity)
    stop = threading.Event()
    reader = threading.Thread(
        target=session.acquisition_loop, args=(q, stop), name="bridge-reader", daemon=True
    )
    transfer = threading.Thread(
        target=_transfer_loop, args=(q, peripheral), name="link-transfer", daemon=True
    )
    reader.start()
    transfer.start()

    log = PredictionLog()
    e2e: list[float] = []
    fills: list[float] = []
    infers: list[float] = []
    deadline: float | None = None
    t_first_fetch: float | None = None
    t_last = None
    try:
        while True:
            try:
                w = fetch_window(controller, cfg.fetch_timeout)
            except TimeoutError:
                stop.set()  # stream stalled or ended; drain and finish
                continue
            except LinkClosed:
                break  # orderly drain complete
            t_fetch = time.monotonic()
            if t_first_fetch is None:
                t_first_fetch = t_fetch
                if cfg.duration_s is not None:
                    deadline = t_fetch + cfg.duration_s
            origin = session.stream_origin
            if origin is None:  # cannot happen once a window arrived; be safe
                origin = t_fetch
            t0 = time.monotonic()
            pred = run_infer(model, w.samples)
            t_last = time.monotonic()
            capture_ms = (
                (w.capture_timestamp - origin) * 1e3
                if np.isfinite(w.capture_timestamp)
                else math.nan
            )
            log.rows.append(
                LogRow(
                    first_seq=w.first_seq,
                    capture_ms=capture_ms,
                    fetch_ms=(t_fetch - origin) * 1e3,
                    infer_start_ms=(t0 - origin) * 1e3,
                    infer_end_ms=(t_last - origin) * 1e3,
                    label=pred.label,
                    probabilities=tuple(float(p) for p in pred.probabilities),
                )
            )
            infers.append(pred.inference_duration)
            fills.append(w.fill_duration)
            if np.isfinite(w.capture_timestamp):
                e2e.append(t_last - w.capture_timestamp)
            if deadline is not None and t_last >= deadline:
                stop.set()
                deadline = None  # keep consuming until the link drains
    finally:
        stop.set()
        session.send_stop()
        reader.join(timeout=5.0)
        transfer.join(timeout=5.0)
        try:
            controller.close()
        except Exception:
            pass
        session.close()

    wall = (t_last - t_first_fetch) if (t_last is not None and t_first_fetch is not None) else 0.0
    report = LatencyReport(
        window_count=len(log.rows),
        drop_count=session.dropped,
        wall_duration_s=wall,
        throughput_wps=len(log.rows) / wall if wall > 0 else math.nan,
        fill=StageStats.from_durations(fills),
        transfer=StageStats.from_durations(peripheral.stats.durations),
        inference=StageStats.from_durations(infers),
        end_to_end=StageStats.from_durations(e2e),
    )
    if cfg.log_path:
        log.save(cfg.log_path)
    if cfg.report_path:
        report.save(cfg.report_path)
    return log, report
