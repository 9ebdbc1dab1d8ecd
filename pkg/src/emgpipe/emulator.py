"""Amplifier stand-in: deterministic synthetic EMG, session recordings, and a
single-client TCP stream server speaking the command/sample wire protocol."""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChecksumMismatch,
    EmgPipeError,
    InvalidClass,
    InvalidConfig,
    MalformedRecording,
)
from .protocol import (
    COMMAND_LEN,
    CONTROL_START,
    CONTROL_STOP,
    decode_command,
    encode_frame,
)

__all__ = [
    "CHANNELS",
    "N_CLASSES",
    "EmulatorConfig",
    "SessionRecording",
    "EmulatorServer",
    "synth_frame",
    "synth_block",
    "script_labels",
    "load_script",
    "load_recording",
    "save_recording",
    "write_recording",
    "block_rms_label",
]

CHANNELS = 192  # synthesis is defined for the default grid
BLOCK = 32  # active channels per gesture class (192 / 6)
N_CLASSES = 7


def _hadamard16() -> np.ndarray:
    h = np.array([[1.0]])
    while h.shape[0] < 16:
        h = np.block([[h, h], [h, -h]])
    return h


# Per-class +-1 spatial signatures across the active block, driven by a shared
# per-frame component (weight _RHO) on top of independent noise (1 - _RHO).
# Per-channel variance stays exactly active_sigma^2, but each class imprints a
# distinct cross-channel correlation pattern. Plain independent noise blocks
# would differ from each other only by a channel offset, which the classifier's
# global average pooling erases; the signatures give classes a fingerprint
# that survives pooling. Rows 1..6 of a 16-point Hadamard matrix (tiled twice)
# keep the signatures mutually orthogonal within each 16-channel group.
_RHO = 0.5
_PATTERNS = np.vstack([np.zeros(BLOCK), np.tile(_hadamard16()[1:7], 2)])


@dataclass(frozen=True)
class EmulatorConfig:
    listen: tuple[str, int] = ("127.0.0.1", 0)
    source: str = "synthetic"  # "synthetic" | "replay"
    seed: int = 0
    pacing: str = "realtime"  # "realtime" | "unpaced"
    baseline_sigma: float = 50.0
    active_sigma: float = 250.0

    def validate(self) -> None:
        if self.source not in ("synthetic", "replay"):
            raise InvalidConfig(f"unknown source {self.source!r}")
        if self.pacing not in ("realtime", "unpaced"):
            raise InvalidConfig(f"unknown pacing {self.pacing!r}")
        if not self.active_sigma > self.baseline_sigma > 0:
            raise InvalidConfig("need active_sigma > baseline_sigma > 0")


def _frame_rng(seed: int, t: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, t], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def synth_frame(
    class_id: int,
    t: int,
    seed: int,
    baseline_sigma: float = 50.0,
    active_sigma: float = 250.0,
) -> np.ndarray:
    """One 192-channel sample frame, deterministic given (seed, t, class_id)."""
    if not 0 <= class_id < N_CLASSES:
        raise InvalidClass(f"class_id {class_id} outside 0..6")
    rng = _frame_rng(seed, t)
    x = rng.standard_normal(CHANNELS) * baseline_sigma
    if class_id > 0:
        lo = BLOCK * (class_id - 1)
        z = rng.standard_normal()
        eps = rng.standard_normal(BLOCK)
        extra = np.sqrt(_RHO) * z * _PATTERNS[class_id] + np.sqrt(1.0 - _RHO) * eps
        x[lo : lo + BLOCK] += active_sigma * extra
    return np.clip(np.rint(x), -32768, 32767).astype(np.int16)


def synth_block(
    labels: np.ndarray,
    t0: int,
    seed: int,
    baseline_sigma: float = 50.0,
    active_sigma: float = 250.0,
) -> np.ndarray:
    """Frames t0..t0+len(labels) as an (n, 192) int16 matrix (one label per frame)."""
    out = np.empty((len(labels), CHANNELS), dtype=np.int16)
    for i, k in enumerate(labels):
        out[i] = synth_frame(int(k), t0 + i, seed, baseline_sigma, active_sigma)
    return out


def script_labels(script: list[tuple[int, float]], sample_rate_hz: int) -> np.ndarray:
    """Expand [(class_id, duration_s), ...] into one label per frame."""
    if not script:
        raise InvalidConfig("empty session script")
    parts = []
    for class_id, duration_s in script:
        if not 0 <= int(class_id) < N_CLASSES:
            raise InvalidClass(f"class_id {class_id} outside 0..6")
        n = int(round(float(duration_s) * sample_rate_hz))
        if n <= 0:
            raise InvalidConfig(f"non-positive duration {duration_s}")
        parts.append(np.full(n, int(class_id), dtype=np.int16))
    return np.concatenate(parts)


def load_script(path) -> list[tuple[int, float]]:
    """Session script JSON: a list of {"class": 0..6, "duration_s": seconds}."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    try:
        return [(int(step["class"]), float(step["duration_s"])) for step in raw]
    except (TypeError, KeyError, ValueError) as e:
        raise InvalidConfig(f"script {path} is not a list of class/duration_s steps: {e}") from e


@dataclass
class SessionRecording:
    sample_rate_hz: int
    labels: np.ndarray  # (n,) int, -1 means unlabeled
    samples: np.ndarray  # (n, channel_count) int16

    @property
    def channel_count(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return len(self.labels)


def save_recording(rec: SessionRecording, path) -> None:
    n, c = rec.samples.shape
    header = "time_s,label," + ",".join(f"ch{i:03d}" for i in range(c))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        rate = rec.sample_rate_hz
        for i in range(n):
            row = rec.samples[i].tolist()
            f.write(f"{i / rate!r},{int(rec.labels[i])},")
            f.write(",".join(map(str, row)))
            f.write("\n")


def load_recording(path, expect_channels: int | None = None) -> SessionRecording:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        cols = header.split(",")
        if len(cols) < 3 or cols[0] != "time_s" or cols[1] != "label":
            raise MalformedRecording(f"bad header in {path}")
        channel_count = len(cols) - 2
        if expect_channels is not None and channel_count != expect_channels:
            raise MalformedRecording(
                f"{channel_count} sample columns, expected {expect_channels}"
            )
        try:
            data = np.loadtxt(f, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as e:
            raise MalformedRecording(f"unparseable rows: {e}") from e
    if data.size == 0:
        raise MalformedRecording("recording has no rows")
    if data.shape[1] != channel_count + 2:
        raise MalformedRecording("row width does not match header")
    times, labels, samples = data[:, 0], data[:, 1], data[:, 2:]
    if len(times) > 1:
        dt = np.diff(times)
        if (dt <= 0).any():
            raise MalformedRecording("time_s not strictly increasing")
        step = np.median(dt)
        if (np.abs(dt - step) > 0.01 * step).any():
            raise MalformedRecording("time_s increments not uniform")
        rate = int(round(1.0 / step))
    else:
        rate = 0  # single-row recording carries no rate information
    if ((labels < -1) | (labels > 6) | (labels != np.rint(labels))).any():
        raise MalformedRecording("labels must be integers in -1..6")
    if ((samples < -32768) | (samples > 32767) | (samples != np.rint(samples))).any():
        raise MalformedRecording("samples must be int16-range integers")
    return SessionRecording(rate, labels.astype(np.int16), samples.astype(np.int16))


def write_recording(
    path,
    script: list[tuple[int, float]],
    seed: int,
    sample_rate_hz: int = 512,
    baseline_sigma: float = 50.0,
    active_sigma: float = 250.0,
) -> SessionRecording:
    """Synthesize a labeled session per the script and save it as CSV."""
    labels = script_labels(script, sample_rate_hz)
    samples = synth_block(labels, 0, seed, baseline_sigma, active_sigma)
    rec = SessionRecording(sample_rate_hz, labels, samples)
    save_recording(rec, path)
    return rec


def block_rms_label(window: np.ndarray, baseline_sigma: float = 50.0, active_sigma: float = 250.0) -> int:
    """Direct-rule classifier: pick the 32-channel block with the largest RMS.

    Sanity oracle for learned models; independent of any trained weights.
    """
    x = window.astype(np.float64)
    ms = x.reshape(x.shape[0], 6, BLOCK) ** 2
    block_ms = ms.mean(axis=(0, 2))
    threshold = baseline_sigma**2 + 0.25 * active_sigma**2
    best = int(np.argmax(block_ms))
    return best + 1 if block_ms[best] > threshold else 0


class EmulatorServer:
    """Single-client stream server; valid start/stop commands gate paced frames.

    Malformed commands (bad magic/checksum/version) close the connection.
    """

    def __init__(
        self,
        cfg: EmulatorConfig,
        script: list[tuple[int, float]] | None = None,
        recording: SessionRecording | None = None,
    ):
        cfg.validate()
        self.cfg = cfg
        if cfg.source == "synthetic":
            if script is None:
                raise InvalidConfig("synthetic source needs a script")
            self._script = script
        else:
            if recording is None:
                raise InvalidConfig("replay source needs a recording")
            if recording.channel_count != CHANNELS:
                raise MalformedRecording(
                    f"replay recording has {recording.channel_count} channels, need {CHANNELS}"
                )
        self._recording = recording
        self._listener: socket.socket | None = None
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._conn_lock = threading.Lock()
        self._conn: socket.socket | None = None

    # -- lifecycle ---------------------------------------------------------

    def __enter__(self) -> "EmulatorServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind(self.cfg.listen)
        listener.listen(1)
        self._listener = listener
        self._thread = threading.Thread(target=self._serve, name="emulator", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            self._listener.close()
        with self._conn_lock:
            if self._conn is not None:
                try:
                    self._conn.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
                self._conn.close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    @property
    def endpoint(self) -> tuple[str, int]:
        assert self._listener is not None, "server not started"
        return self._listener.getsockname()[:2]

    # -- serving -----------------------------------------------------------

    def _serve(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            with self._conn_lock:
                self._conn = conn
            try:
                self._handle_client(conn)
            except OSError:
                pass
            finally:
                with self._conn_lock:
                    self._conn = None
                conn.close()

    def _handle_client(self, conn: socket.socket) -> None:
        conn.setblocking(False)
        cmd_buf = bytearray()
        streaming = False
        rate = 512
        pos = 0  # next frame index in the session
        t0 = 0.0  # wall time of stream start, minus already-sent frames
        labels: np.ndarray | None = None
        if self.cfg.source == "replay":
            total = len(self._recording)
        else:
            labels = None
            total = 0

        while not self._stop.is_set():
            # drain pending commands first: a stop must take effect promptly
            try:
                chunk = conn.recv(4096)
                if chunk == b"":
                    return
                cmd_buf.extend(chunk)
            except (BlockingIOError, InterruptedError):
                pass

            while len(cmd_buf) >= COMMAND_LEN:
                frame = bytes(cmd_buf[:COMMAND_LEN])
                del cmd_buf[:COMMAND_LEN]
                try:
                    acq, control = decode_command(frame)
                except EmgPipeError:
                    return  # close connection on any malformed command
                if control == CONTROL_START and not streaming:
                    rate = acq.sample_rate_hz
                    if self.cfg.source == "synthetic":
                        if acq.channel_count != CHANNELS:
                            return
                        labels = script_labels(self._script, rate)
                        total = len(labels)
                    elif acq.channel_count != self._recording.channel_count:
                        return
                    streaming = True
                    t0 = time.monotonic() - pos / rate
                elif control == CONTROL_STOP:
                    streaming = False

            if not streaming or pos >= total:
                time.sleep(0.002)
                continue

            if self.cfg.pacing == "realtime":
                due = int((time.monotonic() - t0) * rate) + 1
                n = min(due, total) - pos
                if n <= 0:
                    time.sleep(min(0.005, max(0.0, t0 + (pos + 1) / rate - time.monotonic())))
                    continue
                n = min(n, 64)
            else:
                n = min(512, total - pos)

            payload = encode_frame(self._frames(labels, pos, n))
            pos += n
            if not self._send_all(conn, payload):
                return

    def _send_all(self, conn: socket.socket, payload: bytes) -> bool:
        """Send on the nonblocking socket without losing position.

        sendall can transmit part of the payload before raising EAGAIN, so a
        naive retry would duplicate bytes mid-stream; track progress instead.
        Returns False when the server is shutting down.
        """
        view = memoryview(payload)
        sent = 0
        while sent < len(view):
            if self._stop.is_set():
                return False
            try:
                sent += conn.send(view[sent:])
            except (BlockingIOError, InterruptedError):
                time.sleep(0.001)
        return True

    def _frames(self, labels: np.ndarray | None, pos: int, n: int) -> np.ndarray:
        if self.cfg.source == "replay":
            return self._recording.samples[pos : pos + n]
        return synth_block(
            labels[pos : pos + n],
            pos,
            self.cfg.seed,
            self.cfg.baseline_sigma,
            self.cfg.active_sigma,
        )
