"""Acquisition client: stop/start handshake, warm-up discard, and sliding-window
assembly feeding a bounded queue that prefers fresh data over completeness."""

from __future__ import annotations

import queue
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ChannelMismatch, ConnectFailed, HandshakeFailed
from .protocol import (
    AcquisitionConfig,
    CONTROL_START,
    CONTROL_STOP,
    SampleFrame,
    StreamDecoder,
    encode_command,
)

__all__ = ["BridgeConfig", "Window", "WindowAssembler", "Session", "start_session"]


@dataclass(frozen=True)
class BridgeConfig:
    endpoint: tuple[str, int]
    acquisition: AcquisitionConfig = AcquisitionConfig()
    window_len: int = 20
    hop: int = 20
    warmup_discard: int = 1000
    queue_capacity: int = 4
    connect_timeout: float = 5.0

    def validate(self) -> None:
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if not 1 <= self.hop <= self.window_len:
            raise ValueError("hop must satisfy 1 <= hop <= window_len")
        if self.warmup_discard < 0:
            raise ValueError("warmup_discard must be >= 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")


@dataclass(eq=False)
class Window:
    samples: np.ndarray  # (window_len, channel_count) int16, rows in seq order
    first_seq: int
    capture_timestamp: float  # monotonic arrival time of the window's last frame
    fill_duration: float = 0.0  # last-frame arrival minus first-frame arrival

    def to_bytes(self) -> bytes:
        return np.ascontiguousarray(self.samples, dtype="<i2").tobytes()


class WindowAssembler:
    """Shifting window buffer: emits once full, then every `hop` pushed frames."""

    def __init__(self, window_len: int, channel_count: int, hop: int):
        self.window_len = window_len
        self.channel_count = channel_count
        self.hop = hop
        self._buf = np.zeros((window_len, channel_count), dtype=np.int16)
        self._times = np.zeros(window_len, dtype=np.float64)
        self._seqs = np.zeros(window_len, dtype=np.int64)
        self._pushed = 0

    def push(self, frame: SampleFrame, now: float | None = None) -> Window | None:
        if len(frame.samples) != self.channel_count:
            raise ChannelMismatch(
                f"frame has {len(frame.samples)} channels, assembler expects {self.channel_count}"
            )
        if now is None:
            now = time.monotonic()
        if self._pushed < self.window_len:
            i = self._pushed
            self._buf[i] = frame.samples
            self._times[i] = now
            self._seqs[i] = frame.seq
        else:
            self._buf[:-1] = self._buf[1:]
            self._times[:-1] = self._times[1:]
            self._seqs[:-1] = self._seqs[1:]
            self._buf[-1] = frame.samples
            self._times[-1] = now
            self._seqs[-1] = frame.seq
        self._pushed += 1
        if self._pushed >= self.window_len and (self._pushed - self.window_len) % self.hop == 0:
            return Window(
                samples=self._buf.copy(),
                first_seq=int(self._seqs[0]),
                capture_timestamp=float(self._times[-1]),
                fill_duration=float(self._times[-1] - self._times[0]),
            )
        return None


class Session:
    """An established acquisition session: socket plus decoder/assembler state."""

    def __init__(
        self,
        cfg: BridgeConfig,
        sock: socket.socket,
        pending: list[SampleFrame],
        decoder: StreamDecoder,
    ):
        self.cfg = cfg
        self._sock = sock
        self._pending = pending  # frames decoded past the warm-up cut
        self.decoder = decoder  # keeps residual bytes and seq counter from warm-up
        self.assembler = WindowAssembler(cfg.window_len, cfg.acquisition.channel_count, cfg.hop)
        self.frames_read = 0
        self.windows_emitted = 0
        self.dropped = 0
        self.first_frame_time: float | None = None
        self.first_frame_seq = 0

    @property
    def stream_origin(self) -> float | None:
        """Monotonic time of stream sample index 0, or None before any frame.

        Frame seq s closes its sampling interval at (s + 1) / rate, so the
        arrival time of the first observed frame anchors the whole stream.
        """
        if self.first_frame_time is None:
            return None
        rate = self.cfg.acquisition.sample_rate_hz
        return self.first_frame_time - (self.first_frame_seq + 1) / rate

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def send_stop(self) -> None:
        try:
            self._sock.sendall(encode_command(self.cfg.acquisition, CONTROL_STOP))
        except OSError:
            pass

    def acquisition_loop(
        self,
        out: "queue.Queue[Window | None]",
        stop: threading.Event,
        read_timeout: float = 0.25,
    ) -> None:
        """Read frames until the stream ends or `stop` is set; emit to `out`.

        Network reads never block on queue space: on overflow the oldest
        queued window is dropped and counted. Ends by enqueueing None.
        """
        self._sock.settimeout(read_timeout)
        try:
            frames = self._pending
            self._pending = []
            while True:
                now = time.monotonic()
                for f in frames:
                    if self.first_frame_time is None:
                        self.first_frame_time = now
                        self.first_frame_seq = f.seq
                    self.frames_read += 1
                    w = self.assembler.push(f, now)
                    if w is not None:
                        self.windows_emitted += 1
                        self._publish(out, w)
                if stop.is_set():
                    return
                try:
                    data = self._sock.recv(65536)
                except socket.timeout:
                    frames = []
                    continue
                except OSError:
                    return
                if data == b"":
                    return  # server closed the stream
                frames = self.decoder.feed(data)
        finally:
            self._publish(out, None)  # evicts if full; a plain put could block forever

    def _publish(self, out: "queue.Queue[Window | None]", w: Window | None) -> None:
        try:
            out.put_nowait(w)
        except queue.Full:
            # single producer: after evicting one entry a slot is free
            try:
                out.get_nowait()
                self.dropped += 1
            except queue.Empty:
                pass
            out.put_nowait(w)


def start_session(cfg: BridgeConfig) -> Session:
    """Connect, send stop then start, and discard the warm-up frames.

    The first frame handed to the assembler afterwards has seq = warmup_discard.
    """
    cfg.validate()
    try:
        sock = socket.create_connection(cfg.endpoint, timeout=cfg.connect_timeout)
    except OSError as e:
        raise ConnectFailed(f"cannot reach emulator at {cfg.endpoint}: {e}") from e
    decoder = StreamDecoder(cfg.acquisition.channel_count)
    pending: list[SampleFrame] = []
    try:
        sock.sendall(encode_command(cfg.acquisition, CONTROL_STOP))
        sock.sendall(encode_command(cfg.acquisition, CONTROL_START))
        discarded = 0
        sock.settimeout(max(cfg.connect_timeout, 10.0))
        while discarded < cfg.warmup_discard:
            data = sock.recv(65536)
            if data == b"":
                raise HandshakeFailed("server closed the connection during warm-up")
            frames = decoder.feed(data)
            keep = len(frames) - (cfg.warmup_discard - discarded)
            if keep > 0:
                pending = frames[-keep:]  # frames past the cut arrive in the same chunk
                discarded = cfg.warmup_discard
            else:
                discarded += len(frames)
    except (OSError, HandshakeFailed) as e:
        sock.close()
        if isinstance(e, HandshakeFailed):
            raise
        raise HandshakeFailed(f"handshake failed: {e}") from e
    return Session(cfg, sock, pending, decoder)
