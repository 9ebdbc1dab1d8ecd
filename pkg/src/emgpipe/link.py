"""Burst-transfer link between acquisition and inference: a rendezvous with a
single window slot, offered by the peripheral end and pulled by the controller.

Socket-transport framing: READY(0xA5) -> REQ(0x5A) -> LEN(4, LE) -> payload ->
ACK(0x06), where payload is an 8-byte little-endian first_seq followed by the
window samples (time-major little-endian int16). Capture timestamps do not
cross the socket transport; fetched windows carry NaN there. The in-process
transport hands over the Window object itself, timestamps included.
"""

from __future__ import annotations

import math
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .bridge import Window
from .errors import LengthMismatch, LinkClosed, OfferWhileBusy

__all__ = [
    "READY",
    "REQ",
    "ACK",
    "LinkStats",
    "offer_window",
    "fetch_window",
    "create_inprocess_link",
    "SocketPeripheral",
    "SocketController",
    "window_payload",
    "window_from_payload",
]

READY = 0xA5
REQ = 0x5A
ACK = 0x06

_SEQ = struct.Struct("<Q")


@dataclass
class LinkStats:
    durations: list[float] = field(default_factory=list)  # ready -> delivered, seconds
    bytes_moved: int = 0
    transfers: int = 0

    def record(self, duration: float, window_bytes: int) -> None:
        self.durations.append(duration)
        self.bytes_moved += window_bytes
        self.transfers += 1


def window_payload(w: Window) -> bytes:
    return _SEQ.pack(w.first_seq) + w.to_bytes()


def window_from_payload(payload: bytes, window_len: int, channel_count: int) -> Window:
    (first_seq,) = _SEQ.unpack_from(payload, 0)
    samples = np.frombuffer(payload, dtype="<i2", offset=_SEQ.size)
    samples = samples.reshape(window_len, channel_count).copy()
    return Window(samples, first_seq, capture_timestamp=math.nan, fill_duration=math.nan)


def offer_window(peripheral, w: Window) -> None:
    peripheral.offer(w)


def fetch_window(controller, timeout: float | None = None) -> Window:
    return controller.fetch(timeout)


# -- in-process transport ----------------------------------------------------


class _InProcState:
    def __init__(self):
        self.cond = threading.Condition()
        self.slot: Window | None = None
        self.closed = False


class InProcPeripheral:
    def __init__(self, state: _InProcState):
        self._state = state
        self.stats = LinkStats()

    def offer(self, w: Window) -> None:
        st = self._state
        with st.cond:
            if st.closed:
                raise LinkClosed("link closed")
            if st.slot is not None:
                raise OfferWhileBusy("previous window not fetched yet")
            st.slot = w
            t0 = time.perf_counter()
            st.cond.notify_all()
            while st.slot is not None and not st.closed:
                st.cond.wait()
            if st.slot is not None:
                st.slot = None
                raise LinkClosed("link closed while offering")
            self.stats.record(time.perf_counter() - t0, w.samples.nbytes)

    def close(self) -> None:
        with self._state.cond:
            self._state.closed = True
            self._state.cond.notify_all()


class InProcController:
    def __init__(self, state: _InProcState):
        self._state = state

    def fetch(self, timeout: float | None = None) -> Window:
        st = self._state
        deadline = None if timeout is None else time.monotonic() + timeout
        with st.cond:
            while st.slot is None:
                if st.closed:
                    raise LinkClosed("link closed")
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    raise TimeoutError("no window offered within timeout")
                st.cond.wait(remaining)
            w = st.slot
            st.slot = None
            st.cond.notify_all()
            return w

    def close(self) -> None:
        with self._state.cond:
            self._state.closed = True
            self._state.cond.notify_all()


def create_inprocess_link() -> tuple[InProcPeripheral, InProcController]:
    state = _InProcState()
    return InProcPeripheral(state), InProcController(state)


# -- local-socket transport ---------------------------------------------------


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if chunk == b"":
            break
        buf.extend(chunk)
    return bytes(buf)


class SocketPeripheral:
    """Offer side of the socket transport; listens for one controller."""

    def __init__(self, listen: tuple[str, int] = ("127.0.0.1", 0)):
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind(listen)
        self._listener.listen(1)
        self._conn: socket.socket | None = None
        self._busy = False
        self._lock = threading.Lock()
        self.stats = LinkStats()

    @property
    def endpoint(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def _ensure_conn(self) -> socket.socket:
        if self._conn is None:
            try:
                self._conn, _ = self._listener.accept()
            except OSError as e:
                raise LinkClosed(f"accept failed: {e}") from e
        return self._conn

    def offer(self, w: Window) -> None:
        with self._lock:
            if self._busy:
                raise OfferWhileBusy("previous window not fetched yet")
            self._busy = True
        try:
            conn = self._ensure_conn()
            payload = window_payload(w)
            t0 = time.perf_counter()
            try:
                conn.sendall(bytes([READY]))
                req = _recv_exact(conn, 1)
                if req != bytes([REQ]):
                    raise LinkClosed("controller went away before requesting")
                conn.sendall(struct.pack("<I", len(payload)) + payload)
                ack = _recv_exact(conn, 1)
                if ack != bytes([ACK]):
                    raise LinkClosed("transfer not acknowledged")
            except OSError as e:
                raise LinkClosed(f"socket error during offer: {e}") from e
            self.stats.record(time.perf_counter() - t0, w.samples.nbytes)
        finally:
            with self._lock:
                self._busy = False

    def close(self) -> None:
        self._listener.close()
        if self._conn is not None:
            self._conn.close()


class SocketController:
    """Fetch side of the socket transport; connects to the peripheral."""

    def __init__(
        self,
        endpoint: tuple[str, int],
        window_len: int,
        channel_count: int,
        connect_timeout: float = 5.0,
    ):
        self.window_len = window_len
        self.channel_count = channel_count
        self._sock = socket.create_connection(endpoint, timeout=connect_timeout)

    def fetch(self, timeout: float | None = None) -> Window:
        expected = _SEQ.size + 2 * self.window_len * self.channel_count
        self._sock.settimeout(timeout)
        try:
            ready = self._sock.recv(1)
        except socket.timeout:
            raise TimeoutError("no READY within timeout") from None
        if ready == b"":
            raise LinkClosed("peripheral closed the link")
        if ready[0] != READY:
            raise LinkClosed(f"unexpected control byte {ready[0]:#04x}")
        try:
            self._sock.sendall(bytes([REQ]))
            header = _recv_exact(self._sock, 4)
            if len(header) < 4:
                raise LinkClosed("link closed mid-transfer")
            (declared,) = struct.unpack("<I", header)
            if declared != expected:
                raise LengthMismatch(f"declared {declared} bytes, expected {expected}")
            payload = _recv_exact(self._sock, declared)
            if len(payload) != declared:
                raise LengthMismatch(f"declared {declared} bytes, received {len(payload)}")
            self._sock.sendall(bytes([ACK]))
        except socket.timeout:
            raise TimeoutError("transfer stalled") from None
        except OSError as e:
            raise LinkClosed(f"socket error during fetch: {e}") from e
        return window_from_payload(payload, self.window_len, self.channel_count)

    def close(self) -> None:
        self._sock.close()
