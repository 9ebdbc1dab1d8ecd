"""Codec for the 40-byte amplifier command frame and the raw sample stream.

Command frame layout (little-endian fields, 40 bytes total):

    offset size field
    0      2    magic 0x51 0x43 ("QC")
    2      1    version (0x01)
    3      1    control: 0x00 stop, 0x01 start
    4      2    sample_rate_hz
    6      2    channel_count
    8      2    highpass_centihz
    10     2    lowpass_hz
    12     1    detection_mode
    13     1    analog_out
    14     25   reserved, zero
    39     1    CRC-8/MAXIM over bytes 0..38

Sample wire format: headerless back-to-back frames of little-endian int16,
channels in ascending order; sequence numbers are synthesized by the decoder.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .crc8 import crc8_maxim
from .errors import BadMagic, ChecksumMismatch, InvalidConfig, UnsupportedVersion

__all__ = [
    "AcquisitionConfig",
    "DEFAULT_CONFIG",
    "SampleFrame",
    "StreamDecoder",
    "COMMAND_LEN",
    "CONTROL_STOP",
    "CONTROL_START",
    "crc8_maxim",
    "encode_command",
    "decode_command",
    "encode_frame",
]

COMMAND_LEN = 40
MAGIC = b"QC"
VERSION = 0x01
CONTROL_STOP = 0x00
CONTROL_START = 0x01
MAX_CHANNELS = 384

_HEADER = struct.Struct("<2sBBHHHHBB")  # bytes 0..13, reserved tail handled separately


@dataclass(frozen=True)
class AcquisitionConfig:
    sample_rate_hz: int = 512
    channel_count: int = 192
    highpass_centihz: int = 30
    lowpass_hz: int = 500
    detection_mode: int = 0
    analog_out: int = 0

    def validate(self) -> None:
        if not 1 <= self.channel_count <= MAX_CHANNELS:
            raise InvalidConfig(f"channel_count {self.channel_count} outside 1..{MAX_CHANNELS}")
        if not 1 <= self.sample_rate_hz <= 0xFFFF:
            raise InvalidConfig(f"sample_rate_hz {self.sample_rate_hz} outside 1..65535")
        for name in ("highpass_centihz", "lowpass_hz"):
            if not 0 <= getattr(self, name) <= 0xFFFF:
                raise InvalidConfig(f"{name} outside 0..65535")
        for name in ("detection_mode", "analog_out"):
            if not 0 <= getattr(self, name) <= 0xFF:
                raise InvalidConfig(f"{name} outside 0..255")


DEFAULT_CONFIG = AcquisitionConfig()


def encode_command(cfg: AcquisitionConfig, control: int) -> bytes:
    cfg.validate()
    if control not in (CONTROL_STOP, CONTROL_START):
        raise InvalidConfig(f"control {control} is not stop (0) or start (1)")
    frame = bytearray(COMMAND_LEN)
    _HEADER.pack_into(
        frame,
        0,
        MAGIC,
        VERSION,
        control,
        cfg.sample_rate_hz,
        cfg.channel_count,
        cfg.highpass_centihz,
        cfg.lowpass_hz,
        cfg.detection_mode,
        cfg.analog_out,
    )
    frame[39] = crc8_maxim(bytes(frame[:39]))
    return bytes(frame)


def decode_command(frame: bytes) -> tuple[AcquisitionConfig, int]:
    if len(frame) != COMMAND_LEN:
        raise InvalidConfig(f"command frame must be {COMMAND_LEN} bytes, got {len(frame)}")
    if frame[:2] != MAGIC:
        raise BadMagic(f"bad magic {frame[:2]!r}")
    if frame[39] != crc8_maxim(frame[:39]):
        raise ChecksumMismatch(f"checksum {frame[39]:#04x} != computed")
    if frame[2] != VERSION:
        raise UnsupportedVersion(f"version {frame[2]:#04x}")
    _, _, control, rate, channels, hp, lp, det, aout = _HEADER.unpack_from(frame, 0)
    if control not in (CONTROL_STOP, CONTROL_START):
        raise InvalidConfig(f"control {control} is not stop (0) or start (1)")
    cfg = AcquisitionConfig(rate, channels, hp, lp, det, aout)
    cfg.validate()
    return cfg, control


def encode_frame(samples) -> bytes:
    return np.asarray(samples, dtype="<i2").tobytes()


@dataclass(eq=False)
class SampleFrame:
    samples: np.ndarray  # int16, shape (channel_count,)
    seq: int


class StreamDecoder:
    """Reassembles fixed-size sample frames from arbitrary byte splits."""

    def __init__(self, channel_count: int, first_seq: int = 0):
        self.channel_count = channel_count
        self.frame_bytes = 2 * channel_count
        self._buf = bytearray()
        self._next_seq = first_seq

    @property
    def residual(self) -> int:
        return len(self._buf)

    def feed(self, data: bytes) -> list[SampleFrame]:
        self._buf.extend(data)
        n_frames = len(self._buf) // self.frame_bytes
        if n_frames == 0:
            return []
        cut = n_frames * self.frame_bytes
        block = np.frombuffer(bytes(self._buf[:cut]), dtype="<i2").reshape(n_frames, self.channel_count)
        del self._buf[:cut]
        frames = [SampleFrame(block[i], self._next_seq + i) for i in range(n_frames)]
        self._next_seq += n_frames
        return frames
