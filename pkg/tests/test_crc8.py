"""Checks the table-driven CRC against an independent bit-serial implementation."""

from hypothesis import given, strategies as st

from emgpipe.crc8 import crc8_maxim


def crc8_bitserial(data: bytes) -> int:
    # reflected polynomial 0x31 -> shift-right form 0x8C, init 0, no final xor
    crc = 0
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = ((crc >> 1) ^ 0x8C) if crc & 1 else crc >> 1
    return crc


def test_check_string():
    assert crc8_maxim(b"123456789") == 0xA1


def test_empty_is_zero():
    assert crc8_maxim(b"") == 0x00


def test_single_zero_byte():
    assert crc8_maxim(b"\x00") == 0x00
    assert crc8_bitserial(b"\x00") == 0x00


def test_all_single_bytes_match_oracle():
    for v in range(256):
        data = bytes([v])
        assert crc8_maxim(data) == crc8_bitserial(data)


@given(st.binary(max_size=512))
def test_matches_bitserial_oracle(data):
    assert crc8_maxim(data) == crc8_bitserial(data)


@given(st.binary(max_size=128))
def test_appending_crc_zeroes_the_register(data):
    # residue property of init-0 no-xorout CRCs
    assert crc8_maxim(data + bytes([crc8_maxim(data)])) == 0


@given(st.binary(max_size=128))
def test_output_range(data):
    assert 0 <= crc8_maxim(data) <= 0xFF
