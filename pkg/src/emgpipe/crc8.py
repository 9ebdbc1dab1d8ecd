"""CRC-8/MAXIM (Dallas 1-Wire): poly x^8+x^5+x^4+1, reflected, init 0x00, no xor-out."""


def _build_table() -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0x8C if crc & 1 else crc >> 1
        table.append(crc)
    return tuple(table)


_TABLE = _build_table()


def crc8_maxim(data: bytes) -> int:
    crc = 0x00
    for byte in data:
        crc = _TABLE[crc ^ byte]
    return crc
