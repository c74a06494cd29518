"""Canonical Huffman tables and the entropy-coded bit reader/writer."""

from dataclasses import dataclass
from functools import cached_property

from ..errors import MalformedStreamError


@dataclass(frozen=True)
class HuffmanTable:
    counts: tuple  # 16 entries: number of codes of length 1..16
    symbols: tuple

    def __post_init__(self):
        if len(self.counts) != 16:
            raise MalformedStreamError("Huffman table needs 16 length counts")
        if sum(self.counts) != len(self.symbols):
            raise MalformedStreamError("Huffman symbol count does not match length counts")
        if len(self.symbols) > 256:
            raise MalformedStreamError("Huffman table has more than 256 symbols")
        # Kraft check: the canonical assignment must not run out of codes
        code = 0
        for length, n in enumerate(self.counts, start=1):
            code += n
            if code > (1 << length):
                raise MalformedStreamError("Huffman length counts overflow the code space")
            code <<= 1

    @cached_property
    def codes(self):
        """symbol -> (code, length), canonical assignment."""
        table = {}
        code = 0
        k = 0
        for length, n in enumerate(self.counts, start=1):
            for _ in range(n):
                table[self.symbols[k]] = (code, length)
                code += 1
                k += 1
            code <<= 1
        return table

    @cached_property
    def lookup(self):
        """16-bit lookahead table: entry is (symbol, length) or None for an invalid code."""
        lut = [None] * 65536
        for symbol, (code, length) in self.codes.items():
            start = code << (16 - length)
            span = 1 << (16 - length)
            lut[start:start + span] = [(symbol, length)] * span
        return lut


class BitReader:
    """MSB-first reader over an already unstuffed entropy-coded segment.

    Reads past the end are padded with 1-bits for lookahead, but consuming
    them raises :class:`MalformedStreamError`.
    """

    def __init__(self, data):
        self.data = data
        self.pos = 0
        self.acc = 0
        self.nbits = 0
        self.total = len(data) * 8
        self.consumed = 0

    def _fill(self, need):
        while self.nbits < need:
            if self.pos < len(self.data):
                byte = self.data[self.pos]
                self.pos += 1
            else:
                byte = 0xFF
            self.acc = (self.acc << 8) | byte
            self.nbits += 8

    def _consume(self, n):
        self.consumed += n
        if self.consumed > self.total:
            raise MalformedStreamError("truncated entropy-coded data")
        self.nbits -= n
        self.acc &= (1 << self.nbits) - 1

    def read_bits(self, n):
        if n == 0:
            return 0
        self._fill(n)
        value = self.acc >> (self.nbits - n)
        self._consume(n)
        return value

    def decode(self, table):
        self._fill(16)
        entry = table.lookup[self.acc >> (self.nbits - 16)]
        if entry is None:
            if self.total - self.consumed < 16:
                raise MalformedStreamError("truncated entropy-coded data")
            raise MalformedStreamError("invalid Huffman code")
        symbol, length = entry
        self._consume(length)
        return symbol

    def receive_extend(self, size):
        """Read ``size`` magnitude bits and sign-extend (JPEG EXTEND)."""
        if size == 0:
            return 0
        v = self.read_bits(size)
        if v < (1 << (size - 1)):
            v -= (1 << size) - 1
        return v


class BitWriter:
    """MSB-first writer with 0xFF byte stuffing; pads the final byte with 1-bits."""

    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0

    def write(self, value, length):
        if length == 0:
            return
        self.acc = (self.acc << length) | (value & ((1 << length) - 1))
        self.nbits += length
        while self.nbits >= 8:
            self.nbits -= 8
            byte = (self.acc >> self.nbits) & 0xFF
            self.out.append(byte)
            if byte == 0xFF:
                self.out.append(0x00)
        self.acc &= (1 << self.nbits) - 1

    def flush(self):
        if self.nbits:
            pad = 8 - self.nbits
            self.write((1 << pad) - 1, pad)
        return bytes(self.out)


def magnitude_category(value):
    """Number of bits needed for |value| (the SSSS category)."""
    return abs(int(value)).bit_length()


def encode_magnitude(value, size):
    """Bits emitted after the Huffman code for a coefficient of category ``size``."""
    return value if value >= 0 else value + (1 << size) - 1
