"""Bit sequences, a cursor-based reader and the Elias gamma code.

Bits are kept as ``'0'``/``'1'`` text internally.  Every codec in this package
works on strings of that form, so slicing and dictionary lookups stay cheap and
encodings print exactly like the bit strings one writes by hand.
"""

from __future__ import annotations

import struct

from .errors import TruncatedStreamError

__all__ = [
    "BitSeq",
    "BitReader",
    "check_bits",
    "elias_gamma_encode",
    "elias_gamma_decode",
    "elias_gamma_length",
    "bytes_to_bits",
    "bits_to_bytes",
]

_BIT_CHARS = frozenset("01")


def check_bits(bits: str) -> str:
    """Return ``bits`` unchanged, or raise ValueError if it is not a 0/1 string."""
    if not isinstance(bits, str):
        raise TypeError(f"expected a 0/1 string, got {type(bits).__name__}")
    if not _BIT_CHARS.issuperset(bits):
        raise ValueError("bit strings may only contain '0' and '1'")
    return bits


def bytes_to_bits(data: bytes) -> str:
    """Expand bytes into a bit string, most significant bit of each byte first."""
    if not data:
        return ""
    return format(int.from_bytes(data, "big"), f"0{8 * len(data)}b")


def bits_to_bytes(bits: str) -> bytes:
    """Pack a bit string MSB-first, zero-padding the last byte."""
    n = len(bits)
    if n == 0:
        return b""
    nbytes = (n + 7) // 8
    value = int(bits, 2) << (8 * nbytes - n)
    return value.to_bytes(nbytes, "big")


class BitSeq:
    """An append-only sequence of bits with an exact length.

    Appends are buffered as string pieces and joined on demand.
    """

    __slots__ = ("_parts", "_len", "_joined")

    def __init__(self, bits: str = ""):
        check_bits(bits)
        self._parts = [bits] if bits else []
        self._len = len(bits)
        self._joined = bits

    def __len__(self):
        return self._len

    @property
    def length(self) -> int:
        return self._len

    def append_bits(self, bits: str) -> "BitSeq":
        """Append a raw 0/1 string; returns ``self`` so calls can be chained."""
        if bits:
            check_bits(bits)
            self._parts.append(bits)
            self._len += len(bits)
            self._joined = None
        return self

    def _append_trusted(self, bits: str):
        # Codec hot path: ``bits`` is known to be a valid 0/1 string.
        if bits:
            self._parts.append(bits)
            self._len += len(bits)
            self._joined = None

    def append_uint(self, value: int, width: int) -> "BitSeq":
        """Append ``value`` as a ``width``-bit big-endian field."""
        if width < 0:
            raise ValueError(f"width must be non-negative, got {width}")
        if value < 0 or value >> width:
            raise ValueError(f"value {value} does not fit in {width} bits")
        if width:
            self._append_trusted(format(value, f"0{width}b"))
        return self

    def extend(self, other: "BitSeq") -> "BitSeq":
        self._append_trusted(other.to01())
        return self

    def to01(self) -> str:
        if self._joined is None:
            self._joined = "".join(self._parts)
            self._parts = [self._joined]
        return self._joined

    def __str__(self):
        return self.to01()

    def __repr__(self):
        s = self.to01()
        if len(s) > 64:
            s = s[:61] + "..."
        return f"BitSeq('{s}', length={self._len})"

    def __eq__(self, other):
        if isinstance(other, BitSeq):
            return self.to01() == other.to01()
        if isinstance(other, str):
            return self.to01() == other
        return NotImplemented

    __hash__ = None

    def reader(self) -> "BitReader":
        return BitReader(self)

    def to_bytes(self) -> bytes:
        """Serialize as a 64-bit little-endian bit count followed by MSB-first packed bits."""
        return struct.pack("<Q", self._len) + bits_to_bytes(self.to01())

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> "BitSeq":
        """Inverse of :meth:`to_bytes`; trailing bytes beyond the payload are rejected."""
        if len(data) - offset < 8:
            raise TruncatedStreamError("missing 8-byte bit-length field", offset * 8)
        (nbits,) = struct.unpack_from("<Q", data, offset)
        nbytes = (nbits + 7) // 8
        payload = data[offset + 8:]
        if len(payload) < nbytes:
            raise TruncatedStreamError(
                f"payload declares {nbits} bits but only {8 * len(payload)} are present",
                (offset + 8) * 8 + 8 * len(payload),
            )
        if len(payload) > nbytes:
            raise ValueError(f"{len(payload) - nbytes} unexpected trailing bytes after payload")
        bits = bytes_to_bits(payload)[:nbits]
        seq = cls.__new__(cls)
        seq._parts = [bits] if bits else []
        seq._len = nbits
        seq._joined = bits
        return seq


class BitReader:
    """Sequential reader over a :class:`BitSeq` (or a plain 0/1 string)."""

    __slots__ = ("bits", "cursor")

    def __init__(self, source, cursor: int = 0):
        self.bits = source.to01() if isinstance(source, BitSeq) else check_bits(source)
        if not 0 <= cursor <= len(self.bits):
            raise ValueError("cursor outside the sequence")
        self.cursor = cursor

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.cursor

    def read_bits(self, n: int) -> str:
        end = self.cursor + n
        if end > len(self.bits):
            raise TruncatedStreamError(
                f"need {n} bits, only {len(self.bits) - self.cursor} left", self.cursor
            )
        out = self.bits[self.cursor:end]
        self.cursor = end
        return out

    def read_uint(self, width: int) -> int:
        if width == 0:
            return 0
        return int(self.read_bits(width), 2)

    def read_bit(self) -> int:
        return self.read_uint(1)


def elias_gamma_length(n: int) -> int:
    """Codeword length of ``n``: 2*floor(log2 n) + 1."""
    if n < 1:
        raise ValueError(f"Elias gamma is defined for n >= 1, got {n}")
    return 2 * n.bit_length() - 1


def elias_gamma_encode(n: int) -> BitSeq:
    """floor(log2 n) zeros, then n in binary with its leading 1."""
    if n < 1:
        raise ValueError(f"Elias gamma is defined for n >= 1, got {n}")
    body = format(n, "b")
    seq = BitSeq()
    seq._append_trusted("0" * (len(body) - 1) + body)
    return seq


def elias_gamma_decode(reader: BitReader) -> int:
    start = reader.cursor
    one = reader.bits.find("1", start)
    if one < 0:
        raise TruncatedStreamError("no terminating 1 in gamma prefix", start)
    zeros = one - start
    reader.cursor = one
    try:
        return reader.read_uint(zeros + 1)
    except TruncatedStreamError:
        reader.cursor = start
        raise TruncatedStreamError("gamma codeword cut short", start) from None
