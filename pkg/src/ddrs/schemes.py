"""Chunk-based deduplication codecs: FLD, mFLD, AFLD, EDD and VLD.

Every encoding starts with the Elias gamma code of the input length.  Chunks
follow in order: a new chunk is written as ``1`` plus its bits and enters the
dictionary; a repeat is written as ``0`` plus a pointer of exactly
ceil(log2 n) bits, n being the dictionary size at that moment (so a pointer
into a one-entry dictionary is empty).  EDD additionally accepts near repeats
and appends a mismatch record after the pointer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Union

from . import analytics
from .bitio import BitReader, BitSeq, check_bits, elias_gamma_decode, elias_gamma_encode
from .errors import MalformedStreamError, TruncatedStreamError, UnsupportedConfigError

__all__ = [
    "FLD",
    "MFLD",
    "AFLD",
    "EDD",
    "VLD",
    "SchemeConfig",
    "EncodeStats",
    "EncodeResult",
    "ChunkEvent",
    "chunk_fixed",
    "chunk_two_stage",
    "chunk_marker",
    "chunks_for",
    "rank_subset",
    "unrank_subset",
    "encode_mismatches",
    "decode_mismatches",
    "encode",
    "decode",
    "decode_from",
    "pointer_width",
]


# -- configurations -----------------------------------------------------------

@dataclass(frozen=True)
class FLD:
    ell: int
    tag: ClassVar[int] = 1
    name: ClassVar[str] = "fld"

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError(f"chunk length must be >= 1, got {self.ell}")

    def chunk_layout(self):
        return self.ell, self.ell


@dataclass(frozen=True)
class MFLD:
    D: int
    ell: int
    tag: ClassVar[int] = 2
    name: ClassVar[str] = "mfld"

    def __post_init__(self):
        if not 1 <= self.ell <= self.D:
            raise ValueError(f"need 1 <= ell <= D, got ell={self.ell}, D={self.D}")

    def chunk_layout(self):
        return self.D, self.ell


@dataclass(frozen=True)
class AFLD:
    """mFLD whose chunk length is derived from the model parameters (A, B, delta)."""

    D: int
    gamma: float
    A: int
    B: int
    delta: float
    tag: ClassVar[int] = 3
    name: ClassVar[str] = "afld"

    def __post_init__(self):
        # raises on any invalid combination
        self.ell

    @property
    def ell(self) -> int:
        return analytics.afld_chunk_length(self.B, self.A, self.gamma, self.delta, self.D)

    def chunk_layout(self):
        return self.D, self.ell


@dataclass(frozen=True)
class EDD:
    ell: int
    beta: float
    tag: ClassVar[int] = 4
    name: ClassVar[str] = "edd"

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError(f"chunk length must be >= 1, got {self.ell}")
        if not 0.0 < self.beta <= 0.25:
            raise ValueError(f"mismatch ratio must lie in (0, 1/4], got {self.beta}")

    @property
    def radius(self) -> int:
        return math.floor(2 * self.beta * self.ell)

    def chunk_layout(self):
        return self.ell, self.ell


@dataclass(frozen=True)
class VLD:
    M: int
    tag: ClassVar[int] = 5
    name: ClassVar[str] = "vld"

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"marker length must be >= 1, got {self.M}")


SchemeConfig = Union[FLD, MFLD, AFLD, EDD, VLD]


# -- results ------------------------------------------------------------------

@dataclass
class EncodeStats:
    header_bits: int = 0
    indicator_bits: int = 0
    literal_bits: int = 0
    pointer_bits: int = 0
    mismatch_bits: int = 0
    dict_size_final: int = 0
    chunk_count: int = 0
    input_bits: int = 0

    @property
    def total_bits(self) -> int:
        return (self.header_bits + self.indicator_bits + self.literal_bits
                + self.pointer_bits + self.mismatch_bits)


@dataclass(frozen=True)
class ChunkEvent:
    """Trace record for one chunk; ``index`` is None for literals."""

    position: int
    length: int
    literal: bool
    dict_size: int
    pointer_width: int
    index: int | None = None
    mismatches: int = 0


@dataclass
class EncodeResult:
    bits: BitSeq
    stats: EncodeStats
    trace: list | None = field(default=None, repr=False)


def pointer_width(dict_size: int) -> int:
    """ceil(log2 dict_size); 0 for a single-entry dictionary."""
    return (dict_size - 1).bit_length()


# -- chunking -----------------------------------------------------------------

def chunk_fixed(s: str, ell: int) -> list:
    if ell < 1:
        raise ValueError(f"chunk length must be >= 1, got {ell}")
    return [s[i:i + ell] for i in range(0, len(s), ell)]


def chunk_two_stage(s: str, D: int, ell: int) -> list:
    if not 1 <= ell <= D:
        raise ValueError(f"need 1 <= ell <= D, got ell={ell}, D={D}")
    if D == ell:
        return chunk_fixed(s, ell)
    out = []
    for k in range(0, len(s), D):
        seg = s[k:k + D]
        out.extend(seg[i:i + ell] for i in range(0, len(seg), ell))
    return out


def chunk_marker(s: str, M: int) -> list:
    """Cut after the first completed run of M zeros since the chunk began."""
    if M < 1:
        raise ValueError(f"marker length must be >= 1, got {M}")
    marker = "0" * M
    out = []
    start, n = 0, len(s)
    find = s.find
    while start < n:
        j = find(marker, start)
        if j < 0:
            out.append(s[start:])
            break
        end = j + M
        out.append(s[start:end])
        start = end
    return out


def chunks_for(s: str, config: SchemeConfig) -> list:
    if isinstance(config, VLD):
        return chunk_marker(s, config.M)
    D, ell = config.chunk_layout()
    return chunk_two_stage(s, D, ell)


def _fixed_lengths(n: int, D: int, ell: int):
    """Chunk lengths produced by two-stage chunking of an n-bit string."""
    full_segments, tail = divmod(n, D)
    per_seg, seg_rem = divmod(D, ell)
    seg_lengths = [ell] * per_seg + ([seg_rem] if seg_rem else [])
    for _ in range(full_segments):
        yield from seg_lengths
    if tail:
        q, r = divmod(tail, ell)
        yield from [ell] * q
        if r:
            yield r


# -- combinatorial number system ------------------------------------------------

def rank_subset(positions, ell: int) -> int:
    """Colexicographic rank of a strictly ascending position set within range(ell)."""
    rank, prev = 0, -1
    for i, c in enumerate(positions):
        if not prev < c < ell:
            raise ValueError(f"positions must be strictly ascending and < {ell}")
        rank += math.comb(c, i + 1)
        prev = c
    return rank


def unrank_subset(rank: int, t: int, ell: int) -> list:
    if not 0 <= t <= ell:
        raise ValueError(f"subset size {t} out of range for ell={ell}")
    if not 0 <= rank < math.comb(ell, t):
        raise ValueError(f"rank {rank} out of range [0, C({ell},{t}))")
    out = []
    c = ell - 1
    for i in range(t, 0, -1):
        while math.comb(c, i) > rank:
            c -= 1
        out.append(c)
        rank -= math.comb(c, i)
        c -= 1
    out.reverse()
    return out


def _count_width(radius: int) -> int:
    return radius.bit_length()


def _rank_width(ell: int, t: int) -> int:
    return (math.comb(ell, t) - 1).bit_length()


def encode_mismatches(reference: str, chunk: str, radius: int) -> BitSeq:
    """Mismatch count in ceil(log2(radius+1)) bits, then the rank of the positions."""
    if len(reference) != len(chunk):
        raise ValueError("reference and chunk must have equal length")
    positions = [i for i, (a, b) in enumerate(zip(reference, chunk)) if a != b]
    t = len(positions)
    if t > radius:
        raise ValueError(f"{t} mismatches exceed radius {radius}")
    out = BitSeq()
    out.append_uint(t, _count_width(radius))
    out.append_uint(rank_subset(positions, len(chunk)), _rank_width(len(chunk), t))
    return out


def decode_mismatches(reader: BitReader, reference: str, radius: int) -> str:
    """Read a mismatch record and apply it to ``reference``."""
    start = reader.cursor
    t = reader.read_uint(_count_width(radius))
    ell = len(reference)
    if t > radius or t > ell:
        raise MalformedStreamError(f"mismatch count {t} exceeds radius {radius}", start)
    rank = reader.read_uint(_rank_width(ell, t))
    if rank >= math.comb(ell, t):
        raise MalformedStreamError(f"mismatch rank {rank} out of range", start)
    chars = list(reference)
    for p in unrank_subset(rank, t, ell):
        chars[p] = "1" if chars[p] == "0" else "0"
    return "".join(chars)


# -- encoding -------------------------------------------------------------------

def encode(s: str, config: SchemeConfig, trace: bool = False) -> EncodeResult:
    check_bits(s)
    if not s:
        raise UnsupportedConfigError("cannot encode an empty stream")
    chunks = chunks_for(s, config)
    if isinstance(config, EDD):
        return _encode_edd(s, chunks, config, trace)
    return _encode_exact(s, chunks, trace)


def _encode_exact(s, chunks, trace):
    header = elias_gamma_encode(len(s)).to01()
    parts = [header]
    append = parts.append
    index = {}
    events = [] if trace else None
    literal_bits = pointer_bits = 0
    pos = 0
    for z in chunks:
        idx = index.get(z)
        n = len(index)
        if idx is None:
            append("1")
            append(z)
            index[z] = n
            literal_bits += len(z)
            if trace:
                events.append(ChunkEvent(pos, len(z), True, n, 0))
        else:
            w = (n - 1).bit_length()
            append("0")
            if w:
                append(format(idx, f"0{w}b"))
            pointer_bits += w
            if trace:
                events.append(ChunkEvent(pos, len(z), False, n, w, idx))
        pos += len(z)
    stats = EncodeStats(
        header_bits=len(header),
        indicator_bits=len(chunks),
        literal_bits=literal_bits,
        pointer_bits=pointer_bits,
        dict_size_final=len(index),
        chunk_count=len(chunks),
        input_bits=len(s),
    )
    bits = BitSeq()
    bits._append_trusted("".join(parts))
    return EncodeResult(bits, stats, events)


def _encode_edd(s, chunks, config, trace):
    ell, radius = config.ell, config.radius
    header = elias_gamma_encode(len(s)).to01()
    parts = [header]
    entries = []      # literal chunks in insertion order
    full_values = []  # (dictionary index, int value) for entries of length ell
    events = [] if trace else None
    literal_bits = pointer_bits = mismatch_bits = 0
    pos = 0
    for z in chunks:
        n = len(entries)
        match = None
        if len(z) == ell:
            v = int(z, 2)
            for i, u in full_values:
                if (u ^ v).bit_count() <= radius:
                    match = i
                    break
        if match is None:
            parts.append("1")
            parts.append(z)
            if len(z) == ell:
                full_values.append((n, int(z, 2)))
            entries.append(z)
            literal_bits += len(z)
            if trace:
                events.append(ChunkEvent(pos, len(z), True, n, 0))
        else:
            w = (n - 1).bit_length()
            parts.append("0")
            if w:
                parts.append(format(match, f"0{w}b"))
            rec = encode_mismatches(entries[match], z, radius).to01()
            parts.append(rec)
            pointer_bits += w
            mismatch_bits += len(rec)
            if trace:
                t = (int(entries[match], 2) ^ int(z, 2)).bit_count()
                events.append(ChunkEvent(pos, len(z), False, n, w, match, t))
        pos += len(z)
    stats = EncodeStats(
        header_bits=len(header),
        indicator_bits=len(chunks),
        literal_bits=literal_bits,
        pointer_bits=pointer_bits,
        mismatch_bits=mismatch_bits,
        dict_size_final=len(entries),
        chunk_count=len(chunks),
        input_bits=len(s),
    )
    bits = BitSeq()
    bits._append_trusted("".join(parts))
    return EncodeResult(bits, stats, events)


# -- decoding -------------------------------------------------------------------

def decode(bits, config: SchemeConfig) -> str:
    """Reconstruct the input; every bit of ``bits`` must be consumed."""
    reader = BitReader(bits)
    out = decode_from(reader, config)
    if reader.remaining:
        raise MalformedStreamError(f"{reader.remaining} unread bits after the last chunk", reader.cursor)
    return out


def decode_from(reader: BitReader, config: SchemeConfig) -> str:
    """Decode one encoding starting at the reader's cursor, leaving the cursor just past it."""
    n = elias_gamma_decode(reader)
    if isinstance(config, VLD):
        return _decode_marker(reader, n, config.M)
    D, ell = config.chunk_layout()
    radius = config.radius if isinstance(config, EDD) else None
    return _decode_fixed(reader, n, D, ell, radius)


def _read_pointer(reader, entries):
    start = reader.cursor
    w = (len(entries) - 1).bit_length()
    idx = reader.read_uint(w) if w else 0
    if idx >= len(entries):
        raise MalformedStreamError(f"pointer {idx} beyond dictionary of size {len(entries)}", start)
    return idx


def _decode_fixed(reader, n, D, ell, radius):
    bits = reader.bits
    entries = []
    out = []
    for length in _fixed_lengths(n, D, ell):
        start = reader.cursor
        if start >= len(bits):
            raise TruncatedStreamError("stream ended before the next chunk", start)
        flag = bits[start]
        reader.cursor = start + 1
        if flag == "1":
            z = reader.read_bits(length)
            entries.append(z)
        else:
            if not entries:
                raise MalformedStreamError("repeat chunk with an empty dictionary", start)
            idx = _read_pointer(reader, entries)
            z = entries[idx]
            if len(z) != length:
                raise MalformedStreamError(
                    f"pointer references a {len(z)}-bit entry where {length} bits are due", start
                )
            if radius is not None:
                if length != ell:
                    raise MalformedStreamError("short final chunk encoded as a near repeat", start)
                z = decode_mismatches(reader, z, radius)
        out.append(z)
    return "".join(out)


def _decode_marker(reader, n, M):
    bits = reader.bits
    marker = "0" * M
    entries = []
    out = []
    done = 0
    while done < n:
        start = reader.cursor
        if start >= len(bits):
            raise TruncatedStreamError("stream ended before the next chunk", start)
        flag = bits[start]
        reader.cursor = start + 1
        if flag == "1":
            p = reader.cursor
            limit = p + (n - done)
            j = bits.find(marker, p, limit)
            end = limit if j < 0 else j + M
            if end > len(bits):
                raise TruncatedStreamError("literal chunk cut short", p)
            z = bits[p:end]
            reader.cursor = end
            entries.append(z)
        else:
            if not entries:
                raise MalformedStreamError("repeat chunk with an empty dictionary", start)
            z = entries[_read_pointer(reader, entries)]
            if done + len(z) > n:
                raise MalformedStreamError("repeat chunk overruns the declared length", start)
        out.append(z)
        done += len(z)
    return "".join(out)
