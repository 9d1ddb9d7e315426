"""``DDRS`` container files: a small header naming the scheme, then the payload.

Layout: ``b"DDRS"``, version byte, scheme tag byte, scheme parameters as
unsigned 32-bit little-endian fields, then the bit payload as serialized by
:meth:`ddrs.bitio.BitSeq.to_bytes`.  Real-valued parameters are stored in
micro-units (value * 10**6, rounded).
"""

from __future__ import annotations

import struct

from .bitio import BitSeq
from .errors import MalformedStreamError, TruncatedStreamError
from .schemes import AFLD, EDD, FLD, MFLD, VLD

MAGIC = b"DDRS"
VERSION = 1
MICRO = 1_000_000

_FIELDS = {FLD.tag: 1, MFLD.tag: 2, AFLD.tag: 5, EDD.tag: 2, VLD.tag: 1}


def to_micro(x: float) -> int:
    v = round(x * MICRO)
    if not 0 <= v < 2 ** 32:
        raise ValueError(f"{x} does not fit a 32-bit micro-unit field")
    return v


def from_micro(v: int) -> float:
    return v / MICRO


def quantize(config):
    """Return ``config`` with real parameters rounded to what the container can store."""
    if isinstance(config, AFLD):
        return AFLD(config.D, from_micro(to_micro(config.gamma)), config.A, config.B,
                    from_micro(to_micro(config.delta)))
    if isinstance(config, EDD):
        return EDD(config.ell, from_micro(to_micro(config.beta)))
    return config


def _params(config) -> list:
    if isinstance(config, FLD):
        return [config.ell]
    if isinstance(config, MFLD):
        return [config.D, config.ell]
    if isinstance(config, AFLD):
        return [config.D, config.A, config.B, to_micro(config.gamma), to_micro(config.delta)]
    if isinstance(config, EDD):
        return [config.ell, to_micro(config.beta)]
    if isinstance(config, VLD):
        return [config.M]
    raise TypeError(f"not a scheme configuration: {config!r}")


def _config(tag: int, f: list):
    if tag == FLD.tag:
        return FLD(f[0])
    if tag == MFLD.tag:
        return MFLD(f[0], f[1])
    if tag == AFLD.tag:
        return AFLD(f[0], from_micro(f[3]), f[1], f[2], from_micro(f[4]))
    if tag == EDD.tag:
        return EDD(f[0], from_micro(f[1]))
    return VLD(f[0])


def pack(config, payload: BitSeq) -> bytes:
    """Build a container.  ``config`` must already be quantized (see :func:`quantize`)."""
    fields = _params(config)
    for v in fields:
        if not 0 <= v < 2 ** 32:
            raise ValueError(f"parameter {v} does not fit 32 bits")
    head = MAGIC + bytes([VERSION, config.tag]) + struct.pack(f"<{len(fields)}I", *fields)
    return head + payload.to_bytes()


def unpack(data: bytes):
    """Parse a container into ``(config, payload)``."""
    if len(data) < 6:
        raise TruncatedStreamError("container shorter than its fixed header", 8 * len(data))
    if data[:4] != MAGIC:
        raise MalformedStreamError("bad magic bytes, not a DDRS container", 0)
    if data[4] != VERSION:
        raise MalformedStreamError(f"unsupported container version {data[4]}", 32)
    tag = data[5]
    if tag not in _FIELDS:
        raise MalformedStreamError(f"unknown scheme tag {tag}", 40)
    n = _FIELDS[tag]
    end = 6 + 4 * n
    if len(data) < end:
        raise TruncatedStreamError("container header cut short", 8 * len(data))
    fields = list(struct.unpack_from(f"<{n}I", data, 6))
    try:
        config = _config(tag, fields)
    except ValueError as exc:
        raise MalformedStreamError(f"invalid scheme parameters: {exc}", 48) from None
    try:
        payload = BitSeq.from_bytes(data, end)
    except TruncatedStreamError:
        raise
    except ValueError as exc:
        raise MalformedStreamError(str(exc), 8 * end) from None
    return config, payload
