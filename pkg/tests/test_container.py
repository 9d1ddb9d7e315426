import struct

import pytest

from ddrs.bitio import BitSeq
from ddrs.container import MAGIC, VERSION, pack, quantize, unpack
from ddrs.errors import MalformedStreamError, TruncatedStreamError
from ddrs.schemes import AFLD, EDD, FLD, MFLD, VLD, decode, encode

CONFIGS = [FLD(2), MFLD(64, 7), AFLD(64, 0.3, 4, 1024, 0.1), EDD(16, 0.15), VLD(3)]


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.name)
def test_pack_unpack_round_trip(config):
    config = quantize(config)
    s = "0110111010010001" * 9 + "1"
    payload = encode(s, config).bits
    got_config, got_payload = unpack(pack(config, payload))
    assert got_config == config
    assert got_payload == payload
    assert decode(got_payload, got_config) == s


def test_quantize_is_idempotent_and_close():
    cfg = AFLD(64, 0.1234567891, 4, 1024, 0.0123456789)
    q = quantize(cfg)
    assert q == quantize(q)
    assert abs(q.gamma - cfg.gamma) <= 5e-7 and abs(q.delta - cfg.delta) <= 5e-7
    assert unpack(pack(q, BitSeq("1")))[0] == q


def test_layout():
    data = pack(FLD(2), BitSeq("101"))
    assert data[:4] == MAGIC and data[4] == VERSION and data[5] == FLD.tag
    assert struct.unpack_from("<I", data, 6) == (2,)
    assert data[10:] == BitSeq("101").to_bytes()


def test_bad_magic():
    data = bytearray(pack(FLD(2), BitSeq("1")))
    data[0] ^= 0xFF
    with pytest.raises(MalformedStreamError) as info:
        unpack(bytes(data))
    assert info.value.position == 0


@pytest.mark.parametrize("offset, value", [(4, 99), (5, 42)])
def test_bad_version_or_tag(offset, value):
    data = bytearray(pack(FLD(2), BitSeq("1")))
    data[offset] = value
    with pytest.raises(MalformedStreamError):
        unpack(bytes(data))


def test_invalid_parameters_are_malformed():
    data = MAGIC + bytes([VERSION, FLD.tag]) + struct.pack("<I", 0) + BitSeq("1").to_bytes()
    with pytest.raises(MalformedStreamError):
        unpack(data)


def test_every_truncation_is_reported():
    data = pack(VLD(2), encode("0110100111010", VLD(2)).bits)
    for cut in range(len(data)):
        with pytest.raises((TruncatedStreamError, MalformedStreamError)):
            unpack(data[:cut])
    with pytest.raises(TruncatedStreamError):
        unpack(data[:-1])


def test_trailing_bytes_rejected():
    with pytest.raises(MalformedStreamError):
        unpack(pack(FLD(2), BitSeq("1")) + b"\x00")
