import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from amphikey.errors import PayloadTooLarge, WireError, WireErrorKind
from amphikey.wire import (DEFAULT_MAX_CHUNK, FLAG_MORE, HEADER_BYTES, MAX_MESSAGE, ClientKeys, Frame, FrameDecoder,
                           Reassembler, ServerHello, decode_frames, decode_stream, encode_frame, encode_message,
                           parse_frame)

import fuzz


def kind(fn, *a):
    with pytest.raises(WireError) as ei:
        fn(*a)
    return ei.value.kind


def test_header_layout_frozen():
    assert encode_frame(0x03, b"\xab" * 32)[0][:HEADER_BYTES].hex() == "414d50480103000000" + "00000020"
    assert encode_frame(0x7F, b"\x03")[0].hex() == "414d5048017f0000000000000103"


def test_empty_message_is_one_frame():
    frames = encode_frame(0x12, b"")
    assert len(frames) == 1 and len(frames[0]) == HEADER_BYTES
    assert decode_frames(frames[0]) == (0x12, b"")


@pytest.mark.parametrize("size,chunk", [(1, 64), (1024, 1024), (1025, 1024), (1218, 1024), (4413, 64), (MAX_MESSAGE, 1024)])
def test_roundtrip_chunked(size, chunk):
    body = random.Random(size).randbytes(size)
    frames = encode_frame(0x02, body, chunk)
    assert len(frames) == -(-size // chunk)
    assert all(len(f) <= HEADER_BYTES + chunk for f in frames)
    flags = [parse_frame(f)[0].flags for f in frames]
    assert flags[-1] == 0 and all(fl == FLAG_MORE for fl in flags[:-1])
    assert decode_frames(b"".join(frames)) == (0x02, body)


def test_limits():
    with pytest.raises(PayloadTooLarge):
        encode_frame(0x10, bytes(MAX_MESSAGE + 1))
    with pytest.raises(ValueError):
        encode_frame(0x10, b"x", 63)
    with pytest.raises(ValueError):
        encode_frame(256, b"x")


def test_error_kinds():
    good = encode_message(0x03, bytes(32))
    assert kind(decode_frames, b"XMPH" + good[4:]) is WireErrorKind.BAD_MAGIC
    assert kind(decode_frames, b"AM\x00") is WireErrorKind.BAD_MAGIC
    assert kind(decode_frames, good[:4] + b"\x02" + good[5:]) is WireErrorKind.BAD_VERSION
    assert kind(decode_frames, good[:10]) is WireErrorKind.TRUNCATED
    assert kind(decode_frames, good[:-1]) is WireErrorKind.TRUNCATED
    assert kind(decode_frames, b"") is WireErrorKind.TRUNCATED
    assert kind(decode_frames, good + b"\x00") is WireErrorKind.TRAILING
    big = good[:9] + struct.pack(">I", MAX_MESSAGE + 1)
    assert kind(decode_frames, big) is WireErrorKind.OVERSIZE


def test_chunk_gap_and_type_switch():
    a, b, c = encode_frame(0x01, bytes(200), 64)[:3]
    assert kind(decode_frames, a + c) is WireErrorKind.CHUNK_GAP
    other = encode_frame(0x02, bytes(200), 64)[1]
    assert kind(decode_frames, a + other) is WireErrorKind.CHUNK_GAP
    assert kind(decode_frames, a + b) is WireErrorKind.TRUNCATED


def test_reassembled_oversize():
    asm = Reassembler(max_message=100)
    asm.push(Frame(0x10, FLAG_MORE, 0, bytes(64)))
    with pytest.raises(WireError) as ei:
        asm.push(Frame(0x10, 0, 1, bytes(64)))
    assert ei.value.kind is WireErrorKind.OVERSIZE


def test_chunk_index_overflow():
    asm = Reassembler()
    asm._next = 0xFFFF
    with pytest.raises(WireError) as ei:
        asm.push(Frame(0x10, FLAG_MORE, 0xFFFF, b""))
    assert ei.value.kind is WireErrorKind.OVERSIZE


def test_stream_decoder_byte_by_byte():
    msgs = [(0x01, bytes(1218)), (0x02, b"\x01" * 1152), (0x03, b"\x02" * 32), (0x12, b"")]
    wire = b"".join(encode_message(t, b) for t, b in msgs)
    dec = FrameDecoder()
    out = []
    for i in range(len(wire)):
        out += dec.feed(wire[i:i + 1])
    assert out == msgs and dec.at_boundary()
    assert decode_stream(wire) == msgs


def test_stream_decoder_garbage_raises():
    dec = FrameDecoder()
    with pytest.raises(WireError):
        dec.feed(b"GET / HTTP/1.1\r\n")


def test_decode_stream_ends_mid_message():
    frames = encode_frame(0x01, bytes(300), 64)
    assert kind(decode_stream, b"".join(frames[:-1])) is WireErrorKind.TRUNCATED


def test_server_hello_codec():
    sh = ServerHello(1, 1, bytes(1184), b"\x01" * 32)
    raw = sh.to_bytes()
    assert len(raw) == 1218 and ServerHello.from_bytes(raw, 1184, 32) == sh
    assert ServerHello.peek(raw) == (1, 1)


def test_client_keys_codec():
    ck = ClientKeys(bytes(4413), 0x01, b"cert")
    raw = ck.to_bytes()
    assert raw[4413:4416] == b"\x01\x00\x04"
    assert ClientKeys.from_bytes(raw, 4413, True) == ck
    assert ClientKeys(bytes(1152)).to_bytes() == bytes(1152)
    from amphikey.errors import LengthMismatch
    for bad in (raw[:-1], raw + b"\x00", raw[:4414]):
        with pytest.raises(LengthMismatch):
            ClientKeys.from_bytes(bad, 4413, True)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 255), st.binary(max_size=3000), st.integers(64, 1500))
def test_roundtrip_property(t, body, chunk):
    assert decode_frames(encode_message(t, body, chunk)) == (t, body)


@settings(max_examples=2000, deadline=None)
@given(st.binary(max_size=200))
def test_arbitrary_bytes_never_crash(data):
    fuzz.check_one(data)


def test_fuzz_sample():
    res = fuzz.run(20_000, seed=1)
    assert res["crashes"] == []


def test_stream_decoder_error_after_partial_frame():
    # regression: a WireError raised mid-buffer must not leave the buffer locked
    dec = FrameDecoder()
    frame = encode_message(0x02, bytes(300), 64)
    dec.feed(frame[:100])
    with pytest.raises(WireError):
        dec.feed(b"\x00" * 400)
