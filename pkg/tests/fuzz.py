"""Decoder fuzz driver shared by the wire tests and the acceptance run."""

import random
import struct

from amphikey.wire import HEADER, MAGIC, MAX_MESSAGE, VERSION, FrameDecoder, decode_frames, encode_message
from amphikey.errors import WireError

SEED_MESSAGES = [
    encode_message(0x01, bytes(range(256)) * 5, 256),
    encode_message(0x02, b"\xaa" * 1152),
    encode_message(0x03, b"\x55" * 32),
    encode_message(0x7F, b"\x03"),
    encode_message(0x12, b""),
    encode_message(0x10, bytes(3000), 64),
]


def _mutate(rng: random.Random, data: bytes) -> bytes:
    b = bytearray(data)
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(6)
        if op == 0 and b:
            b[rng.randrange(len(b))] ^= 1 << rng.randrange(8)
        elif op == 1 and b:
            b[rng.randrange(len(b))] = rng.randrange(256)
        elif op == 2:
            del b[rng.randrange(len(b) + 1):]
        elif op == 3:
            at = rng.randrange(len(b) + 1)
            b[at:at] = rng.randbytes(rng.randint(1, 16))
        elif op == 4 and len(b) >= 13:
            # rewrite a header length field with an extreme value
            b[9:13] = struct.pack(">I", rng.choice([0, 1, MAX_MESSAGE, MAX_MESSAGE + 1, 0xFFFFFFFF, rng.randrange(1 << 32)]))
        elif op == 5 and len(b) >= 9:
            b[7:9] = struct.pack(">H", rng.choice([0, 1, 2, 0xFFFF]))
    return bytes(b)


def _header_soup(rng: random.Random) -> bytes:
    n = rng.randrange(0, 80)
    return HEADER.pack(MAGIC, VERSION, rng.randrange(256), rng.randrange(256), rng.randrange(4),
                       rng.choice([n, rng.randrange(1 << 32)])) + rng.randbytes(n)


def case(rng: random.Random) -> bytes:
    k = rng.randrange(3)
    if k == 0:
        return rng.randbytes(rng.randrange(0, 64))
    if k == 1:
        return _mutate(rng, rng.choice(SEED_MESSAGES))
    return b"".join(_header_soup(rng) for _ in range(rng.randint(1, 3)))


def check_one(data: bytes) -> None:
    """Anything other than a WireError, or a result not backed by the input, is a crash."""
    try:
        msg_type, body = decode_frames(data)
    except WireError:
        return
    assert 0 <= msg_type <= 255
    assert len(body) <= len(data) and len(body) <= MAX_MESSAGE


def check_stream(rng: random.Random, data: bytes) -> None:
    dec = FrameDecoder()
    total = 0
    try:
        i = 0
        while i < len(data):
            step = rng.randint(1, 200)
            for _, body in dec.feed(data[i:i + step]):
                total += len(body)
            i += step
    except WireError:
        return
    assert total <= len(data)


def run(n: int, seed: int = 0) -> dict:
    rng = random.Random(seed)
    crashes = []
    for i in range(n):
        data = case(rng)
        try:
            check_one(data)
            if i % 16 == 0:
                check_stream(rng, data)
        except Exception as exc:  # noqa: BLE001 - any escape is the finding
            crashes.append((data.hex(), repr(exc)))
            if len(crashes) > 10:
                break
    return {"cases": n, "crashes": crashes}
