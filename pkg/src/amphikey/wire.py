"""Frame codec, chunking and handshake message bodies.

Frame layout (all integers big-endian)::

    magic "AMPH" | version u8 | msg_type u8 | flags u8 | chunk_index u16 | payload_len u32 | payload

flags bit0 set means more chunks follow. A message is at most 64 KiB once
reassembled.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import LengthMismatch, PayloadTooLarge, WireError, WireErrorKind

MAGIC = b"AMPH"
VERSION = 0x01
HEADER = struct.Struct(">4sBBBHI")
HEADER_BYTES = HEADER.size  # 13
FLAG_MORE = 0x01
MAX_MESSAGE = 64 * 1024
DEFAULT_MAX_CHUNK = 1024
MIN_CHUNK = 64

MSG_SERVER_HELLO = 0x01
MSG_CLIENT_KEYS = 0x02
MSG_CONFIRM = 0x03
MSG_ABORT = 0x7F
MSG_TABLE_DATA = 0x10
MSG_TABLE_ACK = 0x11
MSG_CLOSE = 0x12

MSG_NAMES = {
    MSG_SERVER_HELLO: "ServerHello",
    MSG_CLIENT_KEYS: "ClientKeys",
    MSG_CONFIRM: "Confirm",
    MSG_ABORT: "Abort",
    MSG_TABLE_DATA: "TableData",
    MSG_TABLE_ACK: "TableAck",
    MSG_CLOSE: "Close",
}


@dataclass(frozen=True)
class Frame:
    msg_type: int
    flags: int
    chunk_index: int
    payload: bytes

    @property
    def more(self) -> bool:
        return bool(self.flags & FLAG_MORE)

    def to_bytes(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, self.msg_type, self.flags, self.chunk_index,
                           len(self.payload)) + self.payload


def encode_frame(msg_type: int, payload: bytes, max_chunk: int = DEFAULT_MAX_CHUNK) -> list[bytes]:
    """Split one message into frames of at most ``max_chunk`` payload bytes each."""
    if not 0 <= msg_type <= 0xFF:
        raise ValueError(f"msg_type out of range: {msg_type}")
    if max_chunk < MIN_CHUNK:
        raise ValueError(f"max_chunk must be at least {MIN_CHUNK}, got {max_chunk}")
    if len(payload) > MAX_MESSAGE:
        raise PayloadTooLarge(f"message of {len(payload)} bytes exceeds {MAX_MESSAGE}")
    payload = bytes(payload)
    pieces = [payload[i:i + max_chunk] for i in range(0, len(payload), max_chunk)] or [b""]
    last = len(pieces) - 1
    return [Frame(msg_type, FLAG_MORE if i < last else 0, i, p).to_bytes() for i, p in enumerate(pieces)]


def encode_message(msg_type: int, payload: bytes, max_chunk: int = DEFAULT_MAX_CHUNK) -> bytes:
    return b"".join(encode_frame(msg_type, payload, max_chunk))


def parse_frame(buf, offset: int = 0) -> tuple[Frame, int]:
    """Parse one frame at ``offset``; returns the frame and the offset just past it."""
    # the view must be released even on error, or a bytearray caller cannot resize
    with memoryview(buf) as view:
        return _parse_view(view, offset)


def _parse_view(view: memoryview, offset: int) -> tuple[Frame, int]:
    avail = len(view) - offset
    # check the prefix we do have, so garbage fails as BadMagic rather than Truncated
    head = bytes(view[offset:offset + min(avail, 4)])
    if head != MAGIC[:len(head)]:
        raise WireError(WireErrorKind.BAD_MAGIC, f"bad magic {head.hex()}")
    if avail >= 5 and view[offset + 4] != VERSION:
        raise WireError(WireErrorKind.BAD_VERSION, f"unsupported version {view[offset + 4]}")
    if avail < HEADER_BYTES:
        raise WireError(WireErrorKind.TRUNCATED, f"need {HEADER_BYTES} header bytes, have {avail}")
    _, _, msg_type, flags, index, length = HEADER.unpack_from(view, offset)
    if length > MAX_MESSAGE:
        raise WireError(WireErrorKind.OVERSIZE, f"frame declares {length} bytes")
    end = offset + HEADER_BYTES + length
    if end > len(view):
        raise WireError(WireErrorKind.TRUNCATED, f"frame declares {length} bytes, {len(view) - offset - HEADER_BYTES} present")
    return Frame(msg_type, flags, index, bytes(view[offset + HEADER_BYTES:end])), end


class Reassembler:
    """Joins chunks of one message at a time. Single owner, not thread-safe."""

    def __init__(self, max_message: int = MAX_MESSAGE):
        self.max_message = max_message
        self._reset()

    def _reset(self):
        self._type: int | None = None
        self._next = 0
        self._parts: list[bytes] = []
        self._size = 0

    @property
    def idle(self) -> bool:
        return self._type is None

    def push(self, frame: Frame) -> tuple[int, bytes] | None:
        if frame.chunk_index != self._next:
            raise WireError(WireErrorKind.CHUNK_GAP, f"expected chunk {self._next}, got {frame.chunk_index}")
        if self._type is not None and frame.msg_type != self._type:
            raise WireError(WireErrorKind.CHUNK_GAP,
                            f"msg_type changed from 0x{self._type:02x} to 0x{frame.msg_type:02x} mid-message")
        self._size += len(frame.payload)
        if self._size > self.max_message:
            raise WireError(WireErrorKind.OVERSIZE, f"reassembled message exceeds {self.max_message} bytes")
        self._type = frame.msg_type
        self._parts.append(frame.payload)
        if frame.more:
            if self._next == 0xFFFF:
                raise WireError(WireErrorKind.OVERSIZE, "chunk index overflow")
            self._next += 1
            return None
        out = (self._type, b"".join(self._parts))
        self._reset()
        return out


class FrameDecoder:
    """Incremental stream decoder: feed bytes, collect whole messages."""

    def __init__(self, max_message: int = MAX_MESSAGE):
        self._buf = bytearray()
        self._asm = Reassembler(max_message)

    def feed(self, data: bytes) -> list[tuple[int, bytes]]:
        self._buf += data
        out = []
        off = 0
        try:
            while off < len(self._buf):
                try:
                    frame, nxt = parse_frame(self._buf, off)
                except WireError as exc:
                    if exc.kind is WireErrorKind.TRUNCATED:
                        break  # wait for more bytes
                    raise
                off = nxt
                msg = self._asm.push(frame)
                if msg is not None:
                    out.append(msg)
        finally:
            del self._buf[:off]
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)

    def at_boundary(self) -> bool:
        return not self._buf and self._asm.idle


def decode_stream(data: bytes, max_message: int = MAX_MESSAGE) -> list[tuple[int, bytes]]:
    """Decode every message in ``data``; leftovers are an error."""
    asm = Reassembler(max_message)
    out = []
    off = 0
    while off < len(data):
        frame, off = parse_frame(data, off)
        msg = asm.push(frame)
        if msg is not None:
            out.append(msg)
    if not asm.idle:
        raise WireError(WireErrorKind.TRUNCATED, "stream ends inside a chunked message")
    return out


def decode_frames(data: bytes, max_message: int = MAX_MESSAGE) -> tuple[int, bytes]:
    """Decode exactly one message from ``data``."""
    asm = Reassembler(max_message)
    off = 0
    if not data:
        raise WireError(WireErrorKind.TRUNCATED, "empty input")
    while True:
        frame, off = parse_frame(data, off)
        msg = asm.push(frame)
        if msg is not None:
            if off != len(data):
                raise WireError(WireErrorKind.TRAILING, f"{len(data) - off} bytes after message")
            return msg
        if off >= len(data):
            raise WireError(WireErrorKind.TRUNCATED, "stream ends inside a chunked message")


# -- handshake message bodies --

CRED_CERTIFICATE = 0x01
CRED_SUBJECT = 0x02  # pre-provisioned: only the subject name travels


@dataclass(frozen=True)
class ServerHello:
    suite_id: int
    mode: int
    kem1_pk: bytes
    kem2_pk: bytes

    def to_bytes(self) -> bytes:
        return bytes([self.suite_id, self.mode]) + self.kem1_pk + self.kem2_pk

    @staticmethod
    def peek(body: bytes) -> tuple[int, int]:
        if len(body) < 2:
            raise LengthMismatch("ServerHello shorter than its header")
        return body[0], body[1]

    @classmethod
    def from_bytes(cls, body: bytes, kem1_pk_len: int, kem2_pk_len: int) -> "ServerHello":
        if len(body) != 2 + kem1_pk_len + kem2_pk_len:
            raise LengthMismatch(f"ServerHello must be {2 + kem1_pk_len + kem2_pk_len} bytes, got {len(body)}")
        a = 2 + kem1_pk_len
        return cls(body[0], body[1], bytes(body[2:a]), bytes(body[a:]))


@dataclass(frozen=True)
class ClientKeys:
    payload: bytes
    cred_kind: int | None = None
    credential: bytes = b""

    def to_bytes(self) -> bytes:
        if self.cred_kind is None:
            return self.payload
        return self.payload + struct.pack(">BH", self.cred_kind, len(self.credential)) + self.credential

    @classmethod
    def from_bytes(cls, body: bytes, payload_len: int, with_credential: bool) -> "ClientKeys":
        if not with_credential:
            if len(body) != payload_len:
                raise LengthMismatch(f"ClientKeys must be {payload_len} bytes, got {len(body)}")
            return cls(bytes(body))
        if len(body) < payload_len + 3:
            raise LengthMismatch("ClientKeys too short for payload and credential header")
        kind, n = struct.unpack_from(">BH", body, payload_len)
        if len(body) != payload_len + 3 + n:
            raise LengthMismatch("credential length does not match ClientKeys size")
        return cls(bytes(body[:payload_len]), kind, bytes(body[payload_len + 3:]))
