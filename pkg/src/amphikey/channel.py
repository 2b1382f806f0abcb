"""Ascon-128a record layer over an established handshake.

Each direction has its own key and base IV. Record ``seq`` is implicit:
nonce = iv XOR seq (seq in the low 8 bytes) and aad = msg_type || seq.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Protocol

from .errors import AuthFailure, ChannelError, ChannelErrorKind
from .suite import aead_open, aead_seal
from .wire import MSG_CLOSE, MSG_TABLE_ACK, MSG_TABLE_DATA

SEQ_LIMIT = 1 << 48
# how far either side of expected_seq we probe to tell reorder/replay from forgery
SEQ_PROBE = 8


@dataclass(frozen=True, repr=False)
class DirectionKey:
    key: bytes
    iv: bytes

    def __repr__(self):
        return "DirectionKey(<redacted>)"


def record_nonce(iv: bytes, seq: int) -> bytes:
    if not 0 <= seq < 1 << 64:
        raise ValueError("seq out of range")
    low = int.from_bytes(iv[8:], "big") ^ seq
    return iv[:8] + low.to_bytes(8, "big")


def record_aad(msg_type: int, seq: int) -> bytes:
    return struct.pack(">BQ", msg_type, seq)


def _check_seq(seq: int) -> None:
    if seq >= SEQ_LIMIT:
        raise ChannelError(ChannelErrorKind.OVERFLOW, f"sequence {seq} reached the 2^48 limit")


def seal_record(keys: DirectionKey, seq: int, plaintext: bytes, msg_type: int = MSG_TABLE_DATA) -> bytes:
    _check_seq(seq)
    return aead_seal(keys.key, record_nonce(keys.iv, seq), record_aad(msg_type, seq), plaintext)


def _try_open(keys: DirectionKey, seq: int, record: bytes, msg_type: int) -> bytes | None:
    try:
        return aead_open(keys.key, record_nonce(keys.iv, seq), record_aad(msg_type, seq), record)
    except AuthFailure:
        return None


def open_record(keys: DirectionKey, expected_seq: int, record: bytes,
                msg_type: int = MSG_TABLE_DATA) -> bytes:
    """Open a record that must carry exactly ``expected_seq``.

    A record that authenticates under a nearby sequence number is reported as
    SeqMismatch (replayed or reordered); anything else is AuthFailure. Either
    way no plaintext escapes.
    """
    _check_seq(expected_seq)
    pt = _try_open(keys, expected_seq, record, msg_type)
    if pt is not None:
        return pt
    lo = max(0, expected_seq - SEQ_PROBE)
    hi = min(SEQ_LIMIT - 1, expected_seq + SEQ_PROBE)
    for s in range(lo, hi + 1):
        if s != expected_seq and _try_open(keys, s, record, msg_type) is not None:
            raise ChannelError(ChannelErrorKind.SEQ_MISMATCH, f"record carries seq {s}, expected {expected_seq}")
    raise ChannelError(ChannelErrorKind.AUTH_FAILURE, "record failed authentication")


class MessageTransport(Protocol):
    def send_message(self, msg_type: int, payload: bytes) -> None: ...
    def recv_message(self, timeout: float | None = None) -> tuple[int, bytes]: ...


class SecureChannel:
    """Sealed message stream over a transport. Send and receive sides keep separate counters."""

    def __init__(self, transport: MessageTransport, keys, role: str):
        if role not in ("client", "server"):
            raise ValueError("role must be 'client' or 'server'")
        self.transport = transport
        self.role = role
        self._tx = keys.sending(role)
        self._rx = keys.receiving(role)
        self.send_seq = 0
        self.recv_seq = 0
        self.closed = False

    def send(self, msg_type: int, plaintext: bytes) -> None:
        record = seal_record(self._tx, self.send_seq, plaintext, msg_type)
        self.transport.send_message(msg_type, record)
        self.send_seq += 1

    def recv(self, timeout: float | None = None) -> tuple[int, bytes]:
        msg_type, record = self.transport.recv_message(timeout)
        plaintext = open_record(self._rx, self.recv_seq, record, msg_type)
        self.recv_seq += 1
        if msg_type == MSG_CLOSE:
            self.closed = True
        return msg_type, plaintext

    def close(self) -> None:
        if not self.closed:
            self.send(MSG_CLOSE, b"")
            self.closed = True


@dataclass(frozen=True)
class TableAck:
    table_id: int
    count: int

    def to_bytes(self) -> bytes:
        return struct.pack(">HI", self.table_id, self.count)

    @classmethod
    def from_bytes(cls, data: bytes) -> "TableAck":
        if len(data) != 6:
            raise ChannelError(ChannelErrorKind.AUTH_FAILURE, "malformed table ack")
        return cls(*struct.unpack(">HI", data))


def send_table(channel: SecureChannel, table_id: int, table_bytes: bytes) -> None:
    if not 0 <= table_id <= 0xFFFF:
        raise ValueError("table_id is a u16")
    channel.send(MSG_TABLE_DATA, struct.pack(">H", table_id) + bytes(table_bytes))


def await_ack(channel: SecureChannel, table_id: int, count: int, timeout: float | None = None) -> TableAck:
    msg_type, body = channel.recv(timeout)
    if msg_type != MSG_TABLE_ACK:
        raise ChannelError(ChannelErrorKind.AUTH_FAILURE, f"expected table ack, got msg_type 0x{msg_type:02x}")
    ack = TableAck.from_bytes(body)
    if ack != TableAck(table_id, count):
        raise ChannelError(ChannelErrorKind.AUTH_FAILURE, f"ack {ack} does not match table {table_id}/{count}")
    return ack


def transfer_table(channel: SecureChannel, table_id: int, table_bytes: bytes,
                   timeout: float | None = None) -> TableAck:
    """Send a table and block until the peer's sealed ack arrives."""
    send_table(channel, table_id, table_bytes)
    return await_ack(channel, table_id, len(table_bytes), timeout)


def receive_table(channel: SecureChannel, timeout: float | None = None,
                  on_table=None) -> tuple[int, bytes] | None:
    """Peer side: read one table and ack it. Returns None when the peer closed instead.

    ``on_table(table_id, data)`` runs before the ack goes out, so an acked table is always stored.
    """
    msg_type, body = channel.recv(timeout)
    if msg_type == MSG_CLOSE:
        return None
    if msg_type != MSG_TABLE_DATA or len(body) < 2:
        raise ChannelError(ChannelErrorKind.AUTH_FAILURE, f"unexpected record type 0x{msg_type:02x}")
    (table_id,) = struct.unpack_from(">H", body)
    data = body[2:]
    if on_table is not None:
        on_table(table_id, data)
    channel.send(MSG_TABLE_ACK, TableAck(table_id, len(data)).to_bytes())
    return table_id, data
