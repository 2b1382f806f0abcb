import pytest

from amphikey.app.transport import MemoryTransport
from amphikey.channel import (SEQ_LIMIT, DirectionKey, SecureChannel, TableAck, open_record, receive_table,
                              record_aad, record_nonce, seal_record, transfer_table)
from amphikey.errors import ChannelError, ChannelErrorKind
from amphikey.handshake import DirectionalKeys
from amphikey.suite import ascon
from amphikey.wire import MSG_CLOSE, MSG_TABLE_ACK, MSG_TABLE_DATA

KEYS = DirectionalKeys(bytes(range(16)), bytes(range(16, 32)), bytes(range(32, 48)), bytes(range(48, 64)))
K = KEYS.c2s


def err(fn, *a, **kw):
    with pytest.raises(ChannelError) as ei:
        fn(*a, **kw)
    return ei.value.kind


def test_nonce_construction():
    iv = bytes.fromhex("00112233445566778899aabbccddeeff")
    assert record_nonce(iv, 0) == iv
    assert record_nonce(iv, 1).hex() == "00112233445566778899aabbccddeefe"
    assert record_nonce(iv, 0x0102)[:8] == iv[:8]
    assert record_aad(0x10, 5) == b"\x10" + (5).to_bytes(8, "big")


def test_nonces_unique():
    n = {record_nonce(K.iv, s) for s in range(20000)}
    n |= {record_nonce(K.iv, SEQ_LIMIT - 1 - s) for s in range(1000)}
    assert len(n) == 21000


def test_seal_matches_raw_ascon():
    rec = seal_record(K, 3, b"hello", MSG_TABLE_DATA)
    assert rec == ascon.seal(K.key, record_nonce(K.iv, 3), record_aad(MSG_TABLE_DATA, 3), b"hello")
    assert len(rec) == 5 + 16


def test_roundtrip_and_tamper():
    rec = seal_record(K, 0, b"table-bytes")
    assert open_record(K, 0, rec) == b"table-bytes"
    for pos in range(len(rec)):
        bad = bytearray(rec)
        bad[pos] ^= 1
        assert err(open_record, K, 0, bytes(bad)) is ChannelErrorKind.AUTH_FAILURE


def test_type_is_authenticated():
    rec = seal_record(K, 0, b"x", MSG_TABLE_DATA)
    assert err(open_record, K, 0, rec, MSG_TABLE_ACK) is ChannelErrorKind.AUTH_FAILURE


def test_directions_isolated():
    rec = seal_record(KEYS.c2s, 0, b"up")
    assert err(open_record, KEYS.s2c, 0, rec) is ChannelErrorKind.AUTH_FAILURE
    assert KEYS.sending("client") == KEYS.receiving("server")
    assert KEYS.sending("server") == KEYS.receiving("client")


@pytest.mark.parametrize("actual,expected", [(0, 1), (5, 3), (11, 12), (20, 12)])
def test_seq_mismatch(actual, expected):
    rec = seal_record(K, actual, b"r")
    assert err(open_record, K, expected, rec) is ChannelErrorKind.SEQ_MISMATCH


def test_far_seq_is_auth_failure():
    rec = seal_record(K, 100, b"r")
    assert err(open_record, K, 0, rec) is ChannelErrorKind.AUTH_FAILURE


def test_overflow():
    assert seal_record(K, SEQ_LIMIT - 1, b"last")
    assert err(seal_record, K, SEQ_LIMIT, b"x") is ChannelErrorKind.OVERFLOW
    assert err(open_record, K, SEQ_LIMIT, b"\x00" * 16) is ChannelErrorKind.OVERFLOW


def test_repr_redacted():
    assert K.key.hex() not in repr(K) and "redacted" in repr(KEYS)


def pair():
    a, b = MemoryTransport.pair()
    return SecureChannel(a, KEYS, "client"), SecureChannel(b, KEYS, "server"), a, b


def test_channel_counters_and_table():
    c, s, *_ = pair()
    c.send(MSG_TABLE_DATA, b"\x00\x01abc")
    assert s.recv(0) == (MSG_TABLE_DATA, b"\x00\x01abc")
    assert (c.send_seq, s.recv_seq) == (1, 1)
    c.send(MSG_TABLE_DATA, b"\x00\x09" + bytes(5000))
    assert receive_table(s, 0) == (9, bytes(5000))
    assert c.recv(0) == (MSG_TABLE_ACK, TableAck(9, 5000).to_bytes())
    c.close()
    assert receive_table(s, 0) is None and s.closed


def test_transfer_table_end_to_end():
    import threading
    c, s, *_ = pair()
    got = []
    t = threading.Thread(target=lambda: got.append(receive_table(s, 5)))
    t.start()
    ack = transfer_table(c, 4, b"readings", timeout=5)
    t.join()
    assert ack == TableAck(4, 8) and got == [(4, b"readings")]


def test_replayed_record_detected():
    c, s, a, b = pair()
    rec = seal_record(KEYS.c2s, 0, b"\x00\x01x")
    a.send_message(MSG_TABLE_DATA, rec)
    a.send_message(MSG_TABLE_DATA, rec)
    s.recv(0)
    assert err(s.recv, 0) is ChannelErrorKind.SEQ_MISMATCH


def test_dropped_record_detected():
    c, s, a, b = pair()
    seal_record(KEYS.c2s, 0, b"lost")
    a.send_message(MSG_TABLE_DATA, seal_record(KEYS.c2s, 1, b"\x00\x01x"))
    assert err(s.recv, 0) is ChannelErrorKind.SEQ_MISMATCH


def test_ack_mismatch():
    c, s, a, b = pair()
    c.send(MSG_TABLE_DATA, b"\x00\x02abc")
    s.recv(0)
    s.send(MSG_TABLE_ACK, TableAck(2, 99).to_bytes())
    from amphikey.channel import await_ack
    assert err(await_ack, c, 2, 3, 0) is ChannelErrorKind.AUTH_FAILURE


def test_close_is_sealed():
    c, s, a, b = pair()
    c.close()
    c.close()  # idempotent
    assert s.recv(0) == (MSG_CLOSE, b"")
    assert c.send_seq == 1


def test_table_id_range():
    c, *_ = pair()
    from amphikey.channel import send_table
    with pytest.raises(ValueError):
        send_table(c, 70000, b"")


def test_direction_key_type():
    assert isinstance(KEYS.c2s, DirectionKey)
