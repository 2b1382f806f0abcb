"""Print annotated hex for one pinned Deniable handshake and one sealed record.

The output is what docs/wire.md quotes. Rerunning it must give identical bytes.
"""

from amphikey.channel import TableAck, record_aad, record_nonce, seal_record
from amphikey.entropy import PinnedEntropy
from amphikey.handshake import (HandshakeConfig, abort_body, client_finish, client_respond,
                                server_finish, server_hello, transcript_digest)
from amphikey.errors import AbortReason
from amphikey.suite import Mode
from amphikey.wire import (MSG_ABORT, MSG_CLIENT_KEYS, MSG_CONFIRM, MSG_SERVER_HELLO, MSG_TABLE_ACK,
                           MSG_TABLE_DATA, encode_frame)


def hx(b: bytes, limit: int = 48) -> str:
    s = b[:limit].hex()
    return s + (f"...  ({len(b)} bytes)" if len(b) > limit else f"  ({len(b)} bytes)")


def main() -> None:
    cfg = HandshakeConfig(Mode.DENIABLE, 0x01)
    hello, ss = server_hello(cfg, PinnedEntropy("wire-doc/server"))
    ck, cs = client_respond(cfg, hello, PinnedEntropy("wire-doc/client"))
    confirm, s_est = server_finish(cfg, ss, ck)
    c_est = client_finish(cs, confirm)
    assert c_est.keys == s_est.keys

    print("ServerHello body:", hx(hello))
    print("  suite_id", hello[:1].hex(), " mode", hello[1:2].hex())
    print("  kem1_pk  ", hx(hello[2:1186], 16))
    print("  kem2_pk  ", hello[1186:].hex())
    frames = encode_frame(MSG_SERVER_HELLO, hello)
    print("ServerHello frames:", [len(f) for f in frames])
    for f in frames:
        print("  header", f[:13].hex())
    print("ClientKeys body:", hx(ck))
    print("  c1 ", hx(ck[:1088], 16))
    print("  c2 ", ck[1088:1120].hex())
    print("  tag", ck[1120:].hex())
    for f in encode_frame(MSG_CLIENT_KEYS, ck):
        print("  header", f[:13].hex())
    digest = transcript_digest(Mode.DENIABLE, hello, ck)
    print("transcript digest", digest.hex())
    print("Confirm frame", encode_frame(MSG_CONFIRM, confirm)[0].hex())
    print("Abort(INVALID) frame", encode_frame(MSG_ABORT, abort_body(AbortReason.INVALID))[0].hex())

    k = s_est.keys.c2s
    print("c2s key", bytes(k.key).hex(), " iv", bytes(k.iv).hex())
    body = b"\x00\x07" + b"meter table 0001"
    rec = seal_record(k, 0, body, MSG_TABLE_DATA)
    print("record nonce seq0", record_nonce(k.iv, 0).hex(), " seq5", record_nonce(k.iv, 5).hex())
    print("record aad", record_aad(MSG_TABLE_DATA, 0).hex())
    print("TableData frame", encode_frame(MSG_TABLE_DATA, rec)[0].hex())
    ack = seal_record(s_est.keys.s2c, 0, TableAck(7, 16).to_bytes(), MSG_TABLE_ACK)
    print("TableAck frame", encode_frame(MSG_TABLE_ACK, ack)[0].hex())


if __name__ == "__main__":
    main()
