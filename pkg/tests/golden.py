"""Pinned-entropy handshakes whose bytes are frozen under testdata/golden/.

Run ``python3 tests/golden.py`` to rewrite the file after an intended
format change; the tests compare against the committed copy.
"""

import hashlib
import json
import sys

from amphikey import HandshakeConfig, Mode, PinnedEntropy, client_finish, client_respond, server_finish, server_hello
from amphikey.pki import issue_cert
from amphikey.suite import sig_keygen

from vectors import DATA

GOLDEN = DATA / "golden" / "handshakes.json"
NOW = 1_760_000_000


def _sha(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


def configs(mode: Mode):
    if mode == Mode.DENIABLE:
        cfg = HandshakeConfig(mode, 0x01, now=lambda: NOW)
        return cfg, cfg
    rng = PinnedEntropy("golden/pki")
    with sig_keygen("Dilithium3", rng) as ca, sig_keygen("Dilithium3", rng) as meter:
        cert = issue_cert(bytes(ca.secret), "meter-golden", meter.public, (NOW - 10, NOW + 10))
        server = HandshakeConfig(mode, 0x02, ca_pk=ca.public, now=lambda: NOW)
        client = HandshakeConfig(mode, 0x02, local_cert=cert, local_sig_sk=bytes(meter.secret), now=lambda: NOW)
    return server, client


def server_rng(mode: Mode) -> PinnedEntropy:
    return PinnedEntropy(f"golden/{mode.name.lower()}/server")


def transcript(mode: Mode):
    """(hello, client_keys, confirm, server Established) for the pinned run."""
    s_cfg, c_cfg = configs(mode)
    hello, ss = server_hello(s_cfg, server_rng(mode))
    ck, cs = client_respond(c_cfg, hello, PinnedEntropy(f"golden/{mode.name.lower()}/client"))
    confirm, est = server_finish(s_cfg, ss, ck)
    c_est = client_finish(cs, confirm)
    assert c_est.keys == est.keys
    return hello, ck, confirm, est


def run(mode: Mode) -> dict:
    tag = mode.name.lower()
    hello, ck, confirm, est = transcript(mode)
    k = est.keys
    return {
        "mode": tag,
        "hello_sha256": _sha(hello),
        "hello_head": hello[:40].hex(),
        "client_keys_len": len(ck),
        "client_keys_sha256": _sha(ck),
        "confirm": confirm.hex(),
        "transcript_digest": est.transcript_digest.hex(),
        "c2s": (k.c2s_key + k.c2s_iv).hex(),
        "s2c": (k.s2c_key + k.s2c_iv).hex(),
    }


def build() -> dict:
    return {m.name.lower(): run(m) for m in (Mode.DENIABLE, Mode.AUTHENTICATED)}


if __name__ == "__main__":
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(json.dumps(build(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {GOLDEN}", file=sys.stderr)
