import hashlib
import json

import pytest

from amphikey import (AUTH_1, DEN_1, AbortReason, HandshakeAbort, HandshakeConfig, Mode, PinnedEntropy,
                      SystemEntropy, client_finish, client_respond, server_finish, server_hello)
from amphikey.errors import ConfigInvalid
from amphikey.handshake import State, abort_body, parse_abort
from amphikey.pki import issue_cert
from amphikey.suite import sig_keygen

import golden
import oracle

NOW = 1_760_000_000


class Clock:
    def __init__(self):
        self.t = 0.0

    def __call__(self):
        return self.t


@pytest.fixture(scope="module")
def pki():
    rng = PinnedEntropy("hs/pki")
    ca = sig_keygen("Dilithium3", rng)
    meter = sig_keygen("Dilithium3", rng)
    cert = issue_cert(bytes(ca.secret), "meter-9", meter.public, (NOW - 100, NOW + 100))
    yield ca, meter, cert


def cfgs(mode, pki=None, **kw):
    if mode == Mode.DENIABLE:
        return HandshakeConfig(mode, 0x01, **kw), HandshakeConfig(mode, 0x01, **kw)
    ca, meter, cert = pki
    return (HandshakeConfig(mode, 0x02, ca_pk=ca.public, now=lambda: NOW, **kw),
            HandshakeConfig(mode, 0x02, local_cert=cert, local_sig_sk=bytes(meter.secret), now=lambda: NOW, **kw))


def full(s_cfg, c_cfg, rng=None):
    rng = rng or SystemEntropy()
    hello, ss = server_hello(s_cfg, rng)
    ck, cs = client_respond(c_cfg, hello, rng)
    confirm, s_est = server_finish(s_cfg, ss, ck)
    return s_est, client_finish(cs, confirm), (hello, ck, confirm, ss, cs)


# -- golden and oracle --

def test_golden_transcripts_frozen():
    assert golden.build() == json.loads(golden.GOLDEN.read_text())


@pytest.mark.parametrize("mode", [Mode.DENIABLE, Mode.AUTHENTICATED])
def test_golden_keys_match_oracle(mode):
    """Recompute the whole schedule from the wire bytes with OpenSSL and stdlib only."""
    hello, ck, confirm, est = golden.transcript(mode)
    rng = golden.server_rng(mode)
    kem_seed, x_sk = rng.random_bytes(64), rng.random_bytes(32)
    kem1_pk, kem2_pk = hello[2:1186], hello[1186:1218]
    c1, c2 = ck[:1088], ck[1088:1120]
    k1 = oracle.mlkem_decaps_openssl(kem_seed, c1)
    k2 = oracle.x25519_shared(x_sk, c2)
    if mode == Mode.DENIABLE:
        *_, tag, k_sh = oracle.deniable(k1, k2, c1, c2, kem1_pk, kem2_pk)
        assert ck[1120:] == tag
    else:
        sig = ck[1120:4413]
        cert_pk = golden.configs(mode)[1].local_cert.sig_pk
        k_sh = oracle.authenticated(k1, k2, c1 + c2, sig, kem1_pk + kem2_pk, cert_pk)
    digest = hashlib.sha256(b"AMPH\x01" + bytes([int(mode)]) + hello + ck).digest()
    c2s, s2c, conf = oracle.records(k_sh, digest)
    assert est.transcript_digest == digest
    assert c2s == est.keys.c2s_key + est.keys.c2s_iv
    assert s2c == est.keys.s2c_key + est.keys.s2c_iv
    assert conf == confirm


# -- agreement --

@pytest.mark.parametrize("mode", [Mode.DENIABLE, Mode.AUTHENTICATED])
def test_agreement(mode, pki):
    for _ in range(5):
        s, c, _ = full(*cfgs(mode, pki))
        assert s.keys == c.keys and s.transcript_digest == c.transcript_digest
        assert s.keys.c2s_key != s.keys.s2c_key and s.keys.c2s_iv != s.keys.s2c_iv
    if mode == Mode.AUTHENTICATED:
        assert s.peer == "meter-9"


def test_sessions_differ():
    s_cfg, c_cfg = cfgs(Mode.DENIABLE)
    a, _, _ = full(s_cfg, c_cfg)
    b, _, _ = full(s_cfg, c_cfg)
    assert a.keys != b.keys


def test_message_sizes(pki):
    _, _, (hello, ck, confirm, *_) = full(*cfgs(Mode.DENIABLE))
    assert (len(hello), len(ck), len(confirm)) == (1218, 1152, 32)
    _, _, (hello, ck, *_) = full(*cfgs(Mode.AUTHENTICATED, pki))
    assert len(hello) == 1218 and ck[4413] == 0x01


# -- downgrade --

@pytest.mark.parametrize("mode", [Mode.DENIABLE, Mode.AUTHENTICATED])
def test_downgrade_grid_exhaustive(mode, pki):
    """Every (suite byte, mode byte) rewrite of the hello is refused except the genuine one."""
    s_cfg, c_cfg = cfgs(mode, pki)
    hello, _ = server_hello(s_cfg, PinnedEntropy("grid"))
    genuine = (hello[0], hello[1])
    seen = {}
    for sb in range(256):
        for mb in range(256):
            if (sb, mb) == genuine:
                continue
            with pytest.raises(HandshakeAbort) as ei:
                client_respond(c_cfg, bytes([sb, mb]) + hello[2:], PinnedEntropy(1))
            want = AbortReason.MODE_MISMATCH if mb != int(mode) else AbortReason.UNSUPPORTED_SUITE
            assert ei.value.reason == want
            seen[want] = seen.get(want, 0) + 1
    assert seen == {AbortReason.MODE_MISMATCH: 255 * 256, AbortReason.UNSUPPORTED_SUITE: 255}


def test_mode_mismatch_between_configs(pki):
    s_cfg, _ = cfgs(Mode.AUTHENTICATED, pki)
    _, c_cfg = cfgs(Mode.DENIABLE)
    hello, _ = server_hello(s_cfg, PinnedEntropy(2))
    with pytest.raises(HandshakeAbort) as ei:
        client_respond(c_cfg, hello, PinnedEntropy(3))
    assert ei.value.reason == AbortReason.MODE_MISMATCH


# -- replay --

def test_deniable_replayed_clientkeys_rejected():
    s_cfg, c_cfg = cfgs(Mode.DENIABLE)
    _, _, (hello, ck, *_) = full(s_cfg, c_cfg)
    _, fresh = server_hello(s_cfg, SystemEntropy())
    with pytest.raises(HandshakeAbort) as ei:
        server_finish(s_cfg, fresh, ck)
    assert ei.value.reason == AbortReason.INVALID
    assert fresh.state is State.ABORTED and fresh.ephemeral.wiped


def test_auth_replay_yields_unrelated_keys(pki):
    """The old signature still verifies, but the fresh ephemeral keys decapsulate to other secrets."""
    s_cfg, c_cfg = cfgs(Mode.AUTHENTICATED, pki)
    old, _, (hello, ck, *_) = full(s_cfg, c_cfg)
    _, fresh = server_hello(s_cfg, SystemEntropy())
    _, replayed = server_finish(s_cfg, fresh, ck)
    assert replayed.keys != old.keys


def test_replayed_confirm_rejected():
    s_cfg, c_cfg = cfgs(Mode.DENIABLE)
    _, _, (_, _, confirm, *_) = full(s_cfg, c_cfg)
    hello, ss = server_hello(s_cfg, SystemEntropy())
    _, cs = client_respond(c_cfg, hello, SystemEntropy())
    with pytest.raises(HandshakeAbort) as ei:
        client_finish(cs, confirm)
    assert ei.value.reason == AbortReason.CONFIRM_FAILURE
    assert cs._keys is None


def test_session_single_use():
    s_cfg, c_cfg = cfgs(Mode.DENIABLE)
    _, _, (hello, ck, confirm, ss, cs) = full(s_cfg, c_cfg)
    with pytest.raises(HandshakeAbort):
        server_finish(s_cfg, ss, ck)
    with pytest.raises(HandshakeAbort):
        client_finish(cs, confirm)


# -- forward secrecy, structurally --

def test_no_long_term_secret_enters_any_kdf(monkeypatch, pki):
    import amphikey.akem
    import amphikey.handshake

    seen = []
    real = amphikey.akem.kdf_extract_expand

    def spy(ikm, salt, info, n):
        seen.append(bytes(ikm) + bytes(salt))
        return real(ikm, salt, info, n)

    monkeypatch.setattr(amphikey.akem, "kdf_extract_expand", spy)
    monkeypatch.setattr(amphikey.handshake, "kdf_extract_expand", spy)
    ca, meter, _ = pki
    s, c, (hello, ck, confirm, ss, cs) = full(*cfgs(Mode.AUTHENTICATED, pki))
    assert len(seen) >= 5
    # sk = rho | K | tr | s1 | s2 | t0; rho and tr are public, so probe K and s1/s2
    probes = [bytes(meter.secret)[i:i + 32] for i in (32, 150, 500)] + [bytes(ca.secret)[32:64]]
    for blob in seen:
        for p in probes:
            assert p not in blob
    # what does go in is ephemeral and gone afterwards
    assert ss.ephemeral.wiped and cs._k_conf is None


def test_server_ephemeral_wiped_on_abort():
    s_cfg, _ = cfgs(Mode.DENIABLE)
    _, ss = server_hello(s_cfg, SystemEntropy())
    with pytest.raises(HandshakeAbort):
        server_finish(s_cfg, ss, bytes(1152))
    assert ss.ephemeral.wiped


# -- errors --

@pytest.mark.parametrize("mode,n,reason", [
    (Mode.DENIABLE, 1151, AbortReason.INVALID),
    (Mode.DENIABLE, 1153, AbortReason.INVALID),
    (Mode.AUTHENTICATED, 4413, AbortReason.NOT_VALID),
    (Mode.AUTHENTICATED, 100, AbortReason.NOT_VALID),
])
def test_bad_clientkeys_length(mode, n, reason, pki):
    s_cfg, _ = cfgs(mode, pki)
    _, ss = server_hello(s_cfg, SystemEntropy())
    with pytest.raises(HandshakeAbort) as ei:
        server_finish(s_cfg, ss, bytes(n))
    assert ei.value.reason == reason


def test_server_timeout():
    clock = Clock()
    s_cfg, c_cfg = cfgs(Mode.DENIABLE, clock_ms=clock, timeout_ms=5000)
    hello, ss = server_hello(s_cfg, SystemEntropy())
    ck, _ = client_respond(c_cfg, hello, SystemEntropy())
    clock.t = 5001
    with pytest.raises(HandshakeAbort) as ei:
        server_finish(s_cfg, ss, ck)
    assert ei.value.reason == AbortReason.TIMEOUT


def test_within_timeout_is_fine():
    clock = Clock()
    s_cfg, c_cfg = cfgs(Mode.DENIABLE, clock_ms=clock, timeout_ms=5000)
    hello, ss = server_hello(s_cfg, SystemEntropy())
    ck, cs = client_respond(c_cfg, hello, SystemEntropy())
    clock.t = 200
    confirm, _ = server_finish(s_cfg, ss, ck)
    assert client_finish(cs, confirm)


def _auth_with_cert(pki, cert):
    ca, meter, _ = pki
    s_cfg = HandshakeConfig(Mode.AUTHENTICATED, 0x02, ca_pk=ca.public, now=lambda: NOW)
    c_cfg = HandshakeConfig(Mode.AUTHENTICATED, 0x02, local_cert=cert, local_sig_sk=bytes(meter.secret),
                            now=lambda: NOW)
    return s_cfg, c_cfg


def test_rogue_ca_cert(pki):
    ca, meter, _ = pki
    with sig_keygen("Dilithium3", PinnedEntropy("rogue")) as rogue:
        cert = issue_cert(bytes(rogue.secret), "meter-9", meter.public, (NOW - 1, NOW + 1))
    with pytest.raises(HandshakeAbort) as ei:
        full(*_auth_with_cert(pki, cert))
    assert ei.value.reason == AbortReason.BAD_CERTIFICATE


def test_expired_cert(pki):
    ca, meter, _ = pki
    cert = issue_cert(bytes(ca.secret), "meter-9", meter.public, (NOW - 100, NOW - 1))
    with pytest.raises(HandshakeAbort) as ei:
        full(*_auth_with_cert(pki, cert))
    assert ei.value.reason == AbortReason.BAD_CERTIFICATE and ei.value.detail == "Expired"


def test_cert_for_other_key(pki):
    """A valid certificate, but for a key the client does not hold: the signature check fails."""
    ca, _, _ = pki
    with sig_keygen("Dilithium3", PinnedEntropy("other-key")) as other:
        cert = issue_cert(bytes(ca.secret), "meter-9", other.public, (NOW - 1, NOW + 1))
    with pytest.raises(HandshakeAbort) as ei:
        full(*_auth_with_cert(pki, cert))
    assert ei.value.reason == AbortReason.NOT_VALID


def test_subject_only_credentials(pki):
    ca, meter, cert = pki
    s_cfg = HandshakeConfig(Mode.AUTHENTICATED, 0x02, ca_pk=ca.public, now=lambda: NOW,
                            known_clients={"meter-9": cert})
    c_cfg = HandshakeConfig(Mode.AUTHENTICATED, 0x02, local_cert=cert, local_sig_sk=bytes(meter.secret),
                            now=lambda: NOW, send_certificate=False)
    s, c, (_, ck, *_) = full(s_cfg, c_cfg)
    assert s.keys == c.keys and s.peer == "meter-9" and ck[4413] == 0x02
    s_cfg = HandshakeConfig(Mode.AUTHENTICATED, 0x02, ca_pk=ca.public, now=lambda: NOW)
    with pytest.raises(HandshakeAbort) as ei:
        full(s_cfg, c_cfg)
    assert ei.value.reason == AbortReason.BAD_CERTIFICATE


def test_malformed_server_key():
    _, c_cfg = cfgs(Mode.DENIABLE)
    s_cfg, _ = cfgs(Mode.DENIABLE)
    hello, _ = server_hello(s_cfg, SystemEntropy())
    bad = hello[:2] + b"\xff" * 1184 + hello[1186:]  # coefficients above q
    with pytest.raises(HandshakeAbort) as ei:
        client_respond(c_cfg, bad, SystemEntropy())
    assert ei.value.reason == AbortReason.MALFORMED
    with pytest.raises(HandshakeAbort) as ei:
        client_respond(c_cfg, hello[:100], SystemEntropy())
    assert ei.value.reason == AbortReason.MALFORMED


@pytest.mark.parametrize("kw,role", [
    (dict(mode=Mode.DENIABLE, suite_id=0x02), "server"),
    (dict(mode=Mode.AUTHENTICATED, suite_id=0x02), "server"),
    (dict(mode=Mode.AUTHENTICATED, suite_id=0x02, ca_pk=b"x"), "client"),
    (dict(mode=Mode.AUTHENTICATED, suite_id=0x03, ca_pk=b"x"), "server"),
    (dict(mode=Mode.DENIABLE, suite_id=0x77), "server"),
    (dict(mode=Mode.DENIABLE, timeout_ms=0), "client"),
])
def test_config_validation(kw, role):
    with pytest.raises(ConfigInvalid):
        HandshakeConfig(**kw).validate(role)


def test_abort_body_roundtrip():
    for r in AbortReason:
        assert parse_abort(abort_body(r)) == r
    assert parse_abort(b"") == AbortReason.MALFORMED
    assert parse_abort(b"\x00") == AbortReason.MALFORMED
    assert parse_abort(b"\x01\x02") == AbortReason.MALFORMED


def test_default_suites():
    assert HandshakeConfig(Mode.DENIABLE).suite == DEN_1
    assert HandshakeConfig(Mode.AUTHENTICATED).suite == AUTH_1
