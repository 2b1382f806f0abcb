"""Two-flight handshake plus key confirmation.

    server                              client
    ServerHello(suite, mode, pk1, pk2) ->
                                    <- ClientKeys(payload [, credential])
    Confirm(MAC(k_conf, transcript))   ->

The server always speaks first. In Authenticated Mode the client is the
signing sender; in Deniable Mode it authenticates with the HMAC tag. Any
failure produces a :class:`HandshakeAbort` carrying a coarse reason code and
no key material.
"""

from __future__ import annotations

import enum
import hashlib
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .akem import (
    AkemKeyPair,
    AkemPublicKey,
    PhaseTimer,
    akem_keygen,
    auth_decaps,
    auth_encaps,
    den_decaps,
    den_encaps,
)
from .channel import DirectionKey
from .entropy import Entropy, default_entropy
from .errors import (
    AbortReason,
    ConfigInvalid,
    DecapsFailure,
    HandshakeAbort,
    Invalid,
    LengthMismatch,
    NotValid,
    UnknownScheme,
)
from .pki import Certificate, CertificateFormatError, verify_cert
from .suite import Mode, SuiteDescriptor, default_suite, get_suite, kdf_extract_expand, mac, mac_verify
from .suite.kdf import LABEL_CONFIRM, LABEL_REC_C2S, LABEL_REC_S2C
from .wire import CRED_CERTIFICATE, CRED_SUBJECT, MAGIC, VERSION, ClientKeys, ServerHello

DEFAULT_TIMEOUT_MS = 5000
CONFIRM_BYTES = 32


def _monotonic_ms() -> float:
    return time.monotonic() * 1000.0


@dataclass(frozen=True)
class HandshakeConfig:
    mode: Mode
    suite_id: int | None = None
    local_cert: Certificate | None = None
    local_sig_sk: bytes | None = field(default=None, repr=False)
    ca_pk: bytes | None = None
    ca_scheme: str | None = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    # False: send only the subject name; the server must already hold the cert
    send_certificate: bool = True
    known_clients: Mapping[str, Certificate] = field(default_factory=dict)
    now: Callable[[], int] = lambda: int(time.time())
    clock_ms: Callable[[], float] = _monotonic_ms

    @property
    def suite(self) -> SuiteDescriptor:
        if self.suite_id is None:
            return default_suite(Mode(self.mode))
        return get_suite(self.suite_id)

    def validate(self, role: str) -> SuiteDescriptor:
        try:
            mode = Mode(self.mode)
            suite = self.suite
        except (ValueError, UnknownScheme) as exc:
            raise ConfigInvalid(str(exc)) from None
        if suite.mode != mode:
            raise ConfigInvalid(f"suite {suite.name} does not run in {mode.name} mode")
        if not suite.available:
            raise ConfigInvalid(f"suite {suite.name} has no built signature scheme")
        if self.timeout_ms <= 0:
            raise ConfigInvalid("timeout_ms must be positive")
        if mode == Mode.AUTHENTICATED:
            if role == "client" and (self.local_cert is None or not self.local_sig_sk):
                raise ConfigInvalid("authenticated client needs local_cert and local_sig_sk")
            if role == "server" and not self.ca_pk:
                raise ConfigInvalid("authenticated server needs ca_pk")
        return suite


@dataclass(frozen=True, repr=False)
class DirectionalKeys:
    c2s_key: bytes
    c2s_iv: bytes
    s2c_key: bytes
    s2c_iv: bytes

    def __repr__(self):
        return "DirectionalKeys(<redacted>)"

    @property
    def c2s(self) -> DirectionKey:
        return DirectionKey(self.c2s_key, self.c2s_iv)

    @property
    def s2c(self) -> DirectionKey:
        return DirectionKey(self.s2c_key, self.s2c_iv)

    def sending(self, role: str) -> DirectionKey:
        return self.c2s if role == "client" else self.s2c

    def receiving(self, role: str) -> DirectionKey:
        return self.s2c if role == "client" else self.c2s

    def to_bytes(self) -> bytes:
        return self.c2s_key + self.c2s_iv + self.s2c_key + self.s2c_iv


def derive_directional_keys(k_sh: bytes, transcript_digest: bytes) -> DirectionalKeys:
    c2s = kdf_extract_expand(k_sh, transcript_digest, LABEL_REC_C2S, 32)
    s2c = kdf_extract_expand(k_sh, transcript_digest, LABEL_REC_S2C, 32)
    return DirectionalKeys(c2s[:16], c2s[16:], s2c[:16], s2c[16:])


def confirm_key(k_sh: bytes) -> bytes:
    return kdf_extract_expand(k_sh, b"", LABEL_CONFIRM, 32)


def transcript_digest(mode: int, hello_body: bytes, client_keys_body: bytes) -> bytes:
    h = hashlib.sha256()
    h.update(MAGIC)
    h.update(bytes([VERSION, mode]))
    h.update(hello_body)
    h.update(client_keys_body)
    return h.digest()


class State(enum.Enum):
    AWAIT_CLIENT_KEYS = "await-client-keys"
    AWAIT_CONFIRM = "await-confirm"
    ESTABLISHED = "established"
    ABORTED = "aborted"


@dataclass(frozen=True)
class Established:
    keys: DirectionalKeys
    transcript_digest: bytes
    mode: Mode
    suite_id: int
    peer: str | None = None


@dataclass(eq=False)
class ServerSession:
    config: HandshakeConfig
    suite: SuiteDescriptor
    ephemeral: AkemKeyPair
    hello_body: bytes
    started_ms: float
    state: State = State.AWAIT_CLIENT_KEYS
    phases: dict = field(default_factory=dict)

    def abort(self, reason: AbortReason, detail: str = "") -> HandshakeAbort:
        self.state = State.ABORTED
        self.ephemeral.wipe()
        return HandshakeAbort(reason, detail)


@dataclass(eq=False)
class ClientSession:
    config: HandshakeConfig
    suite: SuiteDescriptor
    transcript_digest: bytes
    started_ms: float
    _keys: DirectionalKeys | None = field(default=None, repr=False)
    _k_conf: bytes | None = field(default=None, repr=False)
    state: State = State.AWAIT_CONFIRM
    phases: dict = field(default_factory=dict)

    def abort(self, reason: AbortReason, detail: str = "") -> HandshakeAbort:
        self.state = State.ABORTED
        self._keys = None
        self._k_conf = None
        return HandshakeAbort(reason, detail)


def _phases(timer: PhaseTimer, into: dict) -> None:
    for k, v in timer.durations().items():
        into[k] = into.get(k, 0) + v


def abort_body(reason: AbortReason) -> bytes:
    return bytes([int(reason)])


def parse_abort(body: bytes) -> AbortReason:
    try:
        return AbortReason(body[0]) if len(body) == 1 else AbortReason.MALFORMED
    except ValueError:
        return AbortReason.MALFORMED


# -- server --

def server_hello(config: HandshakeConfig, rng: Entropy = default_entropy) -> tuple[bytes, ServerSession]:
    """Fresh ephemeral KEM keys; returns the ServerHello body and the session that owns the secrets."""
    suite = config.validate("server")
    timer = PhaseTimer()
    timer.mark("keygen")
    eph = akem_keygen(suite, rng)
    hello = ServerHello(suite.suite_id, int(suite.mode), eph.public.kem1_pk, eph.public.kem2_pk).to_bytes()
    timer.mark("end")
    session = ServerSession(config, suite, eph, hello, config.clock_ms())
    _phases(timer, session.phases)
    return hello, session


def _check_deadline(session, now_ms: float) -> None:
    if now_ms - session.started_ms > session.config.timeout_ms:
        raise session.abort(AbortReason.TIMEOUT, f"{now_ms - session.started_ms:.0f} ms elapsed")


def _client_certificate(config: HandshakeConfig, suite: SuiteDescriptor, ck: ClientKeys,
                        timer: PhaseTimer) -> Certificate:
    if ck.cred_kind == CRED_CERTIFICATE:
        try:
            cert = Certificate.from_bytes(ck.credential)
        except CertificateFormatError:
            raise HandshakeAbort(AbortReason.BAD_CERTIFICATE, "unparseable certificate") from None
    elif ck.cred_kind == CRED_SUBJECT:
        cert = config.known_clients.get(ck.credential.decode("utf-8", "replace"))
        if cert is None:
            raise HandshakeAbort(AbortReason.BAD_CERTIFICATE, "unknown pre-provisioned subject")
    else:
        raise HandshakeAbort(AbortReason.BAD_CERTIFICATE, f"unknown credential kind {ck.cred_kind}")
    timer.mark("cert_verify")
    status = verify_cert(config.ca_pk, cert, config.now(), config.ca_scheme, suite)
    if not status.ok:
        raise HandshakeAbort(AbortReason.BAD_CERTIFICATE, status.value)
    return cert


def server_finish(config: HandshakeConfig, session: ServerSession,
                  client_keys: bytes) -> tuple[bytes, Established]:
    """Authenticate the client flight and produce Confirm. Ephemeral secrets are wiped either way."""
    if session.state is not State.AWAIT_CLIENT_KEYS:
        raise HandshakeAbort(AbortReason.MALFORMED, f"session is {session.state.value}")
    _check_deadline(session, config.clock_ms())
    suite = session.suite
    timer = PhaseTimer()
    peer = None
    try:
        if suite.mode == Mode.DENIABLE:
            try:
                ck = ClientKeys.from_bytes(client_keys, suite.sizes.payload, with_credential=False)
            except LengthMismatch:
                raise HandshakeAbort(AbortReason.INVALID) from None
            secrets = den_decaps(session.ephemeral, None, ck.payload, suite, timer)
        else:
            try:
                ck = ClientKeys.from_bytes(client_keys, suite.sizes.payload, with_credential=True)
            except LengthMismatch:
                raise HandshakeAbort(AbortReason.NOT_VALID, "malformed ClientKeys") from None
            cert = _client_certificate(config, suite, ck, timer)
            peer = cert.subject
            sender = AkemPublicKey.signer(cert.sig_pk)
            secrets = auth_decaps(session.ephemeral, sender, ck.payload, suite, timer)
    except Invalid:
        raise session.abort(AbortReason.INVALID) from None
    except NotValid:
        raise session.abort(AbortReason.NOT_VALID) from None
    except DecapsFailure:
        raise session.abort(AbortReason.INVALID) from None
    except HandshakeAbort as exc:
        raise session.abort(exc.reason, exc.detail) from None
    finally:
        _phases(timer, session.phases)
    timer = PhaseTimer()
    timer.mark("confirm")
    digest = transcript_digest(int(suite.mode), session.hello_body, client_keys)
    keys = derive_directional_keys(secrets.k_sh, digest)
    confirm = mac(confirm_key(secrets.k_sh), digest)
    timer.mark("end")
    _phases(timer, session.phases)
    session.ephemeral.wipe()
    session.state = State.ESTABLISHED
    return confirm, Established(keys, digest, suite.mode, suite.suite_id, peer)


# -- client --

def client_respond(config: HandshakeConfig, hello: bytes,
                   rng: Entropy = default_entropy) -> tuple[bytes, ClientSession]:
    """Check the hello against local policy, encapsulate, and build ClientKeys."""
    suite = config.validate("client")
    try:
        suite_id, mode = ServerHello.peek(hello)
    except LengthMismatch:
        raise HandshakeAbort(AbortReason.MALFORMED, "short ServerHello") from None
    if mode != int(config.mode):
        raise HandshakeAbort(AbortReason.MODE_MISMATCH, f"server offers mode {mode}, client runs {int(config.mode)}")
    if suite_id != suite.suite_id:
        raise HandshakeAbort(AbortReason.UNSUPPORTED_SUITE, f"server offers suite 0x{suite_id:02x}")
    sz = suite.sizes
    try:
        sh = ServerHello.from_bytes(hello, sz.kem1_pk, sz.kem2_pk)
    except LengthMismatch as exc:
        raise HandshakeAbort(AbortReason.MALFORMED, str(exc)) from None
    receiver = AkemPublicKey(sh.kem1_pk, sh.kem2_pk)
    timer = PhaseTimer()
    try:
        if suite.mode == Mode.DENIABLE:
            payload, secrets = den_encaps(receiver, rng, suite, timer)
            body = ClientKeys(payload.to_bytes()).to_bytes()
        else:
            cert = config.local_cert
            sender = AkemPublicKey.signer(cert.sig_pk)
            payload, secrets = auth_encaps(config.local_sig_sk, sender, receiver, rng, suite, timer)
            if config.send_certificate:
                cred = ClientKeys(payload.to_bytes(), CRED_CERTIFICATE, cert.to_bytes())
            else:
                cred = ClientKeys(payload.to_bytes(), CRED_SUBJECT, cert.subject.encode("utf-8"))
            body = cred.to_bytes()
    except (LengthMismatch, DecapsFailure) as exc:
        # e.g. a server KEM key failing the ML-KEM modulus check
        raise HandshakeAbort(AbortReason.MALFORMED, str(exc)) from None
    timer.mark("confirm_prep")
    digest = transcript_digest(int(suite.mode), hello, body)
    keys = derive_directional_keys(secrets.k_sh, digest)
    k_conf = confirm_key(secrets.k_sh)
    timer.mark("end")
    session = ClientSession(config, suite, digest, config.clock_ms(), keys, k_conf)
    _phases(timer, session.phases)
    return body, session


def client_finish(session: ClientSession, confirm: bytes) -> Established:
    if session.state is not State.AWAIT_CONFIRM:
        raise HandshakeAbort(AbortReason.MALFORMED, f"session is {session.state.value}")
    _check_deadline(session, session.config.clock_ms())
    timer = PhaseTimer()
    timer.mark("confirm_verify")
    ok = len(confirm) == CONFIRM_BYTES and mac_verify(session._k_conf, session.transcript_digest, confirm)
    timer.mark("end")
    _phases(timer, session.phases)
    if not ok:
        raise session.abort(AbortReason.CONFIRM_FAILURE)
    keys = session._keys
    session._k_conf = None
    session.state = State.ESTABLISHED
    return Established(keys, session.transcript_digest, session.suite.mode, session.suite.suite_id)
