"""Hybrid AKEM combiners: Authenticated Mode, Deniable Mode and the simulator.

Both modes encapsulate twice, once with ML-KEM-768 (k1, c1) and once with
X25519 (k2, c2). Authenticated Mode signs c = c1||c2 with the sender's
long-term key. Deniable Mode instead MACs c under a key both sides can
compute from (k1, c1, n), so the receiver can produce the same tag itself.

Every HKDF call uses an empty salt and a distinct info label; see
:mod:`amphikey.suite.kdf` for the label set.
"""

from __future__ import annotations

import hmac
import time
from dataclasses import dataclass, field

from .entropy import Entropy
from .errors import DecapsFailure, Invalid, LengthMismatch, NotValid
from .suite import (
    AUTH_1,
    DEN_1,
    Mode,
    SuiteDescriptor,
    get_suite,
    kdf_extract_expand,
    kem_decaps,
    kem_encaps,
    kem_keygen,
    mac,
    sig_keygen,
    sig_sign,
    sig_verify,
)
from .suite.kdf import LABEL_AUTH_KSH, LABEL_DEN_KAUTH, LABEL_DEN_KSH, LABEL_DEN_NONCE

NONCE_BYTES = 16
KEY_BYTES = 32


class PhaseTimer:
    """Records wall time between named marks; also usable as a trace of steps."""

    def __init__(self):
        self.marks: list[tuple[str, int]] = []

    def mark(self, name: str) -> None:
        self.marks.append((name, time.perf_counter_ns()))

    @property
    def names(self) -> list[str]:
        return [m[0] for m in self.marks]

    def durations(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (name, t0), (_, t1) in zip(self.marks, self.marks[1:]):
            if name != "end":
                out[name] = out.get(name, 0) + (t1 - t0)
        return out


def _mark(timer: PhaseTimer | None, name: str) -> None:
    if timer is not None:
        timer.mark(name)


# -- types --

@dataclass(frozen=True)
class AkemPublicKey:
    """Public bundle kem1_pk || kem2_pk [|| sig_pk].

    A signer-only bundle (empty KEM fields) describes a sender whose only
    long-term key is its signature key, which is the handshake client's case.
    """

    kem1_pk: bytes
    kem2_pk: bytes
    sig_pk: bytes | None = None

    @classmethod
    def signer(cls, sig_pk: bytes) -> "AkemPublicKey":
        return cls(b"", b"", bytes(sig_pk))

    @property
    def has_kems(self) -> bool:
        return bool(self.kem1_pk or self.kem2_pk)

    def to_bytes(self) -> bytes:
        return self.kem1_pk + self.kem2_pk + (self.sig_pk or b"")

    @classmethod
    def from_bytes(cls, data: bytes, suite: SuiteDescriptor | int = DEN_1) -> "AkemPublicKey":
        sz = get_suite(suite).sizes
        if len(data) != sz.public_bundle:
            raise LengthMismatch(f"public bundle must be {sz.public_bundle} bytes, got {len(data)}")
        a, b = sz.kem1_pk, sz.kem1_pk + sz.kem2_pk
        return cls(bytes(data[:a]), bytes(data[a:b]), bytes(data[b:]) or None)

    def check_receiver(self, suite: SuiteDescriptor) -> None:
        sz = suite.sizes
        if len(self.kem1_pk) != sz.kem1_pk or len(self.kem2_pk) != sz.kem2_pk:
            raise LengthMismatch("receiver bundle must carry both KEM public keys")


@dataclass(eq=False)
class AkemKeyPair:
    public: AkemPublicKey
    kem1_sk: bytearray = field(repr=False)
    kem2_sk: bytearray = field(repr=False)
    sig_sk: bytearray | None = field(default=None, repr=False)

    def wipe(self) -> None:
        for buf in (self.kem1_sk, self.kem2_sk, self.sig_sk):
            if buf is not None:
                buf[:] = bytes(len(buf))

    @property
    def wiped(self) -> bool:
        return not any(self.kem1_sk) and not any(self.kem2_sk) and not any(self.sig_sk or b"")


@dataclass(frozen=True)
class AkemPayload:
    c1: bytes
    c2: bytes
    auth: bytes  # 32-byte tag (Deniable) or signature (Authenticated)

    @property
    def c(self) -> bytes:
        return self.c1 + self.c2

    def to_bytes(self) -> bytes:
        return self.c1 + self.c2 + self.auth

    def __len__(self) -> int:
        return len(self.c1) + len(self.c2) + len(self.auth)

    @classmethod
    def from_bytes(cls, data: bytes, suite: SuiteDescriptor | int = DEN_1) -> "AkemPayload":
        sz = get_suite(suite).sizes
        if len(data) != sz.payload:
            raise LengthMismatch(f"payload must be {sz.payload} bytes, got {len(data)}")
        a, b = sz.kem1_ct, sz.kem1_ct + sz.kem2_ct
        return cls(bytes(data[:a]), bytes(data[a:b]), bytes(data[b:]))


@dataclass(frozen=True, repr=False)
class SessionSecrets:
    k1: bytes
    k2: bytes
    k_sh: bytes
    n: bytes | None = None
    k_auth: bytes | None = None

    def __repr__(self):
        return "SessionSecrets(<redacted>)"


def akem_keygen(suite: SuiteDescriptor | int, rng: Entropy, signing: bool = False) -> AkemKeyPair:
    """Fresh KEM key pairs, plus a signature key pair when ``signing``."""
    suite = get_suite(suite)
    kp1 = kem_keygen(suite.kem1_name, rng)
    kp2 = kem_keygen(suite.kem2_name, rng)
    sig_pk = sig_sk = None
    if signing:
        skp = sig_keygen(suite.sig_name, rng)
        sig_pk, sig_sk = skp.public, bytearray(skp.secret)
        skp.wipe()
    pair = AkemKeyPair(AkemPublicKey(kp1.public, kp2.public, sig_pk),
                       bytearray(kp1.secret), bytearray(kp2.secret), sig_sk)
    kp1.wipe()
    kp2.wipe()
    return pair


# -- Deniable Mode --

def _kdf(ikm: bytes, label: bytes, n: int = KEY_BYTES) -> bytes:
    return kdf_extract_expand(ikm, b"", label, n)


def _den_secrets(k1: bytes, k2: bytes, c1: bytes, c2: bytes, receiver_pub: AkemPublicKey,
                 timer: PhaseTimer | None = None) -> tuple[bytes, SessionSecrets]:
    _mark(timer, "kdf")
    n = _kdf(k1 + k2, LABEL_DEN_NONCE)[:NONCE_BYTES]
    k_auth = _kdf(k1 + c1 + n, LABEL_DEN_KAUTH)
    _mark(timer, "tag")
    tag = mac(k_auth, c1 + c2)
    _mark(timer, "kdf")
    # deliberately no sender public key here
    k_sh = _kdf(k1 + k2 + c1 + c2 + n + receiver_pub.kem1_pk + receiver_pub.kem2_pk, LABEL_DEN_KSH)
    return tag, SessionSecrets(k1, k2, k_sh, n, k_auth)


def den_encaps(receiver_pub: AkemPublicKey, rng: Entropy, suite: SuiteDescriptor | int = DEN_1,
               timer: PhaseTimer | None = None) -> tuple[AkemPayload, SessionSecrets]:
    suite = get_suite(suite)
    receiver_pub.check_receiver(suite)
    _mark(timer, "kem1_encaps")
    c1, k1 = kem_encaps(suite.kem1_name, receiver_pub.kem1_pk, rng)
    _mark(timer, "kem2_encaps")
    c2, k2 = kem_encaps(suite.kem2_name, receiver_pub.kem2_pk, rng)
    tag, secrets = _den_secrets(k1, k2, c1, c2, receiver_pub, timer)
    _mark(timer, "end")
    return AkemPayload(c1, c2, tag), secrets


def _den_open(receiver: AkemKeyPair, c1: bytes, c2: bytes, suite: SuiteDescriptor,
              timer: PhaseTimer | None) -> tuple[bytes, SessionSecrets]:
    try:
        _mark(timer, "kem1_decaps")
        k1 = kem_decaps(suite.kem1_name, receiver.kem1_sk, c1)
        _mark(timer, "kem2_decaps")
        k2 = kem_decaps(suite.kem2_name, receiver.kem2_sk, c2)
    except (DecapsFailure, LengthMismatch):
        raise Invalid("invalid") from None
    return _den_secrets(k1, k2, c1, c2, receiver.public, timer)


def den_decaps(receiver: AkemKeyPair, sender_pub: AkemPublicKey | None,
               payload: AkemPayload | bytes, suite: SuiteDescriptor | int = DEN_1,
               timer: PhaseTimer | None = None) -> SessionSecrets:
    """Receiver side of Deniable Mode. Any failure is the single error ``Invalid``.

    ``sender_pub`` is accepted for interface symmetry and is never read.
    """
    suite = get_suite(suite)
    if not isinstance(payload, AkemPayload):
        try:
            payload = AkemPayload.from_bytes(payload, suite)
        except LengthMismatch:
            raise Invalid("invalid") from None
    if len(payload.auth) != suite.sizes.tag:
        raise Invalid("invalid")
    tag, secrets = _den_open(receiver, payload.c1, payload.c2, suite, timer)
    _mark(timer, "tag_verify")
    ok = hmac.compare_digest(tag, payload.auth)
    _mark(timer, "end")
    if not ok:
        raise Invalid("invalid")
    return secrets


def forge_transcript(receiver: AkemKeyPair, sender_pub: AkemPublicKey | None, c: bytes,
                     suite: SuiteDescriptor | int = DEN_1) -> tuple[bytes, SessionSecrets]:
    """Receiver-side simulator: the tag an honest sender would attach to ``c``."""
    suite = get_suite(suite)
    sz = suite.sizes
    if len(c) != sz.kem1_ct + sz.kem2_ct:
        raise Invalid("invalid")
    tag, secrets = _den_open(receiver, bytes(c[:sz.kem1_ct]), bytes(c[sz.kem1_ct:]), suite, None)
    return tag, secrets


def invent_ciphertexts(receiver_pub: AkemPublicKey, rng: Entropy,
                       suite: SuiteDescriptor | int = DEN_1) -> bytes:
    """Fresh c1||c2 made by the receiver against its own keys, with no sender involved."""
    suite = get_suite(suite)
    c1, _ = kem_encaps(suite.kem1_name, receiver_pub.kem1_pk, rng)
    c2, _ = kem_encaps(suite.kem2_name, receiver_pub.kem2_pk, rng)
    return c1 + c2


# -- Authenticated Mode --

def _auth_ksh(k1, k2, c, sig, receiver_pub: AkemPublicKey, sender_pub: AkemPublicKey) -> bytes:
    # canonical order on both sides: receiver bundle, then sender bundle
    return _kdf(k1 + k2 + c + sig + receiver_pub.to_bytes() + sender_pub.to_bytes(), LABEL_AUTH_KSH)


def auth_encaps(sender_sig_sk: bytes, sender_pub: AkemPublicKey, receiver_pub: AkemPublicKey,
                rng: Entropy, suite: SuiteDescriptor | int = AUTH_1,
                timer: PhaseTimer | None = None) -> tuple[AkemPayload, SessionSecrets]:
    suite = get_suite(suite)
    if suite.mode != Mode.AUTHENTICATED:
        raise ValueError(f"{suite.name} is not an authenticated suite")
    receiver_pub.check_receiver(suite)
    _mark(timer, "kem1_encaps")
    c1, k1 = kem_encaps(suite.kem1_name, receiver_pub.kem1_pk, rng)
    _mark(timer, "kem2_encaps")
    c2, k2 = kem_encaps(suite.kem2_name, receiver_pub.kem2_pk, rng)
    c = c1 + c2
    _mark(timer, "sign")
    sig = sig_sign(suite.sig_name, sender_sig_sk, c, rng)
    if len(sig) != suite.sizes.sig_max:
        raise LengthMismatch(f"{suite.sig_name} signature is {len(sig)} bytes, layout needs {suite.sizes.sig_max}")
    _mark(timer, "kdf")
    k_sh = _auth_ksh(k1, k2, c, sig, receiver_pub, sender_pub)
    _mark(timer, "end")
    return AkemPayload(c1, c2, sig), SessionSecrets(k1, k2, k_sh)


def auth_decaps(receiver: AkemKeyPair, sender_pub: AkemPublicKey, payload: AkemPayload | bytes,
                suite: SuiteDescriptor | int = AUTH_1,
                timer: PhaseTimer | None = None) -> SessionSecrets:
    """Verify the signature over c1||c2, and only then decapsulate."""
    suite = get_suite(suite)
    if not isinstance(payload, AkemPayload):
        try:
            payload = AkemPayload.from_bytes(payload, suite)
        except LengthMismatch:
            raise NotValid("not valid") from None
    if not sender_pub.sig_pk:
        raise NotValid("sender bundle has no signature key")
    _mark(timer, "sig_verify")
    if not sig_verify(suite.sig_name, sender_pub.sig_pk, payload.c, payload.auth):
        _mark(timer, "end")
        raise NotValid("not valid")
    _mark(timer, "kem1_decaps")
    k1 = kem_decaps(suite.kem1_name, receiver.kem1_sk, payload.c1)
    _mark(timer, "kem2_decaps")
    k2 = kem_decaps(suite.kem2_name, receiver.kem2_sk, payload.c2)
    _mark(timer, "kdf")
    k_sh = _auth_ksh(k1, k2, payload.c, payload.auth, receiver.public, sender_pub)
    _mark(timer, "end")
    return SessionSecrets(k1, k2, k_sh)


def third_party_verify(sender_pub: AkemPublicKey, payload: AkemPayload | bytes,
                       suite: SuiteDescriptor | int = AUTH_1) -> bool:
    """Anyone holding only public data can attribute an Auth-Mode payload."""
    suite = get_suite(suite)
    if not isinstance(payload, AkemPayload):
        payload = AkemPayload.from_bytes(payload, suite)
    return sig_verify(suite.sig_name, sender_pub.sig_pk, payload.c, payload.auth)
