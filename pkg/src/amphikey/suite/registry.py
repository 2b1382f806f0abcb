"""Primitive registry and suite descriptors.

The akem and handshake layers only see scheme names and the functions
below; concrete algorithms plug in through :class:`KemScheme` and
:class:`SigScheme` records.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

from ..entropy import Entropy
from ..errors import LengthMismatch, SchemeUnavailable, SignatureTooLarge, UnknownScheme
from . import ascon, kdf, mldsa, mlkem, x25519


class Mode(enum.IntEnum):
    DENIABLE = 1
    AUTHENTICATED = 2


class _Secret:
    """Mixin for key pairs: secret is a bytearray that can be wiped."""

    secret: bytearray

    def wipe(self) -> None:
        for i in range(len(self.secret)):
            self.secret[i] = 0

    @property
    def wiped(self) -> bool:
        return not any(self.secret)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.wipe()

    def __del__(self):
        try:
            self.wipe()
        except Exception:
            pass


@dataclass(eq=False)
class KemKeyPair(_Secret):
    scheme: str
    public: bytes
    secret: bytearray = field(repr=False)


@dataclass(eq=False)
class SigKeyPair(_Secret):
    scheme: str
    public: bytes
    secret: bytearray = field(repr=False)


@dataclass(frozen=True)
class KemScheme:
    name: str
    pk_len: int
    sk_len: int
    ct_len: int
    ss_len: int
    keygen_seed_len: int
    encaps_coins_len: int
    keygen: Callable[[bytes], tuple[bytes, bytes]]
    encaps: Callable[[bytes, bytes], tuple[bytes, bytes]]
    decaps: Callable[[bytes, bytes], bytes]


@dataclass(frozen=True)
class SigScheme:
    name: str
    pk_len: int
    sk_len: int | None
    sig_max: int
    hedge_len: int = 0
    keygen: Callable[[bytes], tuple[bytes, bytes]] | None = None
    sign: Callable[[bytes, bytes, bytes | None], bytes] | None = None
    verify: Callable[[bytes, bytes, bytes], bool] | None = None

    @property
    def available(self) -> bool:
        return self.sign is not None


KEMS: dict[str, KemScheme] = {
    "ML-KEM-768": KemScheme(
        "ML-KEM-768", mlkem.EK_BYTES, mlkem.DK_BYTES, mlkem.CT_BYTES, mlkem.SS_BYTES, 64, 32,
        keygen=mlkem.keygen,
        encaps=mlkem.encaps_internal,
        decaps=mlkem.decaps,
    ),
    "X25519": KemScheme(
        "X25519", x25519.PK_BYTES, x25519.SK_BYTES, x25519.CT_BYTES, x25519.SS_BYTES, 32, 32,
        keygen=x25519.keygen,
        encaps=x25519.encaps,
        decaps=x25519.decaps,
    ),
}


def _dsa(p: mldsa.DsaParams, hedge_len: int) -> SigScheme:
    return SigScheme(
        p.name, p.pk_bytes, p.sk_bytes, p.sig_bytes, hedge_len,
        keygen=lambda seed: mldsa.keygen(p, seed),
        sign=lambda sk, msg, rnd: mldsa.sign(p, sk, msg, rnd),
        verify=lambda pk, msg, sig: mldsa.verify(p, pk, msg, sig),
    )


SIGS: dict[str, SigScheme] = {
    "ML-DSA-65": _dsa(mldsa.ML_DSA_65, 32),
    "Dilithium3": _dsa(mldsa.DILITHIUM3, 64),
    # sizes only; no implementation ships
    "Raccoon-128": SigScheme("Raccoon-128", 2256, None, 11524),
}

AEADS = {"Ascon-128a": (ascon.KEY_BYTES, ascon.NONCE_BYTES, ascon.TAG_BYTES)}
KDFS = {"HKDF-SHA256"}
MACS = {"HMAC-SHA256"}


def get_kem(name: str) -> KemScheme:
    try:
        return KEMS[name]
    except KeyError:
        raise UnknownScheme(f"unknown KEM {name!r}") from None


def get_sig(name: str) -> SigScheme:
    try:
        scheme = SIGS[name]
    except KeyError:
        raise UnknownScheme(f"unknown signature scheme {name!r}") from None
    return scheme


def _usable_sig(name: str) -> SigScheme:
    scheme = get_sig(name)
    if not scheme.available:
        raise SchemeUnavailable(f"{name} is registered for sizing only; no implementation is built")
    return scheme


# -- KEM operations --

def kem_keygen(scheme: str, rng: Entropy) -> KemKeyPair:
    k = get_kem(scheme)
    pk, sk = k.keygen(rng.random_bytes(k.keygen_seed_len))
    return KemKeyPair(k.name, pk, bytearray(sk))


def kem_encaps(scheme: str, receiver_pk: bytes, rng: Entropy) -> tuple[bytes, bytes]:
    k = get_kem(scheme)
    if len(receiver_pk) != k.pk_len:
        raise LengthMismatch(f"{k.name} public key must be {k.pk_len} bytes, got {len(receiver_pk)}")
    return k.encaps(bytes(receiver_pk), rng.random_bytes(k.encaps_coins_len))


def kem_decaps(scheme: str, receiver_sk: bytes, ciphertext: bytes) -> bytes:
    k = get_kem(scheme)
    if len(receiver_sk) != k.sk_len:
        raise LengthMismatch(f"{k.name} secret key must be {k.sk_len} bytes, got {len(receiver_sk)}")
    if len(ciphertext) != k.ct_len:
        raise LengthMismatch(f"{k.name} ciphertext must be {k.ct_len} bytes, got {len(ciphertext)}")
    return k.decaps(bytes(receiver_sk), bytes(ciphertext))


# -- signature operations --

def sig_keygen(scheme: str, rng: Entropy) -> SigKeyPair:
    s = _usable_sig(scheme)
    pk, sk = s.keygen(rng.random_bytes(32))
    return SigKeyPair(s.name, pk, bytearray(sk))


def sig_sign(scheme: str, sk: bytes, message: bytes, rng: Entropy | None = None) -> bytes:
    """Deterministic when ``rng`` is None, hedged otherwise."""
    s = _usable_sig(scheme)
    if len(sk) != s.sk_len:
        raise LengthMismatch(f"{s.name} secret key must be {s.sk_len} bytes, got {len(sk)}")
    rnd = rng.random_bytes(s.hedge_len) if rng is not None else None
    sig = s.sign(bytes(sk), message, rnd)
    if len(sig) > s.sig_max:
        raise SignatureTooLarge(f"{s.name} produced {len(sig)} bytes, max {s.sig_max}")
    return sig


def sig_verify(scheme: str, pk: bytes, message: bytes, signature: bytes) -> bool:
    s = _usable_sig(scheme)
    if len(pk) != s.pk_len:
        raise LengthMismatch(f"{s.name} public key must be {s.pk_len} bytes, got {len(pk)}")
    if len(signature) > s.sig_max:
        return False
    return s.verify(bytes(pk), message, signature)


# -- symmetric --

def aead_seal(key: bytes, nonce: bytes, aad: bytes, plaintext: bytes) -> bytes:
    return ascon.seal(key, nonce, aad, plaintext)


def aead_open(key: bytes, nonce: bytes, aad: bytes, sealed: bytes) -> bytes:
    return ascon.open_(key, nonce, aad, sealed)


kdf_extract_expand = kdf.kdf_extract_expand
mac = kdf.mac
mac_verify = kdf.mac_verify


# -- suites --

@dataclass(frozen=True)
class SuiteSizes:
    kem1_pk: int
    kem1_ct: int
    kem1_ss: int
    kem2_pk: int
    kem2_ct: int
    kem2_ss: int
    sig_pk: int
    sig_max: int
    tag: int = 32
    shared_secret: int = 32

    @property
    def public_bundle(self) -> int:
        return self.kem1_pk + self.kem2_pk + self.sig_pk

    @property
    def payload(self) -> int:
        return self.kem1_ct + self.kem2_ct + (self.sig_max if self.sig_pk else self.tag)


@dataclass(frozen=True)
class SuiteDescriptor:
    suite_id: int
    name: str
    mode: Mode
    kem1_name: str
    kem2_name: str
    sig_name: str | None
    aead_name: str = "Ascon-128a"
    kdf_name: str = "HKDF-SHA256"
    mac_name: str = "HMAC-SHA256"

    @property
    def sizes(self) -> SuiteSizes:
        k1, k2 = get_kem(self.kem1_name), get_kem(self.kem2_name)
        sig = get_sig(self.sig_name) if self.sig_name else None
        return SuiteSizes(
            k1.pk_len, k1.ct_len, k1.ss_len, k2.pk_len, k2.ct_len, k2.ss_len,
            sig.pk_len if sig else 0, sig.sig_max if sig else 0,
        )

    @property
    def available(self) -> bool:
        return self.sig_name is None or get_sig(self.sig_name).available


DEN_1 = SuiteDescriptor(0x01, "DEN-1", Mode.DENIABLE, "ML-KEM-768", "X25519", None)
# Dilithium3 round-3 encoding: 3293-byte signatures
AUTH_1 = SuiteDescriptor(0x02, "AUTH-1", Mode.AUTHENTICATED, "ML-KEM-768", "X25519", "Dilithium3")
AUTH_2 = SuiteDescriptor(0x03, "AUTH-2", Mode.AUTHENTICATED, "ML-KEM-768", "X25519", "Raccoon-128")
# FIPS 204 encoding: 3309-byte signatures
AUTH_1F = SuiteDescriptor(0x04, "AUTH-1F", Mode.AUTHENTICATED, "ML-KEM-768", "X25519", "ML-DSA-65")

SUITES: dict[int, SuiteDescriptor] = {s.suite_id: s for s in (DEN_1, AUTH_1, AUTH_2, AUTH_1F)}


def get_suite(suite: int | str | SuiteDescriptor) -> SuiteDescriptor:
    if isinstance(suite, SuiteDescriptor):
        return suite
    if isinstance(suite, str):
        for s in SUITES.values():
            if s.name.lower() == suite.lower():
                return s
        raise UnknownScheme(f"unknown suite {suite!r}")
    try:
        return SUITES[suite]
    except KeyError:
        raise UnknownScheme(f"unknown suite id 0x{suite:02x}") from None


def default_suite(mode: Mode) -> SuiteDescriptor:
    return DEN_1 if mode == Mode.DENIABLE else AUTH_1
