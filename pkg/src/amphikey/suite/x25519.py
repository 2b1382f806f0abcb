"""X25519 used as a KEM: the ciphertext is the sender's ephemeral public key."""

from __future__ import annotations

from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..errors import DecapsFailure, LengthMismatch

PK_BYTES = 32
SK_BYTES = 32
CT_BYTES = 32
SS_BYTES = 32


def _public(sk: X25519PrivateKey) -> bytes:
    return sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def keygen(seed: bytes) -> tuple[bytes, bytes]:
    """(public, secret) from 32 bytes of entropy (clamping happens inside)."""
    if len(seed) != SK_BYTES:
        raise LengthMismatch("X25519 secret must be 32 bytes")
    return _public(X25519PrivateKey.from_private_bytes(seed)), bytes(seed)


def dh(sk: bytes, pk: bytes) -> bytes:
    if len(sk) != SK_BYTES or len(pk) != PK_BYTES:
        raise LengthMismatch("X25519 keys must be 32 bytes")
    try:
        shared = X25519PrivateKey.from_private_bytes(sk).exchange(X25519PublicKey.from_public_bytes(pk))
    except ValueError as exc:
        # OpenSSL refuses low-order points (all-zero output)
        raise DecapsFailure("X25519 produced the all-zero shared secret") from exc
    if shared == bytes(32):
        raise DecapsFailure("X25519 produced the all-zero shared secret")
    return shared


def encaps(pk: bytes, eph_seed: bytes) -> tuple[bytes, bytes]:
    """Returns (ciphertext, shared)."""
    eph_pk, eph_sk = keygen(eph_seed)
    return eph_pk, dh(eph_sk, pk)


def decaps(sk: bytes, ct: bytes) -> bytes:
    if len(ct) != CT_BYTES:
        raise LengthMismatch(f"X25519 ciphertext must be {CT_BYTES} bytes, got {len(ct)}")
    return dh(sk, ct)
