"""HKDF-SHA256 and HMAC-SHA256."""

from __future__ import annotations

import hashlib
import hmac

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..errors import OutLenTooLarge

HASH_LEN = 32
MAX_OKM = 255 * HASH_LEN  # 8160

# info labels; every derivation in the stack uses exactly one of these
LABEL_DEN_NONCE = b"amphikey/v1/den/nonce"
LABEL_DEN_KAUTH = b"amphikey/v1/den/kauth"
LABEL_DEN_KSH = b"amphikey/v1/den/ksh"
LABEL_AUTH_KSH = b"amphikey/v1/auth/ksh"
LABEL_REC_C2S = b"amphikey/v1/rec/c2s"
LABEL_REC_S2C = b"amphikey/v1/rec/s2c"
LABEL_CONFIRM = b"amphikey/v1/confirm"


def kdf_extract_expand(ikm: bytes, salt: bytes, info: bytes, out_len: int) -> bytes:
    if out_len > MAX_OKM:
        raise OutLenTooLarge(f"HKDF-SHA256 output capped at {MAX_OKM} bytes, asked for {out_len}")
    if out_len <= 0:
        raise OutLenTooLarge("HKDF output length must be positive")
    return HKDF(algorithm=hashes.SHA256(), length=out_len, salt=salt or None, info=info).derive(ikm)


def mac(key: bytes, message: bytes) -> bytes:
    return hmac.digest(key, message, hashlib.sha256)


def mac_verify(key: bytes, message: bytes, tag: bytes) -> bool:
    return hmac.compare_digest(mac(key, message), tag)
