"""Exception hierarchy shared by every layer of the stack."""

from __future__ import annotations

import enum


class AmphikeyError(Exception):
    """Root of all library errors."""


# -- primitive layer --

class UnknownScheme(AmphikeyError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SchemeUnavailable(UnknownScheme):
    """Scheme is registered (sizes known) but no implementation is built."""


class LengthMismatch(AmphikeyError, ValueError):
    pass


class DecapsFailure(AmphikeyError):
    pass


class AuthFailure(AmphikeyError):
    """AEAD tag did not verify."""


class OutLenTooLarge(AmphikeyError, ValueError):
    pass


class SignatureTooLarge(AmphikeyError):
    pass


# -- akem layer --

class NotValid(AmphikeyError):
    """Auth Mode: signature over c1||c2 rejected."""


class Invalid(AmphikeyError):
    """Deniable Mode: tag mismatch or KEM failure, deliberately indistinguishable."""


# -- handshake --

class AbortReason(enum.IntEnum):
    BAD_CERTIFICATE = 1
    NOT_VALID = 2
    INVALID = 3
    TIMEOUT = 4
    CONFIRM_FAILURE = 5
    UNSUPPORTED_SUITE = 6
    MODE_MISMATCH = 7
    MALFORMED = 8
    CONFIG_INVALID = 9


class HandshakeAbort(AmphikeyError):
    def __init__(self, reason: AbortReason, detail: str = ""):
        self.reason = AbortReason(reason)
        self.detail = detail
        msg = self.reason.name
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ConfigInvalid(HandshakeAbort):
    def __init__(self, detail: str = ""):
        super().__init__(AbortReason.CONFIG_INVALID, detail)


# -- wire --

class WireErrorKind(enum.Enum):
    BAD_MAGIC = "BadMagic"
    BAD_VERSION = "BadVersion"
    CHUNK_GAP = "ChunkGap"
    OVERSIZE = "Oversize"
    TRUNCATED = "Truncated"
    TRAILING = "Trailing"


class WireError(AmphikeyError):
    def __init__(self, kind: WireErrorKind, detail: str = ""):
        self.kind = kind
        super().__init__(f"{kind.value}: {detail}" if detail else kind.value)


class PayloadTooLarge(AmphikeyError, ValueError):
    pass


# -- channel --

class ChannelErrorKind(enum.Enum):
    AUTH_FAILURE = "AuthFailure"
    SEQ_MISMATCH = "SeqMismatch"
    OVERFLOW = "Overflow"


class ChannelError(AmphikeyError):
    def __init__(self, kind: ChannelErrorKind, detail: str = ""):
        self.kind = kind
        super().__init__(f"{kind.value}: {detail}" if detail else kind.value)


# -- pki / app / bench --

class SubjectTooLong(AmphikeyError, ValueError):
    pass


class KeystoreError(AmphikeyError, OSError):
    pass


class HarnessError(AmphikeyError):
    pass


class DomainError(AmphikeyError, ValueError):
    pass
