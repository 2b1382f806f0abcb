"""Dual-mode hybrid post-quantum AKEM (ML-KEM-768 + X25519) with a framed handshake and Ascon record channel."""

from .akem import (
    AkemKeyPair,
    AkemPayload,
    AkemPublicKey,
    SessionSecrets,
    akem_keygen,
    auth_decaps,
    auth_encaps,
    den_decaps,
    den_encaps,
    forge_transcript,
    third_party_verify,
)
from .entropy import PinnedEntropy, SystemEntropy
from .errors import AbortReason, HandshakeAbort, Invalid, NotValid
from .handshake import DirectionalKeys, Established, HandshakeConfig, client_finish, client_respond, server_finish, server_hello
from .suite import AUTH_1, AUTH_1F, AUTH_2, DEN_1, Mode, SuiteDescriptor, get_suite

__version__ = "0.1.0"

__all__ = [
    "AUTH_1", "AUTH_1F", "AUTH_2", "AbortReason", "AkemKeyPair", "AkemPayload", "AkemPublicKey", "DEN_1",
    "DirectionalKeys", "Established", "HandshakeAbort", "HandshakeConfig", "Invalid", "Mode", "NotValid",
    "PinnedEntropy", "SessionSecrets", "SuiteDescriptor", "SystemEntropy", "akem_keygen", "auth_decaps",
    "auth_encaps", "client_finish", "client_respond", "den_decaps", "den_encaps", "forge_transcript",
    "get_suite", "server_finish", "server_hello", "third_party_verify",
]
