"""Pluggable primitives and the suite registry."""

from .registry import (
    AUTH_1,
    AUTH_1F,
    AUTH_2,
    DEN_1,
    KEMS,
    SIGS,
    SUITES,
    KemKeyPair,
    KemScheme,
    Mode,
    SigKeyPair,
    SigScheme,
    SuiteDescriptor,
    SuiteSizes,
    aead_open,
    aead_seal,
    default_suite,
    get_kem,
    get_sig,
    get_suite,
    kdf_extract_expand,
    kem_decaps,
    kem_encaps,
    kem_keygen,
    mac,
    mac_verify,
    sig_keygen,
    sig_sign,
    sig_verify,
)

__all__ = [
    "AUTH_1", "AUTH_1F", "AUTH_2", "DEN_1", "KEMS", "SIGS", "SUITES",
    "KemKeyPair", "KemScheme", "Mode", "SigKeyPair", "SigScheme", "SuiteDescriptor", "SuiteSizes",
    "aead_open", "aead_seal", "default_suite", "get_kem", "get_sig", "get_suite",
    "kdf_extract_expand", "kem_decaps", "kem_encaps", "kem_keygen", "mac", "mac_verify",
    "sig_keygen", "sig_sign", "sig_verify",
]
