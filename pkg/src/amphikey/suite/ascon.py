"""Ascon-128a authenticated encryption (16-byte key, nonce and tag).

The permutation and the duplex loop are compiled with numba; the Python
wrappers only move bytes in and out and compare tags.
"""

from __future__ import annotations

import hmac

import numpy as np
from numba import njit

from ..errors import AuthFailure, LengthMismatch

KEY_BYTES = 16
NONCE_BYTES = 16
TAG_BYTES = 16
RATE = 16

_IV = np.uint64(0x80800C0800000000)  # k=128, r=128, a=12, b=8
_RC = np.array([0xF0, 0xE1, 0xD2, 0xC3, 0xB4, 0xA5, 0x96, 0x87, 0x78, 0x69, 0x5A, 0x4B],
               dtype=np.uint64)


@njit(cache=True, inline="always")
def _rotr(x, n):
    return (x >> np.uint64(n)) | (x << np.uint64(64 - n))


@njit(cache=True)
def _permute(s, rounds, rc):
    x0, x1, x2, x3, x4 = s[0], s[1], s[2], s[3], s[4]
    for r in range(12 - rounds, 12):
        x2 ^= rc[r]
        x0 ^= x4
        x4 ^= x3
        x2 ^= x1
        t0 = ~x0 & x1
        t1 = ~x1 & x2
        t2 = ~x2 & x3
        t3 = ~x3 & x4
        t4 = ~x4 & x0
        x0 ^= t1
        x1 ^= t2
        x2 ^= t3
        x3 ^= t4
        x4 ^= t0
        x1 ^= x0
        x0 ^= x4
        x3 ^= x2
        x2 = ~x2
        x0 ^= _rotr(x0, 19) ^ _rotr(x0, 28)
        x1 ^= _rotr(x1, 61) ^ _rotr(x1, 39)
        x2 ^= _rotr(x2, 1) ^ _rotr(x2, 6)
        x3 ^= _rotr(x3, 10) ^ _rotr(x3, 17)
        x4 ^= _rotr(x4, 7) ^ _rotr(x4, 41)
    s[0], s[1], s[2], s[3], s[4] = x0, x1, x2, x3, x4


@njit(cache=True)
def _load(buf, off, n):
    # big-endian word from up to 8 bytes, zero-filled on the right
    w = np.uint64(0)
    for i in range(8):
        w <<= np.uint64(8)
        if i < n:
            w |= np.uint64(buf[off + i])
    return w


@njit(cache=True)
def _store(buf, off, w, n):
    for i in range(n):
        buf[off + i] = np.uint8((w >> np.uint64(56 - 8 * i)) & np.uint64(0xFF))


@njit(cache=True)
def _init(key, nonce, iv, rc):
    s = np.empty(5, dtype=np.uint64)
    s[0] = iv
    s[1] = _load(key, 0, 8)
    s[2] = _load(key, 8, 8)
    s[3] = _load(nonce, 0, 8)
    s[4] = _load(nonce, 8, 8)
    _permute(s, 12, rc)
    s[3] ^= _load(key, 0, 8)
    s[4] ^= _load(key, 8, 8)
    return s


@njit(cache=True)
def _absorb_ad(s, ad, rc):
    n = ad.shape[0]
    if n > 0:
        block = np.zeros(RATE, dtype=np.uint8)
        off = 0
        while True:
            rem = n - off
            if rem >= RATE:
                s[0] ^= _load(ad, off, 8)
                s[1] ^= _load(ad, off + 8, 8)
                _permute(s, 8, rc)
                off += RATE
            else:
                block[:] = 0
                block[:rem] = ad[off:]
                block[rem] = 0x80
                s[0] ^= _load(block, 0, 8)
                s[1] ^= _load(block, 8, 8)
                _permute(s, 8, rc)
                break
    s[4] ^= np.uint64(1)


@njit(cache=True)
def _finalize(s, key, rc, tag):
    s[2] ^= _load(key, 0, 8)
    s[3] ^= _load(key, 8, 8)
    _permute(s, 12, rc)
    s[3] ^= _load(key, 0, 8)
    s[4] ^= _load(key, 8, 8)
    _store(tag, 0, s[3], 8)
    _store(tag, 8, s[4], 8)


@njit(cache=True)
def _encrypt(key, nonce, ad, pt, out, iv, rc):
    s = _init(key, nonce, iv, rc)
    _absorb_ad(s, ad, rc)
    n = pt.shape[0]
    off = 0
    block = np.zeros(RATE, dtype=np.uint8)
    while n - off >= RATE:
        s[0] ^= _load(pt, off, 8)
        s[1] ^= _load(pt, off + 8, 8)
        _store(out, off, s[0], 8)
        _store(out, off + 8, s[1], 8)
        _permute(s, 8, rc)
        off += RATE
    rem = n - off
    block[:rem] = pt[off:]
    block[rem] = 0x80
    s[0] ^= _load(block, 0, 8)
    s[1] ^= _load(block, 8, 8)
    _store(block, 0, s[0], 8)
    _store(block, 8, s[1], 8)
    out[off:n] = block[:rem]
    _finalize(s, key, rc, out[n:])


@njit(cache=True)
def _decrypt(key, nonce, ad, ct, out, tag, iv, rc):
    s = _init(key, nonce, iv, rc)
    _absorb_ad(s, ad, rc)
    n = ct.shape[0]
    off = 0
    block = np.zeros(RATE, dtype=np.uint8)
    while n - off >= RATE:
        c0 = _load(ct, off, 8)
        c1 = _load(ct, off + 8, 8)
        _store(out, off, s[0] ^ c0, 8)
        _store(out, off + 8, s[1] ^ c1, 8)
        s[0] = c0
        s[1] = c1
        _permute(s, 8, rc)
        off += RATE
    rem = n - off
    _store(block, 0, s[0], 8)
    _store(block, 8, s[1], 8)
    for i in range(rem):
        out[off + i] = block[i] ^ ct[off + i]
        block[i] = ct[off + i]
    block[rem] ^= 0x80
    s[0] = _load(block, 0, 8)
    s[1] = _load(block, 8, 8)
    _finalize(s, key, rc, tag)


def _u8(data: bytes) -> np.ndarray:
    return np.frombuffer(bytes(data), dtype=np.uint8)


def _check(key: bytes, nonce: bytes) -> None:
    if len(key) != KEY_BYTES:
        raise LengthMismatch(f"Ascon-128a key must be {KEY_BYTES} bytes")
    if len(nonce) != NONCE_BYTES:
        raise LengthMismatch(f"Ascon-128a nonce must be {NONCE_BYTES} bytes")


def seal(key: bytes, nonce: bytes, aad: bytes, plaintext: bytes) -> bytes:
    _check(key, nonce)
    out = np.empty(len(plaintext) + TAG_BYTES, dtype=np.uint8)
    _encrypt(_u8(key), _u8(nonce), _u8(aad), _u8(plaintext), out, _IV, _RC)
    return out.tobytes()


def open_(key: bytes, nonce: bytes, aad: bytes, sealed: bytes) -> bytes:
    _check(key, nonce)
    if len(sealed) < TAG_BYTES:
        raise AuthFailure("ciphertext shorter than the tag")
    body = _u8(sealed[:-TAG_BYTES])
    out = np.empty(len(body), dtype=np.uint8)
    tag = np.empty(TAG_BYTES, dtype=np.uint8)
    _decrypt(_u8(key), _u8(nonce), _u8(aad), body, out, tag, _IV, _RC)
    if not hmac.compare_digest(tag.tobytes(), sealed[-TAG_BYTES:]):
        out[:] = 0
        raise AuthFailure("Ascon-128a tag mismatch")
    return out.tobytes()
