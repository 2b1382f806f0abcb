"""ML-KEM-768 (FIPS 203) on numpy int64 arrays.

Polynomials are rows of length 256; leading axes batch over vector
components. The NTT is applied as a precomputed 256x256 matrix.
Not constant time.
"""

from __future__ import annotations

import hashlib
import hmac

import numpy as np

from ..errors import LengthMismatch

N = 256
Q = 3329
K = 3
ETA1 = 2
ETA2 = 2
DU = 10
DV = 4

EK_BYTES = 384 * K + 32
DK_BYTES = 768 * K + 96
CT_BYTES = 32 * (DU * K + DV)
SS_BYTES = 32


def _bitrev7(i: int) -> int:
    return int(f"{i:07b}"[::-1], 2)


ZETAS = np.array([pow(17, _bitrev7(i), Q) for i in range(128)], dtype=np.int64)
GAMMAS = np.array([pow(17, 2 * _bitrev7(i) + 1, Q) for i in range(128)], dtype=np.int64)
N_INV = 3303  # 128^-1 mod q


def _ntt_layers(f: np.ndarray) -> np.ndarray:
    f = f.copy()
    length = 128
    while length >= 2:
        blocks = N // (2 * length)
        z = ZETAS[blocks:2 * blocks].reshape(blocks, 1)
        v = f.reshape(-1, blocks, 2, length)
        t = (z * v[:, :, 1, :]) % Q
        lo = v[:, :, 0, :].copy()
        v[:, :, 0, :] = (lo + t) % Q
        v[:, :, 1, :] = (lo - t) % Q
        length //= 2
    return f


def _ntt_inv_layers(f: np.ndarray) -> np.ndarray:
    f = f.copy()
    length = 2
    while length <= 128:
        blocks = N // (2 * length)
        z = ZETAS[blocks:2 * blocks][::-1].reshape(blocks, 1)
        v = f.reshape(-1, blocks, 2, length)
        a, b = v[:, :, 0, :].copy(), v[:, :, 1, :].copy()
        v[:, :, 0, :] = (a + b) % Q
        v[:, :, 1, :] = (z * (b - a)) % Q
        length *= 2
    return (f * N_INV) % Q


# Both transforms are linear over Z_q. With q = 3329 every dot product of a
# 256-entry row stays below 2^53, so a float64 matmul is exact.
_NTT_MAT = _ntt_layers(np.eye(N, dtype=np.int64)).astype(np.float64)
_NTT_INV_MAT = _ntt_inv_layers(np.eye(N, dtype=np.int64)).astype(np.float64)


def ntt(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.int64) % Q
    return (f.astype(np.float64) @ _NTT_MAT).astype(np.int64) % Q


def ntt_inv(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.int64) % Q
    return (f.astype(np.float64) @ _NTT_INV_MAT).astype(np.int64) % Q


def ntt_mul(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Pointwise product in the NTT domain (pairs of degree-1 factors)."""
    f = f.reshape(*f.shape[:-1], 128, 2)
    g = g.reshape(*g.shape[:-1], 128, 2)
    a0, a1 = f[..., 0], f[..., 1]
    b0, b1 = g[..., 0], g[..., 1]
    c0 = (a0 * b0 + (a1 * b1 % Q) * GAMMAS) % Q
    c1 = (a0 * b1 + a1 * b0) % Q
    out = np.stack((c0, c1), axis=-1)
    return out.reshape(*out.shape[:-2], N)


# -- byte <-> coefficient codecs --

def byte_encode(f: np.ndarray, d: int) -> bytes:
    f = np.asarray(f, dtype=np.int64).reshape(-1)
    bits = ((f[:, None] >> np.arange(d)) & 1).astype(np.uint8)
    return np.packbits(bits.reshape(-1), bitorder="little").tobytes()


def byte_decode(data: bytes, d: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    vals = bits.reshape(-1, d).astype(np.int64) @ (1 << np.arange(d, dtype=np.int64))
    if d == 12:
        vals %= Q
    return vals


def compress(x: np.ndarray, d: int) -> np.ndarray:
    return (((x << d) + Q // 2) // Q) & ((1 << d) - 1)


def decompress(y: np.ndarray, d: int) -> np.ndarray:
    return (Q * y + (1 << (d - 1))) >> d


# -- hashing and sampling --

def _G(data: bytes) -> tuple[bytes, bytes]:
    h = hashlib.sha3_512(data).digest()
    return h[:32], h[32:]


def _H(data: bytes) -> bytes:
    return hashlib.sha3_256(data).digest()


def _J(data: bytes) -> bytes:
    return hashlib.shake_256(data).digest(32)


def _prf(eta: int, s: bytes, b: int) -> bytes:
    return hashlib.shake_256(s + bytes([b])).digest(64 * eta)


def sample_ntt(seed: bytes) -> np.ndarray:
    """Rejection-sample one NTT-domain polynomial from SHAKE128(seed)."""
    nbytes = 168 * 5
    while True:
        buf = np.frombuffer(hashlib.shake_128(seed).digest(nbytes), dtype=np.uint8)
        b = buf[: len(buf) // 3 * 3].reshape(-1, 3).astype(np.int64)
        d1 = b[:, 0] + 256 * (b[:, 1] & 15)
        d2 = (b[:, 1] >> 4) + 16 * b[:, 2]
        cand = np.stack((d1, d2), axis=1).reshape(-1)
        ok = cand[cand < Q]
        if len(ok) >= N:
            return ok[:N]
        nbytes += 168 * 2


def sample_cbd(data: bytes, eta: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    s = bits.reshape(N, 2, eta).sum(axis=2, dtype=np.int64)
    return (s[:, 0] - s[:, 1]) % Q


def _matrix(rho: bytes) -> np.ndarray:
    # A[i][j] = SampleNTT(rho || j || i)
    return np.stack([
        np.stack([sample_ntt(rho + bytes([j, i])) for j in range(K)]) for i in range(K)
    ])


def _mat_vec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    return ntt_mul(a, v[None, :, :]).sum(axis=1) % Q


# -- K-PKE --

def _pke_keygen(d: bytes) -> tuple[bytes, bytes]:
    rho, sigma = _G(d + bytes([K]))
    a = _matrix(rho)
    s = np.stack([sample_cbd(_prf(ETA1, sigma, i), ETA1) for i in range(K)])
    e = np.stack([sample_cbd(_prf(ETA1, sigma, K + i), ETA1) for i in range(K)])
    s_hat = ntt(s)
    t_hat = (_mat_vec(a, s_hat) + ntt(e)) % Q
    return byte_encode(t_hat, 12) + rho, byte_encode(s_hat, 12)


def _pke_encrypt(ek: bytes, m: bytes, r: bytes) -> bytes:
    t_hat = byte_decode(ek[: 384 * K], 12).reshape(K, N)
    rho = ek[384 * K:]
    a = _matrix(rho)
    y = np.stack([sample_cbd(_prf(ETA1, r, i), ETA1) for i in range(K)])
    e1 = np.stack([sample_cbd(_prf(ETA2, r, K + i), ETA2) for i in range(K)])
    e2 = sample_cbd(_prf(ETA2, r, 2 * K), ETA2)
    y_hat = ntt(y)
    u = (ntt_inv(_mat_vec(a.transpose(1, 0, 2), y_hat)) + e1) % Q
    mu = decompress(byte_decode(m, 1), 1)
    v = (ntt_inv(ntt_mul(t_hat, y_hat).sum(axis=0) % Q) + e2 + mu) % Q
    return byte_encode(compress(u, DU), DU) + byte_encode(compress(v, DV), DV)


def _pke_decrypt(dk: bytes, c: bytes) -> bytes:
    split = 32 * DU * K
    u = decompress(byte_decode(c[:split], DU), DU).reshape(K, N)
    v = decompress(byte_decode(c[split:], DV), DV)
    s_hat = byte_decode(dk, 12).reshape(K, N)
    w = (v - ntt_inv(ntt_mul(s_hat, ntt(u)).sum(axis=0) % Q)) % Q
    return byte_encode(compress(w, 1), 1)


# -- ML-KEM --

def check_ek(ek: bytes) -> None:
    if len(ek) != EK_BYTES:
        raise LengthMismatch(f"ML-KEM-768 ek must be {EK_BYTES} bytes, got {len(ek)}")
    head = ek[: 384 * K]
    if byte_encode(byte_decode(head, 12), 12) != head:
        raise LengthMismatch("ML-KEM-768 ek fails the modulus check")


def keygen_internal(d: bytes, z: bytes) -> tuple[bytes, bytes]:
    ek, dk_pke = _pke_keygen(d)
    return ek, dk_pke + ek + _H(ek) + z


def keygen(seed64: bytes) -> tuple[bytes, bytes]:
    """Key pair from a 64-byte seed d||z."""
    return keygen_internal(seed64[:32], seed64[32:64])


def encaps_internal(ek: bytes, m: bytes) -> tuple[bytes, bytes]:
    """Returns (ciphertext, shared_key)."""
    check_ek(ek)
    key, r = _G(m + _H(ek))
    return _pke_encrypt(ek, m, r), key


def decaps(dk: bytes, c: bytes) -> bytes:
    if len(dk) != DK_BYTES:
        raise LengthMismatch(f"ML-KEM-768 dk must be {DK_BYTES} bytes, got {len(dk)}")
    if len(c) != CT_BYTES:
        raise LengthMismatch(f"ML-KEM-768 ciphertext must be {CT_BYTES} bytes, got {len(c)}")
    dk_pke = dk[: 384 * K]
    ek = dk[384 * K: 768 * K + 32]
    h = dk[768 * K + 32: 768 * K + 64]
    z = dk[768 * K + 64:]
    if _H(ek) != h:
        raise LengthMismatch("ML-KEM-768 dk hash check failed")
    m = _pke_decrypt(dk_pke, c)
    key, r = _G(m + h)
    rejected = _J(z + c)
    if hmac.compare_digest(_pke_encrypt(ek, m, r), c):
        return key
    return rejected
