"""Module-lattice signatures: ML-DSA-65 (FIPS 204) and round-3 Dilithium3.

Both share parameters (k=6, l=5, eta=4) and arithmetic. They differ only in
seed expansion, the length of tr and c-tilde, and message preprocessing,
which :class:`DsaParams` captures. Not constant time.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

import numpy as np

from ..errors import LengthMismatch

N = 256
Q = 8380417
D = 13


@dataclass(frozen=True)
class DsaParams:
    name: str
    k: int
    l: int
    eta: int
    tau: int
    gamma1: int
    gamma2: int
    omega: int
    ctilde_bytes: int
    tr_bytes: int
    fips: bool

    @property
    def beta(self) -> int:
        return self.tau * self.eta

    @property
    def pk_bytes(self) -> int:
        return 32 + 320 * self.k

    @property
    def sk_bytes(self) -> int:
        eta_bits = 3 if self.eta == 2 else 4
        return 64 + self.tr_bytes + 32 * eta_bits * (self.k + self.l) + 416 * self.k

    @property
    def sig_bytes(self) -> int:
        z_bits = 18 if self.gamma1 == 1 << 17 else 20
        return self.ctilde_bytes + 32 * z_bits * self.l + self.omega + self.k


ML_DSA_65 = DsaParams("ML-DSA-65", 6, 5, 4, 49, 1 << 19, (Q - 1) // 32, 55, 48, 64, True)
DILITHIUM3 = DsaParams("Dilithium3", 6, 5, 4, 49, 1 << 19, (Q - 1) // 32, 55, 32, 32, False)


def _bitrev8(i: int) -> int:
    return int(f"{i:08b}"[::-1], 2)


ZETAS = np.array([pow(1753, _bitrev8(i), Q) for i in range(256)], dtype=np.int64)
N_INV = 8347681  # 256^-1 mod q


def ntt(w: np.ndarray) -> np.ndarray:
    w = np.array(w, dtype=np.int64) % Q
    shape = w.shape
    length = 128
    while length >= 1:
        blocks = N // (2 * length)
        z = ZETAS[blocks:2 * blocks].reshape(blocks, 1)
        v = w.reshape(-1, blocks, 2, length)
        t = (z * v[:, :, 1, :]) % Q
        lo = v[:, :, 0, :].copy()
        v[:, :, 0, :] = (lo + t) % Q
        v[:, :, 1, :] = (lo - t) % Q
        length //= 2
    return w.reshape(shape)


def ntt_inv(w: np.ndarray) -> np.ndarray:
    w = np.array(w, dtype=np.int64) % Q
    shape = w.shape
    length = 1
    while length <= 128:
        blocks = N // (2 * length)
        z = (Q - ZETAS[blocks:2 * blocks][::-1]).reshape(blocks, 1)
        v = w.reshape(-1, blocks, 2, length)
        a, b = v[:, :, 0, :].copy(), v[:, :, 1, :].copy()
        v[:, :, 0, :] = (a + b) % Q
        v[:, :, 1, :] = (z * (a - b)) % Q
        length *= 2
    return (w * N_INV % Q).reshape(shape)


def _center(x: np.ndarray) -> np.ndarray:
    """Map [0, q) to (-(q-1)/2, (q-1)/2]."""
    x = x % Q
    return np.where(x > (Q - 1) // 2, x - Q, x)


def _inf_norm(x: np.ndarray) -> int:
    return int(np.abs(_center(x)).max())


# -- bit packing, little-endian bit order --

def _pack(values: np.ndarray, width: int) -> bytes:
    v = np.asarray(values, dtype=np.int64).reshape(-1)
    bits = ((v[:, None] >> np.arange(width)) & 1).astype(np.uint8)
    return np.packbits(bits.reshape(-1), bitorder="little").tobytes()


def _unpack(data: bytes, width: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return bits.reshape(-1, width).astype(np.int64) @ (1 << np.arange(width, dtype=np.int64))


def _H(data: bytes, n: int) -> bytes:
    return hashlib.shake_256(data).digest(n)


# -- sampling --

def _rej_ntt_poly(seed: bytes) -> np.ndarray:
    nbytes = 168 * 5
    while True:
        buf = np.frombuffer(hashlib.shake_128(seed).digest(nbytes), dtype=np.uint8)
        b = buf[: len(buf) // 3 * 3].reshape(-1, 3).astype(np.int64)
        cand = b[:, 0] | (b[:, 1] << 8) | ((b[:, 2] & 0x7F) << 16)
        ok = cand[cand < Q]
        if len(ok) >= N:
            return ok[:N]
        nbytes += 168 * 2


def _rej_bounded_poly(seed: bytes, eta: int) -> np.ndarray:
    nbytes = 136 * 2
    while True:
        buf = np.frombuffer(hashlib.shake_256(seed).digest(nbytes), dtype=np.uint8).astype(np.int64)
        z = np.stack((buf & 15, buf >> 4), axis=1).reshape(-1)
        if eta == 2:
            z = z[z < 15]
            coeffs = 2 - z % 5
        else:
            z = z[z < 9]
            coeffs = 4 - z
        if len(coeffs) >= N:
            return coeffs[:N] % Q
        nbytes += 136 * 2


def expand_a(p: DsaParams, rho: bytes) -> np.ndarray:
    return np.stack([
        np.stack([_rej_ntt_poly(rho + bytes([s, r])) for s in range(p.l)]) for r in range(p.k)
    ])


def expand_s(p: DsaParams, rho_prime: bytes) -> tuple[np.ndarray, np.ndarray]:
    s1 = np.stack([_rej_bounded_poly(rho_prime + r.to_bytes(2, "little"), p.eta) for r in range(p.l)])
    s2 = np.stack([
        _rej_bounded_poly(rho_prime + (r + p.l).to_bytes(2, "little"), p.eta) for r in range(p.k)
    ])
    return s1, s2


def expand_mask(p: DsaParams, rho_pp: bytes, kappa: int) -> np.ndarray:
    width = p.gamma1.bit_length()  # 20 for gamma1 = 2^19
    polys = []
    for r in range(p.l):
        buf = hashlib.shake_256(rho_pp + (kappa + r).to_bytes(2, "little")).digest(32 * width)
        polys.append((p.gamma1 - _unpack(buf, width)) % Q)
    return np.stack(polys)


def sample_in_ball(p: DsaParams, seed: bytes) -> np.ndarray:
    stream = hashlib.shake_256(seed).digest(8 + 136 * 4)
    signs = int.from_bytes(stream[:8], "little")
    c = np.zeros(N, dtype=np.int64)
    pos = 8
    for i in range(N - p.tau, N):
        while True:
            if pos >= len(stream):
                stream = hashlib.shake_256(seed).digest(len(stream) * 2)
            j = stream[pos]
            pos += 1
            if j <= i:
                break
        c[i] = c[j]
        c[j] = 1 - 2 * (signs & 1)
        signs >>= 1
    return c % Q


# -- rounding --

def power2round(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = r % Q
    r0 = r & ((1 << D) - 1)
    r0 = np.where(r0 > 1 << (D - 1), r0 - (1 << D), r0)
    return (r - r0) >> D, r0


def decompose(p: DsaParams, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = r % Q
    two_g2 = 2 * p.gamma2
    r0 = r % two_g2
    r0 = np.where(r0 > p.gamma2, r0 - two_g2, r0)
    wrap = (r - r0) == Q - 1
    r1 = np.where(wrap, 0, (r - r0) // two_g2)
    r0 = np.where(wrap, r0 - 1, r0)
    return r1, r0


def high_bits(p: DsaParams, r: np.ndarray) -> np.ndarray:
    return decompose(p, r)[0]


def low_bits(p: DsaParams, r: np.ndarray) -> np.ndarray:
    return decompose(p, r)[1]


def make_hint(p: DsaParams, z: np.ndarray, r: np.ndarray) -> np.ndarray:
    return (high_bits(p, r) != high_bits(p, r + z)).astype(np.int64)


def use_hint(p: DsaParams, h: np.ndarray, r: np.ndarray) -> np.ndarray:
    m = (Q - 1) // (2 * p.gamma2)
    r1, r0 = decompose(p, r)
    up = (h == 1) & (r0 > 0)
    down = (h == 1) & (r0 <= 0)
    return np.where(up, (r1 + 1) % m, np.where(down, (r1 - 1) % m, r1))


# -- encodings --

def _eta_bits(p: DsaParams) -> int:
    return 3 if p.eta == 2 else 4


def pk_encode(rho: bytes, t1: np.ndarray) -> bytes:
    return rho + _pack(t1, 10)


def pk_decode(p: DsaParams, pk: bytes) -> tuple[bytes, np.ndarray]:
    return pk[:32], _unpack(pk[32:], 10).reshape(p.k, N)


def sk_encode(p, rho, key, tr, s1, s2, t0) -> bytes:
    eb = _eta_bits(p)
    return (
        rho + key + tr
        + _pack((p.eta - _center(s1)), eb)
        + _pack((p.eta - _center(s2)), eb)
        + _pack(((1 << (D - 1)) - t0), D)
    )


def sk_decode(p: DsaParams, sk: bytes):
    eb = _eta_bits(p)
    rho, key = sk[:32], sk[32:64]
    off = 64 + p.tr_bytes
    tr = sk[64:off]
    n1 = 32 * eb * p.l
    n2 = 32 * eb * p.k
    s1 = (p.eta - _unpack(sk[off:off + n1], eb)).reshape(p.l, N)
    s2 = (p.eta - _unpack(sk[off + n1:off + n1 + n2], eb)).reshape(p.k, N)
    t0 = ((1 << (D - 1)) - _unpack(sk[off + n1 + n2:], D)).reshape(p.k, N)
    return rho, key, tr, s1 % Q, s2 % Q, t0 % Q


def w1_encode(p: DsaParams, w1: np.ndarray) -> bytes:
    width = ((Q - 1) // (2 * p.gamma2) - 1).bit_length()
    return _pack(w1, width)


def hint_pack(p: DsaParams, h: np.ndarray) -> bytes:
    y = bytearray(p.omega + p.k)
    index = 0
    for i in range(p.k):
        for j in np.flatnonzero(h[i]):
            y[index] = int(j)
            index += 1
        y[p.omega + i] = index
    return bytes(y)


def hint_unpack(p: DsaParams, y: bytes) -> np.ndarray | None:
    h = np.zeros((p.k, N), dtype=np.int64)
    index = 0
    for i in range(p.k):
        end = y[p.omega + i]
        if end < index or end > p.omega:
            return None
        first = index
        while index < end:
            if index > first and y[index - 1] >= y[index]:
                return None
            h[i, y[index]] = 1
            index += 1
    if any(y[index:p.omega]):
        return None
    return h


def sig_encode(p: DsaParams, ctilde: bytes, z: np.ndarray, h: np.ndarray) -> bytes:
    width = p.gamma1.bit_length()
    return ctilde + _pack(p.gamma1 - _center(z), width) + hint_pack(p, h)


def sig_decode(p: DsaParams, sig: bytes):
    width = p.gamma1.bit_length()
    zlen = 32 * width * p.l
    ctilde = sig[:p.ctilde_bytes]
    z = (p.gamma1 - _unpack(sig[p.ctilde_bytes:p.ctilde_bytes + zlen], width)).reshape(p.l, N)
    h = hint_unpack(p, sig[p.ctilde_bytes + zlen:])
    return ctilde, z, h


# -- core algorithms --

def _mat_vec(a_hat: np.ndarray, v_hat: np.ndarray) -> np.ndarray:
    return (a_hat * v_hat[None, :, :] % Q).sum(axis=1) % Q


def keygen_internal(p: DsaParams, xi: bytes) -> tuple[bytes, bytes]:
    if p.fips:
        seed = _H(xi + bytes([p.k, p.l]), 128)
    else:
        seed = _H(xi, 128)
    rho, rho_prime, key = seed[:32], seed[32:96], seed[96:]
    a_hat = expand_a(p, rho)
    s1, s2 = expand_s(p, rho_prime)
    t = (ntt_inv(_mat_vec(a_hat, ntt(s1))) + s2) % Q
    t1, t0 = power2round(t)
    pk = pk_encode(rho, t1)
    tr = _H(pk, p.tr_bytes)
    return pk, sk_encode(p, rho, key, tr, s1, s2, t0)


def _mu(p: DsaParams, tr: bytes, message: bytes) -> bytes:
    return _H(tr + message, 64)


def sign_internal(p: DsaParams, sk: bytes, message: bytes, rnd: bytes | None = None) -> bytes:
    """Sign an already-formatted message.

    For FIPS 204 ``rnd`` is 32 bytes (zeros gives the deterministic
    variant). For round 3 ``rnd`` is None (deterministic) or 64 bytes.
    """
    if len(sk) != p.sk_bytes:
        raise LengthMismatch(f"{p.name} sk must be {p.sk_bytes} bytes, got {len(sk)}")
    rho, key, tr, s1, s2, t0 = sk_decode(p, sk)
    s1_hat, s2_hat, t0_hat = ntt(s1), ntt(s2), ntt(t0)
    a_hat = expand_a(p, rho)
    mu = _mu(p, tr, message)
    if p.fips:
        rho_pp = _H(key + (rnd if rnd is not None else bytes(32)) + mu, 64)
    else:
        rho_pp = rnd if rnd is not None else _H(key + mu, 64)
    secrets_hat = np.concatenate((s1_hat, s2_hat, t0_hat))
    kappa = 0
    while True:
        y = expand_mask(p, rho_pp, kappa)
        kappa += p.l
        w = ntt_inv(_mat_vec(a_hat, ntt(y)))
        w1 = high_bits(p, w)
        ctilde = _H(mu + w1_encode(p, w1), p.ctilde_bytes)
        c_hat = ntt(sample_in_ball(p, ctilde))
        prods = ntt_inv(c_hat * secrets_hat % Q)
        cs1, cs2, ct0 = prods[:p.l], prods[p.l:p.l + p.k], prods[p.l + p.k:]
        z = (y + cs1) % Q
        if _inf_norm(z) >= p.gamma1 - p.beta:
            continue
        r = (w - cs2) % Q
        if int(np.abs(low_bits(p, r)).max()) >= p.gamma2 - p.beta:
            continue
        if _inf_norm(ct0) >= p.gamma2:
            continue
        h = make_hint(p, (Q - ct0) % Q, (r + ct0) % Q)
        if int(h.sum()) > p.omega:
            continue
        return sig_encode(p, ctilde, z, h)


def verify_internal(p: DsaParams, pk: bytes, message: bytes, sig: bytes) -> bool:
    if len(pk) != p.pk_bytes or len(sig) != p.sig_bytes:
        return False
    rho, t1 = pk_decode(p, pk)
    ctilde, z, h = sig_decode(p, sig)
    if h is None:
        return False
    if int(np.abs(z).max()) >= p.gamma1 - p.beta:
        return False
    a_hat = expand_a(p, rho)
    tr = _H(pk, p.tr_bytes)
    mu = _mu(p, tr, message)
    c_hat = ntt(sample_in_ball(p, ctilde))
    az = _mat_vec(a_hat, ntt(z % Q))
    ct1 = c_hat * ntt((t1 << D) % Q) % Q
    w_approx = ntt_inv((az - ct1) % Q)
    w1 = use_hint(p, h, w_approx)
    return hmac.compare_digest(ctilde, _H(mu + w1_encode(p, w1), p.ctilde_bytes))


def _format_pure(message: bytes, ctx: bytes) -> bytes:
    if len(ctx) > 255:
        raise LengthMismatch("context string longer than 255 bytes")
    return bytes([0, len(ctx)]) + ctx + message


def keygen(p: DsaParams, seed: bytes) -> tuple[bytes, bytes]:
    if len(seed) != 32:
        raise LengthMismatch("signature keygen seed must be 32 bytes")
    return keygen_internal(p, seed)


def sign(p: DsaParams, sk: bytes, message: bytes, rnd: bytes | None = None, ctx: bytes = b"") -> bytes:
    """External signing interface: pure ML-DSA with context, or raw round-3 Dilithium."""
    if p.fips:
        return sign_internal(p, sk, _format_pure(message, ctx), rnd)
    return sign_internal(p, sk, message, rnd)


def verify(p: DsaParams, pk: bytes, message: bytes, sig: bytes, ctx: bytes = b"") -> bool:
    if p.fips:
        if len(ctx) > 255:
            return False
        return verify_internal(p, pk, _format_pure(message, ctx), sig)
    return verify_internal(p, pk, message, sig)
