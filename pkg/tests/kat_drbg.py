"""NIST AES-256 CTR_DRBG as used by the PQC competition KAT generators."""

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


def _aes_ecb(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def _inc(v: bytes) -> bytes:
    return ((int.from_bytes(v, "big") + 1) % (1 << 128)).to_bytes(16, "big")


class NistKatDrbg:
    def __init__(self, entropy_input: bytes):
        assert len(entropy_input) == 48
        self.key = bytes(32)
        self.v = bytes(16)
        self._update(entropy_input)

    def _update(self, provided: bytes | None):
        temp = b""
        for _ in range(3):
            self.v = _inc(self.v)
            temp += _aes_ecb(self.key, self.v)
        if provided is not None:
            temp = bytes(a ^ b for a, b in zip(temp, provided))
        self.key, self.v = temp[:32], temp[32:]

    def random_bytes(self, n: int) -> bytes:
        out = b""
        while len(out) < n:
            self.v = _inc(self.v)
            out += _aes_ecb(self.key, self.v)
        self._update(None)
        return out[:n]
