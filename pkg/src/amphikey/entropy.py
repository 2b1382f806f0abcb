"""Entropy sources.

Every randomized operation takes an explicit entropy source. Production code
uses :class:`SystemEntropy`; :class:`PinnedEntropy` exists so that golden
transcripts and scenario runs can be replayed byte for byte.
"""

from __future__ import annotations

import hashlib
import os
from typing import Protocol


class Entropy(Protocol):
    def random_bytes(self, n: int) -> bytes: ...


class SystemEntropy:
    """Operating-system CSPRNG."""

    def random_bytes(self, n: int) -> bytes:
        return os.urandom(n)

    def __repr__(self):
        return "SystemEntropy()"


class PinnedEntropy:
    """Deterministic SHAKE-256 stream keyed by a seed. Test and replay use only."""

    def __init__(self, seed: bytes | str | int):
        if isinstance(seed, int):
            seed = seed.to_bytes(8, "big", signed=False)
        elif isinstance(seed, str):
            seed = seed.encode()
        self._seed = bytes(seed)
        self._counter = 0

    def random_bytes(self, n: int) -> bytes:
        block = hashlib.shake_256(
            b"amphikey/pinned" + self._counter.to_bytes(8, "big") + self._seed
        ).digest(n)
        self._counter += 1
        return block

    def fork(self, label: str) -> "PinnedEntropy":
        return PinnedEntropy(hashlib.sha256(self._seed + label.encode()).digest())

    def __repr__(self):
        return f"PinnedEntropy(counter={self._counter})"


class FixedEntropy:
    """Replays a fixed queue of byte strings, one per call (KAT harness)."""

    def __init__(self, *chunks: bytes):
        self._chunks = list(chunks)

    def random_bytes(self, n: int) -> bytes:
        if not self._chunks:
            raise RuntimeError("FixedEntropy exhausted")
        chunk = self._chunks.pop(0)
        if len(chunk) != n:
            raise RuntimeError(f"FixedEntropy: queued {len(chunk)} bytes, asked for {n}")
        return chunk


default_entropy = SystemEntropy()
