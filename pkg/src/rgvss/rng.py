"""Bit sources for grid generation.

Stream order is part of the determinism contract: a seeded source derives
PCG64 state from ``SeedSequence(seed)`` and emits the 64-bit raw outputs
least-significant bit first.  Callers draw bits in row-major order, one
image after another, so identical inputs replay identically.
"""

from __future__ import annotations

import secrets

import numpy as np

SEED_BITS = 64


class RandomSource:
    """Seeded, deterministic bit stream.

    ``position`` counts bits consumed so far.  Use :meth:`spawn` to derive
    independent child streams without disturbing this one.
    """

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 1 << SEED_BITS:
            raise ValueError(f"seed must be an integer in [0, 2**{SEED_BITS})")
        self.seed: int | None = int(seed)
        self._seq = np.random.SeedSequence(self.seed)
        self._gen = np.random.PCG64(self._seq)
        self._buffer = np.empty(0, dtype=np.uint8)
        self.position = 0

    secure = False

    def _words(self, count: int) -> np.ndarray:
        raw = self._gen.random_raw(count).astype("<u8")
        return np.unpackbits(raw.view(np.uint8), bitorder="little")

    def bits(self, count: int) -> np.ndarray:
        """Next ``count`` fair bits as a ``uint8`` vector."""
        if count < 0:
            raise ValueError("count must be non-negative")
        if count > len(self._buffer):
            missing = count - len(self._buffer)
            fresh = self._words((missing + 63) // 64)
            self._buffer = np.concatenate([self._buffer, fresh])
        out, self._buffer = self._buffer[:count], self._buffer[count:]
        self.position += count
        return out

    def grid(self, width: int, height: int) -> np.ndarray:
        return self.bits(width * height).reshape(height, width)

    def spawn(self, key: int) -> "RandomSource":
        """Child stream keyed by ``key``; same (seed, key) gives the same child."""
        child = RandomSource.__new__(RandomSource)
        child.seed = self.seed
        seq = np.random.SeedSequence(self.seed, spawn_key=(int(key),))
        child._seq = seq
        child._gen = np.random.PCG64(seq)
        child._buffer = np.empty(0, dtype=np.uint8)
        child.position = 0
        return child

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, position={self.position})"


class SecureRandomSource(RandomSource):
    """Operating-system CSPRNG; never replayable and carries no seed."""

    secure = True

    def __init__(self):
        self.seed = None
        self._buffer = np.empty(0, dtype=np.uint8)
        self.position = 0

    def _words(self, count: int) -> np.ndarray:
        raw = np.frombuffer(secrets.token_bytes(8 * count), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")

    def spawn(self, key: int) -> "SecureRandomSource":
        return SecureRandomSource()

    def __repr__(self):
        return f"SecureRandomSource(position={self.position})"


def make_source(seed: int | None = None) -> RandomSource:
    """Seeded source when ``seed`` is given, otherwise the secure one."""
    return SecureRandomSource() if seed is None else RandomSource(seed)
