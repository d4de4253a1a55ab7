"""Stable token hashing for the feature and word vocabularies.

FNV-1a (64-bit) over UTF-8 bytes, reduced modulo a power-of-two table
size. The hash is fixed by this module, never by the Python runtime, so
model files stay valid across processes and machines.
"""

from __future__ import annotations

import numpy as np

from . import kernels

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

HASH_NAME = "fnv1a64"


def fnv1a64(data: bytes) -> int:
    """Reference implementation; the batch kernel must agree with this."""
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def fnv1a64_bulk(data: bytes) -> int:
    """Same digest as ``fnv1a64``, but large payloads go through the batch
    kernel; a byte-at-a-time Python loop over a model file would dominate
    save and load times."""
    if not kernels.USING_NUMBA or len(data) < (1 << 16):
        return fnv1a64(data)
    buf = np.frombuffer(data, dtype=np.uint8)
    offsets = np.array([0, len(data)], dtype=np.int64)
    out = np.empty(1, dtype=np.uint64)
    kernels.fnv1a64_batch(buf, offsets, out)
    return int(out[0])


def stable_hash(token: str) -> int:
    return fnv1a64(token.encode("utf-8"))


class TokenHasher:
    """Memoized token -> bucket index map for a 2**bits table.

    Repeated tokens are the common case (feature names, recurring words),
    so each distinct string is hashed once. Misses are hashed in batch
    through the compiled kernel when it is active.
    """

    def __init__(self, bits: int):
        if not 1 <= bits <= 32:
            raise ValueError(f"bits must be in [1, 32], got {bits}")
        self.bits = bits
        self.size = 1 << bits
        self._memo: dict[str, int] = {}

    def index(self, token: str) -> int:
        idx = self._memo.get(token)
        if idx is None:
            idx = stable_hash(token) & (self.size - 1)
            self._memo[token] = idx
        return idx

    def index_all(self, tokens: list[str]) -> np.ndarray:
        out = np.empty(len(tokens), dtype=np.int64)
        misses: list[str] = []
        miss_at: list[int] = []
        for i, tok in enumerate(tokens):
            idx = self._memo.get(tok)
            if idx is None:
                misses.append(tok)
                miss_at.append(i)
            else:
                out[i] = idx
        if misses:
            for i, tok, idx in zip(miss_at, misses, self._hash_batch(misses)):
                idx = int(idx) & (self.size - 1)
                self._memo[tok] = idx
                out[i] = idx
        return out

    def _hash_batch(self, tokens: list[str]) -> np.ndarray:
        if not kernels.USING_NUMBA:
            return np.array([stable_hash(t) for t in tokens], dtype=np.uint64)
        blobs = [t.encode("utf-8") for t in tokens]
        offsets = np.zeros(len(blobs) + 1, dtype=np.int64)
        np.cumsum([len(b) for b in blobs], out=offsets[1:])
        buf = np.frombuffer(b"".join(blobs), dtype=np.uint8)
        out = np.empty(len(blobs), dtype=np.uint64)
        kernels.fnv1a64_batch(buf, offsets, out)
        return out
