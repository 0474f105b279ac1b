"""Word sources feeding the statistical tests.

A source wraps either a live generator or a file of packed bytes and hands
out consecutive big-endian 32-bit words. Tests that would need more words
than the source can supply raise InsufficientDataError instead of returning
a verdict.
"""

from __future__ import annotations

import numpy as np


class InsufficientDataError(Exception):
    def __init__(self, test_name: str, requested: int, available: int):
        self.test_name = test_name
        self.requested = requested
        self.available = available
        super().__init__(
            f"{test_name}: needs {requested} words, only {available} available"
        )


class BitStreamSource:
    """Sequential uint32 word supply with an optional hard limit."""

    def __init__(self, description: str, pull, limit: int = None):
        self.description = description
        self._pull = pull  # callable: n -> np.uint32 array of length <= n
        self._limit = limit
        self.consumed = 0

    def words(self, n: int, test_name: str = "test") -> np.ndarray:
        if self._limit is not None and self.consumed + n > self._limit:
            raise InsufficientDataError(test_name, n, self._limit - self.consumed)
        out = self._pull(n)
        if out.size < n:
            raise InsufficientDataError(test_name, n, self.consumed + out.size)
        self.consumed += n
        return out

    def reals(self, n: int, test_name: str = "test") -> np.ndarray:
        """Words mapped to [0,1) by w / 2^32."""
        return self.words(n, test_name).astype(np.float64) / 4294967296.0

    @classmethod
    def from_generator(cls, gen, description: str = None, limit: int = None):
        """Wrap anything exposing words(n) -> uint32 array (CiGenerator) or
        fill(n) (XorShift32)."""
        if hasattr(gen, "words"):
            pull = gen.words
        elif hasattr(gen, "fill"):
            pull = gen.fill
        else:
            raise TypeError("generator must expose words(n) or fill(n)")
        if description is None:
            description = type(gen).__name__
        return cls(description, pull, limit)

    @classmethod
    def from_bytes(cls, data: bytes, description: str = "bytes"):
        words = np.frombuffer(data[: len(data) - len(data) % 4], dtype=">u4")
        words = words.astype(np.uint32)
        state = {"pos": 0}

        def pull(n):
            start = state["pos"]
            state["pos"] = start + n
            return words[start:start + n]

        return cls(description, pull, limit=words.size)

    @classmethod
    def from_file(cls, path, description: str = None):
        with open(path, "rb") as fh:
            data = fh.read()
        return cls.from_bytes(data, description or str(path))
