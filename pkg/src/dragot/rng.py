"""Counter-based random streams for reproducible experiments.

Every random quantity in this library is derived from a ``RngStream``, a thin
wrapper around the Philox 4x64 bit generator. A stream is addressed by
``(seed, stream)`` and a word counter, and the counter advances by exactly the
number of 64-bit words consumed. Because Philox is counter-based, a stream can
be reconstructed at any position in O(1), independent streams never share
state, and results are identical across platforms and across chunkings of the
same draws.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4  # Philox 4x64 emits four 64-bit words per counter tick


class RngStream:
    """A deterministic stream of uniform and normal variates.

    Identical ``(seed, stream, counter)`` triples produce identical outputs,
    and drawing ``n`` words then ``m`` words equals drawing ``n + m`` words at
    once. Uniforms are mapped to the open interval (0, 1) so that inverse-CDF
    transforms never hit the boundaries.
    """

    __slots__ = ("seed", "stream", "counter", "_bg", "_bg_pos")

    def __init__(self, seed: int, stream: int = 0, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        if counter < 0:
            raise ValueError("counter must be nonnegative")
        self.counter = int(counter)
        self._bg = None
        self._bg_pos = -1

    def split(self, stream: int) -> "RngStream":
        """Independent stream with the same seed and a fresh counter."""
        return RngStream(self.seed, stream, 0)

    def clone(self) -> "RngStream":
        return RngStream(self.seed, self.stream, self.counter)

    def raw_words(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words; advances the counter by ``n``."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n == 0:
            return np.empty(0, dtype=np.uint64)
        if self._bg is None or self._bg_pos != self.counter:
            block, offset = divmod(self.counter, _WORDS_PER_BLOCK)
            bg = np.random.Philox(
                key=[self.seed, self.stream],
                counter=[block & _MASK64, 0, 0, 0],
            )
            if offset:
                bg.random_raw(offset)
            self._bg = bg
        words = self._bg.random_raw(n)
        self.counter += n
        self._bg_pos = self.counter
        return words

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` iid uniforms on the open interval (0, 1)."""
        w = self.raw_words(n)
        return ((w >> np.uint64(11)) + 0.5) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """``n`` iid standard normals via the inverse CDF."""
        return ndtri(self.uniforms(n))

    def __repr__(self) -> str:
        return (
            f"RngStream(seed={self.seed}, stream={self.stream}, "
            f"counter={self.counter})"
        )
