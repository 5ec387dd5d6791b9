"""
Counter-based random streams for corruption plans.

Draws come from numpy's Philox-4x64 bit generator keyed by ``seed + (lane << 64)``,
read as raw 64-bit words. Bounded integers use rejection sampling on those raw
words, and selection is a partial Fisher-Yates shuffle, so a plan depends only
on ``(seed, n, k)`` and is identical on every platform and numpy version that
ships Philox.
"""

import numpy as np

SELECTION_LANE = 0
FLIP_LANE = 1

_WORD = 2**64


class CounterStream:
    """Stream of unsigned 64-bit words for one ``(seed, lane)`` pair."""

    def __init__(self, seed: int, lane: int = SELECTION_LANE, chunk: int = 1024):
        if not 0 <= seed < _WORD:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}.")
        self._bit_generator = np.random.Philox(key=seed + (lane << 64))
        self._chunk = chunk
        self._buffer: list[int] = []
        self._position = 0

    def next_word(self) -> int:
        if self._position == len(self._buffer):
            self._buffer = [int(word) for word in self._bit_generator.random_raw(self._chunk)]
            self._position = 0
        word = self._buffer[self._position]
        self._position += 1
        return word

    def bounded(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` without modulo bias."""
        if bound < 1:
            raise ValueError(f"bound must be >= 1, got {bound}.")
        limit = _WORD - (_WORD % bound)
        while True:
            word = self.next_word()
            if word < limit:
                return word % bound


def sample_without_replacement(n: int, k: int, seed: int) -> np.ndarray:
    """Sorted uniform sample of ``k`` distinct indices from ``range(n)``."""
    if not 0 <= k <= n:
        raise ValueError(f"Cannot draw {k} of {n} indices.")
    stream = CounterStream(seed, SELECTION_LANE)
    # Only the first k positions of the permutation are materialised.
    swapped: dict[int, int] = {}
    chosen = []
    for i in range(k):
        j = i + stream.bounded(n - i)
        chosen.append(swapped.get(j, j))
        swapped[j] = swapped.get(i, i)
    return np.array(sorted(chosen), dtype=np.int64)
