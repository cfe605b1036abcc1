"""Contiguous array of fixed-width bit blocks with bit-level primitives.

Blocks are stored as 64-bit words, least-significant-bit first: bit ``i`` of
a block lives in word ``i // 64`` at position ``i % 64``.  This fixes the
serialized layout bit-exactly.  The default block width of 512 bits matches
one cache line; each block is allocated cache-line aligned so a block never
straddles two lines.
"""

from __future__ import annotations

import numpy as np

DEFAULT_BLOCK_BITS = 512
CACHE_LINE_BYTES = 64

# word-multiple widths are the real layout; the tiny power-of-two widths
# exist only so exhaustive property tests stay tractable
_TOY_BLOCK_BITS = (8, 16, 32)


def valid_block_bits(block_bits: int) -> bool:
    return (block_bits > 0 and block_bits % 64 == 0) or block_bits in _TOY_BLOCK_BITS


def popcount_words(words: np.ndarray) -> np.ndarray:
    """Per-word set-bit counts (hardware popcount via numpy)."""
    return np.bitwise_count(words)


def _aligned_zeros(num_words: int) -> np.ndarray:
    """Zeroed uint64 array whose data pointer is cache-line aligned."""
    pad = CACHE_LINE_BYTES // 8
    buf = np.zeros(num_words + pad, dtype=np.uint64)
    offset = (-buf.ctypes.data) % CACHE_LINE_BYTES // 8
    return buf[offset : offset + num_words]


class BlockArray:
    """``num_blocks`` zero-initialized blocks of ``block_bits`` bits each."""

    def __init__(self, num_blocks: int, block_bits: int = DEFAULT_BLOCK_BITS):
        if num_blocks < 1:
            raise ValueError(f"need at least one block, got {num_blocks}")
        if not valid_block_bits(block_bits):
            raise ValueError(
                f"block_bits must be a positive multiple of 64 "
                f"(or one of {_TOY_BLOCK_BITS} for testing), got {block_bits}"
            )
        self.num_blocks = num_blocks
        self.block_bits = block_bits
        self.words_per_block = max(1, block_bits // 64)
        self.words = _aligned_zeros(num_blocks * self.words_per_block)

    @property
    def total_bits(self) -> int:
        return self.num_blocks * self.block_bits

    def _check(self, block: int, addrs=()) -> None:
        if not 0 <= block < self.num_blocks:
            raise IndexError(f"block {block} out of range [0, {self.num_blocks})")
        for a in addrs:
            if not 0 <= a < self.block_bits:
                raise IndexError(f"bit address {a} out of range [0, {self.block_bits})")

    def _mask(self, addrs) -> np.ndarray:
        mask = np.zeros(self.words_per_block, dtype=np.uint64)
        for a in addrs:
            mask[a >> 6] |= np.uint64(1) << np.uint64(a & 63)
        return mask

    def block_words(self, block: int) -> np.ndarray:
        """Writable view of one block's words."""
        w = self.words_per_block
        return self.words[block * w : (block + 1) * w]

    def set_bits(self, block: int, addrs) -> None:
        """Set the addressed bits of a block to 1 (idempotent)."""
        self._check(block, addrs)
        self.block_words(block)[:] |= self._mask(addrs)

    def test_all(self, block: int, addrs) -> bool:
        """True iff every addressed bit is 1 (vacuously true when empty)."""
        self._check(block, addrs)
        mask = self._mask(addrs)
        view = self.block_words(block)
        return bool(np.all((view & mask) == mask))

    def popcount_block(self, block: int) -> int:
        """Number of set bits in a block."""
        self._check(block)
        return int(popcount_words(self.block_words(block)).sum())

    def simulate_insertion(self, block: int, addrs) -> tuple[int, int]:
        """(j, a): bits set after inserting ``addrs``, and how many are new.

        Does not modify the block.  ``a == 0`` iff all addresses are
        already set.
        """
        self._check(block, addrs)
        view = self.block_words(block)
        mask = self._mask(addrs)
        j = int(popcount_words(view | mask).sum())
        a = j - int(popcount_words(view).sum())
        return j, a

    def total_set_bits(self) -> int:
        return int(popcount_words(self.words).sum())
