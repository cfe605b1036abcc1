"""Multiply-mod hash functions and in-block bit-address selection.

Keys are unsigned integers of at most 64 bits.  A hash function is
``x -> ((a*x) mod 2**64) mod b`` with an odd multiplier ``a`` coprime to the
range ``b``; even ranges get a shift or xor-fold correction for uniformity.
Hashing arbitrary byte strings is the caller's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1

# branch codes shared with the compiled kernels
MOD_ODD = 0
SHIFT_POW2 = 1
XOR_EVEN = 2


class SplitMix64:
    """Small deterministic 64-bit generator (splitmix64).

    All hash-function parameters of a filter are drawn from one of these so
    that a stored seed reproduces the filter bit-exactly, independent of
    numpy's generator streams.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


@dataclass(frozen=True)
class HashSpec:
    """Parameters of one multiply-mod hash function.

    ``make_hash`` draws specs whose multiplier is odd, at least 2**63 and
    coprime to ``b``; directly constructed specs (tests, toy examples) may
    use any positive multiplier.
    """

    a: int
    b: int
    u: int = 64

    def __post_init__(self):
        if self.b < 1:
            raise ValueError(f"hash range must be >= 1, got {self.b}")
        if not 1 <= self.u <= 64:
            raise ValueError(f"key bit-width must be in [1, 64], got {self.u}")
        if self.a < 1:
            raise ValueError(f"multiplier must be >= 1, got {self.a}")


def hash_branch(b: int, u: int = 64) -> tuple[int, int]:
    """Evaluation branch and shift amount for range ``b``.

    Odd ranges use a plain modulo.  Power-of-two ranges keep the most
    significant bits of ``a*x``.  Other even ranges fold the upper half
    onto the lower half with xor before the modulo.
    """
    if b & 1:
        return MOD_ODD, 0
    if b & (b - 1) == 0:
        return SHIFT_POW2, u - (b.bit_length() - 1)
    return XOR_EVEN, u // 2


def eval_hash(h: HashSpec, x: int) -> int:
    """Hash a key to a value in ``[0, h.b)``."""
    ax = (h.a * x) & MASK64
    mode, s = hash_branch(h.b, h.u)
    if mode == MOD_ODD:
        return ax % h.b
    if mode == SHIFT_POW2:
        return (ax >> s) % h.b
    return (ax ^ (ax >> s)) % h.b


def eval_hash_many(h: HashSpec, keys: np.ndarray) -> np.ndarray:
    """Vectorized ``eval_hash`` over a uint64 key array."""
    keys = np.asarray(keys, dtype=np.uint64)
    ax = np.uint64(h.a) * keys  # wraps mod 2**64
    mode, s = hash_branch(h.b, h.u)
    b = np.uint64(h.b)
    if mode == MOD_ODD:
        return ax % b
    if mode == SHIFT_POW2:
        return (ax >> np.uint64(s)) % b
    return (ax ^ (ax >> np.uint64(s))) % b


def make_hash(rng: SplitMix64, b: int, u: int = 64) -> HashSpec:
    """Draw a hash function with range ``b`` from the family.

    The multiplier is uniform over the odd integers in [2**63, 2**64) and is
    redrawn until it is coprime to ``b``.  Deterministic given the generator
    state.
    """
    if b < 1:
        raise ValueError(f"hash range must be >= 1, got {b}")
    while True:
        a = rng.next_u64() | (1 << 63) | 1
        if math.gcd(a, b) == 1:
            return HashSpec(a=a, b=b, u=u)


@dataclass(frozen=True)
class BitSelector:
    """The per-key bit addresses within a block, drawn one of two ways.

    ``random``: k independent hash functions into [block_bits]; the value set
    may contain fewer than k distinct addresses when outputs collide.
    ``distinct``: hash i maps into a range shrunk by i-1 and values are
    adjusted past earlier picks, yielding a uniform k-subset of the block.
    """

    strategy: str
    k: int
    specs: tuple[HashSpec, ...]

    def __post_init__(self):
        if self.strategy not in ("random", "distinct"):
            raise ValueError(f"unknown bit strategy {self.strategy!r}")
        if self.k < 1:
            raise ValueError(f"need at least one bit address function, got {self.k}")
        if len(self.specs) != self.k:
            raise ValueError("need one hash spec per bit address function")
        b0 = self.specs[0].b
        for i, spec in enumerate(self.specs):
            want = b0 if self.strategy == "random" else b0 - i
            if spec.b != want:
                raise ValueError(
                    f"spec {i} has range {spec.b}, expected {want} "
                    f"for strategy {self.strategy!r}"
                )

    @property
    def block_bits(self) -> int:
        return self.specs[0].b

    @classmethod
    def draw(cls, rng: SplitMix64, strategy: str, k: int, block_bits: int) -> "BitSelector":
        if not 1 <= k <= block_bits:
            raise ValueError(f"k must be in [1, {block_bits}], got {k}")
        if strategy == "random":
            specs = tuple(make_hash(rng, block_bits) for _ in range(k))
        elif strategy == "distinct":
            specs = tuple(make_hash(rng, block_bits - i) for i in range(k))
        else:
            raise ValueError(f"unknown bit strategy {strategy!r}")
        return cls(strategy=strategy, k=k, specs=specs)

    def select(self, x: int) -> set[int]:
        if self.strategy == "random":
            return select_bits_random(self, x)
        return select_bits_distinct(self, x)


def select_bits_random(sel: BitSelector, x: int) -> set[int]:
    """Bit addresses from k independent hashes; collisions collapse."""
    return {eval_hash(spec, x) for spec in sel.specs}


def select_bits_distinct(sel: BitSelector, x: int) -> set[int]:
    """Exactly k distinct bit addresses, a uniform k-subset of the block."""
    raws = [eval_hash(spec, x) for spec in sel.specs]
    return set(adjust_distinct(raws))


def adjust_distinct(raws: list[int]) -> list[int]:
    """Map raw values (raws[i] in a range shrunk by i) to distinct addresses.

    Each raw value is bumped past every already-chosen value that is smaller
    or equal to its updated value, re-checking after each bump; the chosen
    values are kept sorted throughout (dynamic insertion sort).  The result
    is the raws[i]-th smallest address not chosen so far, in sorted order.
    """
    chosen: list[int] = []
    for r in raws:
        v = r
        pos = 0
        for w in chosen:
            if w <= v:
                v += 1
                pos += 1
            else:
                break
        chosen.insert(pos, v)
    return chosen


def collision_probability(k: int, block_bits: int = 512) -> float:
    """Probability that k independent uniform draws from [block_bits] collide.

    This is the birthday bound 1 - prod_{i<k} (B-i)/B, the chance that the
    random strategy yields fewer than k distinct addresses.
    """
    if not 1 <= k <= block_bits:
        raise ValueError(f"k must be in [1, {block_bits}], got {k}")
    p_distinct = 1.0
    for i in range(k):
        p_distinct *= (block_bits - i) / block_bits
    return 1.0 - p_distinct
