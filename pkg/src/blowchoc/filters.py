"""The three filter kinds and the block-choice cost models.

``standard`` is a plain Bloom filter over a flat bit array.  ``blocked``
confines each key's bits to one cache-line block.  ``blowchoc`` hashes each
key to several candidate blocks and inserts into the cheapest one, which
rebalances block loads and re-uses already set bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .blockstore import BlockArray, valid_block_bits
from .hashing import (
    BitSelector,
    HashSpec,
    SplitMix64,
    eval_hash,
    eval_hash_many,
    hash_branch,
    make_hash,
)

KINDS = ("standard", "blocked", "blowchoc")
COST_KINDS = ("exp", "mix", "la")
MAX_CHOICES = 8

#: default base of the exponential cost, the golden ratio
GOLDEN_BETA = (1 + math.sqrt(5)) / 2


class ConfigError(ValueError):
    """Invalid filter configuration."""


def cost_exp(j: int, a: int, k: int, beta: float, block_bits: int = 512) -> float:
    """Exponential insertion cost: beta**(j / (B/4)) + a/k.

    Grows steeply once a block's load passes one quarter; at 128 of 512 set
    bits the first term is exactly beta.
    """
    return beta ** (j / (block_bits / 4)) + a / k


def cost_mix(j: int, a: int, k: int, sigma: float, block_bits: int = 512) -> float:
    """Local-FPR-based cost: sigma*k*(j / (B/2))**k + a.

    The first term is the resulting local FPR relative to the 2**-k target;
    it reaches exactly k at half load (with sigma = 1), the maximum of the
    second term.
    """
    return sigma * k * (j / (block_bits / 2)) ** float(k) + a


def cost_la(j: int, a: int, k: int, mu: float, block_bits: int = 512) -> float:
    """Lookahead cost: the sigma=1 mixed cost after mu further worst-case
    insertions, k*((j + mu*k) / (B/2))**k + a."""
    return k * ((j + mu * k) / (block_bits / 2)) ** float(k) + a


@dataclass(frozen=True)
class CostModel:
    """One of the block-selection cost rules, with its parameter and k."""

    kind: str
    param: float
    k: int

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ConfigError(f"unknown cost kind {self.kind!r}")
        if self.kind == "exp" and not self.param > 0:
            raise ConfigError(f"exp cost needs a base > 0, got {self.param}")
        if self.kind in ("mix", "la") and self.param < 0:
            raise ConfigError(f"{self.kind} cost needs a parameter >= 0, got {self.param}")
        if self.k < 1:
            raise ConfigError(f"cost model needs k >= 1, got {self.k}")

    def evaluate(self, j: int, a: int, block_bits: int = 512) -> float:
        if self.kind == "exp":
            return cost_exp(j, a, self.k, self.param, block_bits)
        if self.kind == "mix":
            return cost_mix(j, a, self.k, self.param, block_bits)
        return cost_la(j, a, self.k, self.param, block_bits)

    @property
    def code(self) -> int:
        return COST_KINDS.index(self.kind)


def default_cost(k: int) -> CostModel:
    return CostModel(kind="exp", param=GOLDEN_BETA, k=k)


def size_for(n: int, k: int, relative_size: float = 1.0,
             block_bits: int = 512, shards: int = 1) -> tuple[int, int]:
    """Filter size (m bits, M blocks) for n keys at k bits per key.

    The raw size relative_size * n*k/ln(2) makes the expected load 1/2 at
    relative_size 1; it is rounded up to whole blocks and to a multiple of
    the shard count.
    """
    if n < 1:
        raise ConfigError(f"capacity must be >= 1, got {n}")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    raw = relative_size * n * k / math.log(2)
    num_blocks = math.ceil(raw / block_bits)
    num_blocks = ((num_blocks + shards - 1) // shards) * shards
    return num_blocks * block_bits, num_blocks


def overload_fpr(gamma: float, k: int) -> float:
    """FPR of a Bloom filter filled to gamma times its capacity:
    (1 - 2**-gamma)**k."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return (1.0 - 2.0 ** -gamma) ** k


@dataclass(frozen=True)
class FilterConfig:
    """Build parameters for a filter; ``validated()`` normalizes them.

    Size comes from ``n_capacity`` (keys at the design load) scaled by
    ``relative_size``, or directly from ``size_bits``.  ``choices`` defaults
    to 1 for blocked and 2 for blowchoc; the cost model defaults to the
    exponential one with the golden-ratio base.
    """

    kind: str
    k: int
    n_capacity: int | None = None
    size_bits: int | None = None
    choices: int | None = None
    cost: CostModel | None = None
    strategy: str = "random"
    relative_size: float = 1.0
    shards: int = 1
    seed: int = 0
    block_bits: int = 512

    def validated(self) -> "FilterConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown filter kind {self.kind!r}")
        if not valid_block_bits(self.block_bits):
            raise ConfigError(f"invalid block_bits {self.block_bits}")
        if not 1 <= self.k <= self.block_bits:
            raise ConfigError(
                f"k must be in [1, {self.block_bits}] for {self.block_bits}-bit "
                f"blocks, got {self.k}")
        if self.strategy not in ("random", "distinct"):
            raise ConfigError(f"unknown bit strategy {self.strategy!r}")
        if (self.n_capacity is None) == (self.size_bits is None):
            raise ConfigError("give exactly one of n_capacity and size_bits")
        if self.n_capacity is not None and self.n_capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {self.n_capacity}")
        if self.size_bits is not None:
            if self.size_bits < 1:
                raise ConfigError(f"size_bits must be >= 1, got {self.size_bits}")
            if self.relative_size != 1.0:
                raise ConfigError("relative_size only applies to capacity-based sizing")
        if not self.relative_size > 0:
            raise ConfigError(f"relative_size must be > 0, got {self.relative_size}")
        if self.shards < 1:
            raise ConfigError(f"shard count must be >= 1, got {self.shards}")

        choices, cost, strategy = self.choices, self.cost, self.strategy
        if self.kind == "standard":
            if strategy != "random":
                raise ConfigError("the distinct strategy applies only to blocked filters")
            if self.shards != 1:
                raise ConfigError("standard filters do not shard (bits span the whole array)")
            if self.block_bits % 64 != 0:
                raise ConfigError("standard filters need word-multiple block_bits")
            choices, cost = 0, None
        elif self.kind == "blocked":
            if choices not in (None, 1):
                raise ConfigError(f"blocked filters have exactly one choice, got {choices}")
            choices, cost = 1, None
        else:  # blowchoc
            choices = 2 if choices is None else choices
            if not 2 <= choices <= MAX_CHOICES:
                raise ConfigError(
                    f"blowchoc needs between 2 and {MAX_CHOICES} choices, got {choices}")
            cost = default_cost(self.k) if cost is None else cost
            if cost.k != self.k:
                raise ConfigError(f"cost model k={cost.k} does not match filter k={self.k}")
        return replace(self, choices=choices, cost=cost, strategy=strategy,
                       seed=self.seed & ((1 << 64) - 1))

    def sizing(self) -> tuple[int, int]:
        """(m bits, M blocks) for this configuration."""
        if self.size_bits is not None:
            num_blocks = -(-self.size_bits // self.block_bits)
            num_blocks = ((num_blocks + self.shards - 1) // self.shards) * self.shards
            return num_blocks * self.block_bits, num_blocks
        return size_for(self.n_capacity, self.k, self.relative_size,
                        self.block_bits, self.shards)


class Filter:
    """A live filter: configuration, hash functions and the bit store.

    All hash functions are derived from the seed in a fixed order (shard
    hash, then the block hashes, then the bit address hashes), so one seed
    reproduces a filter bit-exactly.

    Scalar ``insert``/``lookup`` spell out the semantics; ``insert_many`` and
    ``contains_many`` run the compiled kernels over key arrays.  Queries are
    read-only and safe to run from several threads; insertion requires a
    single writer per shard.
    """

    def __init__(self, *, kind: str, k: int, choices: int, strategy: str,
                 cost: CostModel | None, block_bits: int, num_blocks: int,
                 shards: int, seed: int, inserted: int = 0,
                 words: np.ndarray | None = None):
        self.kind = kind
        self.k = k
        self.choices = choices
        self.strategy = strategy
        self.cost = cost
        self.shards = shards
        self.seed = seed
        self.inserted = inserted
        if num_blocks % shards != 0:
            raise ConfigError(f"{num_blocks} blocks do not split into {shards} shards")
        self.storage = BlockArray(num_blocks, block_bits)
        if words is not None:
            if words.shape != self.storage.words.shape:
                raise ConfigError("word array does not match the filter geometry")
            self.storage.words[:] = words
        self._derive_hashes()
        self._batch_args = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_config(cls, config: FilterConfig) -> "Filter":
        cfg = config.validated()
        _, num_blocks = cfg.sizing()
        return cls(kind=cfg.kind, k=cfg.k, choices=cfg.choices,
                   strategy=cfg.strategy, cost=cfg.cost,
                   block_bits=cfg.block_bits, num_blocks=num_blocks,
                   shards=cfg.shards, seed=cfg.seed)

    def _derive_hashes(self) -> None:
        rng = SplitMix64(self.seed)
        self.shard_spec: HashSpec = make_hash(rng, self.shards)
        if self.kind == "standard":
            self.block_specs: tuple[HashSpec, ...] = ()
            self.bit_selector = None
            self.bit_specs = tuple(make_hash(rng, self.m) for _ in range(self.k))
        else:
            per_shard = self.num_blocks // self.shards
            self.block_specs = tuple(make_hash(rng, per_shard) for _ in range(self.choices))
            self.bit_selector = BitSelector.draw(rng, self.strategy, self.k, self.block_bits)
            self.bit_specs = self.bit_selector.specs

    # -- geometry ----------------------------------------------------------

    @property
    def num_blocks(self) -> int:
        return self.storage.num_blocks

    @property
    def block_bits(self) -> int:
        return self.storage.block_bits

    @property
    def m(self) -> int:
        return self.storage.total_bits

    @property
    def blocks_per_shard(self) -> int:
        return self.num_blocks // self.shards

    # -- scalar operations -------------------------------------------------

    def shard_of(self, x: int) -> int:
        return eval_hash(self.shard_spec, x)

    def candidate_blocks(self, x: int) -> list[int]:
        """Global indices of the blocks the key may be stored in."""
        base = self.shard_of(x) * self.blocks_per_shard
        return [base + eval_hash(h, x) for h in self.block_specs]

    def choose_block(self, blocks, addrs) -> tuple[int, bool]:
        """Pick the insertion block among candidates for bit set ``addrs``.

        Returns (choice index, no-op flag).  A block that already holds all
        addresses wins outright (lowest index first, nothing to write);
        otherwise the cost model decides, ties going to the lower index.
        """
        sims = []
        for i, b in enumerate(blocks):
            j, a = self.storage.simulate_insertion(b, addrs)
            if a == 0:
                return i, True
            sims.append((j, a))
        if len(blocks) == 1:
            return 0, False
        costs = [self.cost.evaluate(j, a, self.block_bits) for j, a in sims]
        best = min(range(len(costs)), key=costs.__getitem__)
        return best, False

    def insert(self, x: int) -> None:
        """Insert one key; ``lookup(x)`` is True afterwards."""
        if self.kind == "standard":
            bb = self.block_bits
            for spec in self.bit_specs:
                f = eval_hash(spec, x)
                self.storage.set_bits(f // bb, (f % bb,))
        else:
            addrs = self.bit_selector.select(x)
            blocks = self.candidate_blocks(x)
            idx, noop = self.choose_block(blocks, addrs)
            if not noop:
                self.storage.set_bits(blocks[idx], addrs)
        self.inserted += 1

    def lookup(self, x: int) -> bool:
        """Membership query; may err towards True, never towards False."""
        if self.kind == "standard":
            bb = self.block_bits
            return all(
                self.storage.test_all(f // bb, (f % bb,))
                for f in (eval_hash(spec, x) for spec in self.bit_specs)
            )
        addrs = self.bit_selector.select(x)
        return any(self.storage.test_all(b, addrs) for b in self.candidate_blocks(x))

    def __contains__(self, x: int) -> bool:
        return self.lookup(x)

    def load(self) -> float:
        """Fraction of set bits in the whole array."""
        return self.storage.total_set_bits() / self.m

    # -- bulk operations ---------------------------------------------------

    def _kernel_args(self):
        if self._batch_args is None:
            if self.kind == "standard":
                bit_a = np.array([s.a for s in self.bit_specs], dtype=np.uint64)
                mode, shift = hash_branch(self.m)
                self._batch_args = (bit_a, np.uint64(self.m), mode, np.uint64(shift))
            else:
                smode, sshift = hash_branch(self.shards)
                per_shard = self.blocks_per_shard
                bmode, bshift = hash_branch(per_shard)
                specs = self.bit_specs
                self._batch_args = (
                    np.uint64(self.shard_spec.a), np.uint64(self.shards),
                    smode, np.uint64(sshift),
                    per_shard * self.storage.words_per_block,
                    np.array([h.a for h in self.block_specs], dtype=np.uint64),
                    np.uint64(per_shard), bmode, np.uint64(bshift),
                    np.array([s.a for s in specs], dtype=np.uint64),
                    np.array([s.b for s in specs], dtype=np.uint64),
                    np.array([hash_branch(s.b)[0] for s in specs], dtype=np.int64),
                    np.array([hash_branch(s.b)[1] for s in specs], dtype=np.uint64),
                    0 if self.strategy == "random" else 1,
                    self.storage.words_per_block,
                )
        return self._batch_args

    def _cost_args(self):
        code, param = (self.cost.code, self.cost.param) if self.cost else (0, 0.0)
        return code, param, self.block_bits / 4.0, self.block_bits / 2.0

    def insert_many(self, keys: np.ndarray) -> None:
        """Insert a key array in order (single writer per shard assumed)."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if self.kind == "standard":
            _kernels.insert_flat(self.storage.words, keys, *self._kernel_args())
        else:
            _kernels.insert_blocks(self.storage.words, keys,
                                   *self._kernel_args(), *self._cost_args())
        self.inserted += keys.shape[0]

    def contains_many(self, keys: np.ndarray) -> np.ndarray:
        """Boolean membership array for a key array (read-only, thread-safe)."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        out = np.empty(keys.shape[0], dtype=np.uint8)
        if self.kind == "standard":
            _kernels.contains_flat(self.storage.words, keys, *self._kernel_args(), out)
        else:
            _kernels.contains_blocks(self.storage.words, keys, *self._kernel_args(), out)
        return out.view(np.bool_)

    def count_hits(self, keys: np.ndarray) -> int:
        return int(self.contains_many(keys).sum())

    def route_many(self, keys: np.ndarray) -> np.ndarray:
        """Shard index per key (vectorized shard hash)."""
        return eval_hash_many(self.shard_spec, keys)
