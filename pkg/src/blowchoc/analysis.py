"""Empirical FPR estimation, block-load histograms and sizing analyses.

The empirical route queries keys known not to be inserted and counts the
false True answers; it exercises the real hash functions instead of assuming
them ideal.  Key generation keeps inserted and negative keys disjoint by
parity: inserted keys are even 64-bit integers, negatives odd.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .blockstore import popcount_words
from .filters import Filter, FilterConfig
from .hashing import SplitMix64
from .sharding import build_sharded

DEFAULT_CHUNK = 1 << 23


class BracketError(RuntimeError):
    """The FPR curve never crossed the target within the search interval."""


def derive_seed(seed: int, index: int) -> int:
    """Decorrelated 64-bit sub-seed number ``index`` of a master seed."""
    return SplitMix64(seed + index).next_u64()


def even_keys(n: int, seed: int) -> np.ndarray:
    """n random even 64-bit keys (the insertable domain)."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2**64, size=n, dtype=np.uint64) & ~np.uint64(1)


def odd_keys(n: int, seed: int) -> np.ndarray:
    """n random odd 64-bit keys, disjoint from every even key."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2**64, size=n, dtype=np.uint64) | np.uint64(1)


@dataclass(frozen=True)
class FprEstimate:
    """Result of querying N never-inserted keys, W of which came back True."""

    n_queries: int
    false_positives: int

    @property
    def fpr(self) -> float:
        return self.false_positives / self.n_queries

    @property
    def stderr(self) -> float:
        p = self.fpr
        return math.sqrt(p * (1.0 - p) / self.n_queries)

    @property
    def log2_fpr(self) -> float | None:
        if self.false_positives == 0:
            return None
        return math.log2(self.fpr)


def estimate_fpr(filt: Filter, negatives=None, n_queries: int | None = None, *,
                 seed=0xFEEDBEEF, threads: int = 1,
                 chunk_size: int = DEFAULT_CHUNK) -> FprEstimate:
    """Empirical FPR from querying keys disjoint from the inserted set.

    ``negatives`` may be a key array or an iterable of key arrays; when
    omitted, ``n_queries`` odd random keys are generated (chunked, so large
    counts stay in bounded memory).  Querying is read-only; with several
    threads the generated chunks are counted in parallel, with a result
    independent of the thread count.
    """
    if negatives is not None:
        total = 0
        hits = 0
        chunks = [negatives] if isinstance(negatives, np.ndarray) else negatives
        for chunk in chunks:
            chunk = np.ascontiguousarray(chunk, dtype=np.uint64)
            hits += filt.count_hits(chunk)
            total += chunk.shape[0]
        if n_queries is not None and n_queries != total:
            raise ValueError(f"stream held {total} keys, expected {n_queries}")
        if total == 0:
            raise ValueError("need at least one negative key")
        return FprEstimate(n_queries=total, false_positives=hits)

    if not n_queries or n_queries < 1:
        raise ValueError("need a positive number of negative queries")
    spans = [(i, min(chunk_size, n_queries - start))
             for i, start in enumerate(range(0, n_queries, chunk_size))]

    def count_span(span) -> int:
        i, size = span
        return filt.count_hits(odd_keys(size, derive_seed(seed, i)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(count_span, spans))
    else:
        hits = sum(count_span(s) for s in spans)
    return FprEstimate(n_queries=n_queries, false_positives=hits)


@dataclass(frozen=True)
class LoadHistogram:
    """Per-block set-bit distribution: counts[j] blocks hold j set bits."""

    counts: np.ndarray
    num_blocks: int

    @property
    def mean_load(self) -> float:
        j = np.arange(self.counts.shape[0])
        return float((j * self.counts).sum() / self.num_blocks)

    @property
    def variance(self) -> float:
        j = np.arange(self.counts.shape[0])
        mean = self.mean_load
        return float((self.counts * (j - mean) ** 2).sum() / self.num_blocks)

    @property
    def total_set_bits(self) -> int:
        j = np.arange(self.counts.shape[0])
        return int((j * self.counts).sum())


def block_load_histogram(filt: Filter) -> LoadHistogram:
    """Exact per-block popcount tally.

    Flat (standard) filters are tallied over their block-aligned windows,
    which gives the same binomial-shaped histogram the block view implies.
    """
    storage = filt.storage
    per_block = popcount_words(
        storage.words.reshape(storage.num_blocks, storage.words_per_block)
    ).sum(axis=1, dtype=np.int64)
    counts = np.bincount(per_block, minlength=storage.block_bits + 1)
    return LoadHistogram(counts=counts, num_blocks=storage.num_blocks)


def max_allowed_load(k: int, c: int, block_bits: int = 512) -> int:
    """Most set bits per block keeping the local FPR at or below 2**-k / c.

    Solves (j/B)**k = 2**-k / c for j, i.e. (B/2) * c**(-1/k), rounded to
    the nearest integer.
    """
    if k < 1 or c < 1:
        raise ValueError("k and c must be >= 1")
    return int(math.floor((block_bits / 2) * c ** (-1.0 / k) + 0.5))


def required_overhead(config: FilterConfig, *, target_fpr: float | None = None,
                      n_queries: int, tolerance: float = 0.01,
                      lo: float = 0.7, hi: float = 1.6,
                      threads: int = 1, chunk_size: int = DEFAULT_CHUNK) -> float:
    """Smallest relative size whose empirical FPR meets the target.

    Bisects the relative-size interval assuming the FPR falls as the filter
    grows.  Every probe is a fresh build (new filter and key seeds derived
    from the probe index) plus an FPR estimate.  Raises ``BracketError``
    when even the largest size misses the target.
    """
    cfg = config.validated()
    if cfg.n_capacity is None:
        raise ValueError("required_overhead needs capacity-based sizing")
    if target_fpr is None:
        target_fpr = 2.0 ** -cfg.k

    probes = 0

    def probe(rel: float) -> float:
        nonlocal probes
        probes += 1
        pcfg = replace(cfg, relative_size=rel, seed=derive_seed(cfg.seed, 3 * probes))
        filt = build_sharded(pcfg, even_keys(cfg.n_capacity,
                                             derive_seed(cfg.seed, 3 * probes + 1)))
        est = estimate_fpr(filt, n_queries=n_queries,
                           seed=derive_seed(cfg.seed, 3 * probes + 2),
                           threads=threads, chunk_size=chunk_size)
        return est.fpr

    if probe(lo) <= target_fpr:
        return lo
    if probe(hi) > target_fpr:
        raise BracketError(
            f"empirical FPR stays above {target_fpr:.3g} up to relative size {hi}")
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if probe(mid) <= target_fpr:
            hi = mid
        else:
            lo = mid
    return hi
