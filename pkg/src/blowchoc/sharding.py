"""Single-writer sharded parallel filter builds.

The bit array splits into ``shards`` sub-arrays of equal block count; a
dedicated shard hash routes every key to one sub-array.  A dispatcher
partitions the key stream and feeds bounded per-shard FIFOs; one worker per
shard drains its FIFO and inserts into its own sub-array only.  Because each
shard sees its keys in stream order, the built filter is bit-identical to a
sequential build of the same configuration, whatever the thread timing.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .filters import Filter, FilterConfig
from .hashing import HashSpec, eval_hash, eval_hash_many

#: keys per dispatcher message; amortizes queue signalling, output-invariant
BATCH_KEYS = 1024

#: per-shard FIFO capacity in keys
QUEUE_CAPACITY = 1 << 16


@dataclass(frozen=True)
class ShardPlan:
    """Shard geometry and routing hash of a filter."""

    shards: int
    blocks_per_shard: int
    h0: HashSpec
    queue_capacity: int = QUEUE_CAPACITY

    @classmethod
    def for_filter(cls, filt: Filter) -> "ShardPlan":
        return cls(shards=filt.shards, blocks_per_shard=filt.blocks_per_shard,
                   h0=filt.shard_spec)


def route(plan: ShardPlan, x: int) -> int:
    """Shard index of one key; independent of block and bit hashes."""
    return eval_hash(plan.h0, x)


def route_many(plan: ShardPlan, keys: np.ndarray) -> np.ndarray:
    return eval_hash_many(plan.h0, keys)


def _as_chunks(keys) -> Iterator[np.ndarray]:
    if isinstance(keys, np.ndarray):
        yield np.ascontiguousarray(keys, dtype=np.uint64)
        return
    for chunk in keys:
        yield np.ascontiguousarray(chunk, dtype=np.uint64)


def build_sequential(config: FilterConfig, keys) -> Filter:
    """Reference build: all keys inserted in stream order by one thread."""
    filt = Filter.from_config(config)
    for chunk in _as_chunks(keys):
        filt.insert_many(chunk)
    return filt


def build_sharded(config: FilterConfig, keys, *, parallel: bool | None = None,
                  reader_thread: bool = False,
                  queue_capacity: int = QUEUE_CAPACITY) -> Filter:
    """Build a filter from a key stream (array or iterable of arrays).

    With ``parallel`` (default: when the configuration has several shards),
    one worker thread per shard drains a bounded FIFO fed by the dispatcher;
    ``reader_thread`` moves stream reading into its own thread.  Neither
    option changes the resulting bits.
    """
    cfg = config.validated()
    if parallel is None:
        parallel = cfg.shards > 1
    if not parallel or cfg.kind == "standard" or cfg.shards == 1:
        return build_sequential(cfg, keys)

    filt = Filter.from_config(cfg)
    filt._kernel_args()  # materialize before workers share the filter
    plan = ShardPlan.for_filter(filt)
    shards = cfg.shards
    maxsize = max(1, queue_capacity // BATCH_KEYS)
    fifos: list[queue.Queue] = [queue.Queue(maxsize=maxsize) for _ in range(shards)]
    failures: list[BaseException] = []

    def drain(shard: int) -> None:
        fifo = fifos[shard]
        failed = False
        while True:
            batch = fifo.get()
            if batch is None:
                return
            if failed:
                continue  # keep consuming so the dispatcher never blocks
            try:
                filt.insert_many(batch)
            except BaseException as exc:  # propagate after join
                failures.append(exc)
                failed = True

    workers = [threading.Thread(target=drain, args=(s,), name=f"shard-{s}")
               for s in range(shards)]
    for w in workers:
        w.start()

    chunks: Iterable[np.ndarray] = _as_chunks(keys)
    if reader_thread:
        chunks = _background_reader(chunks)

    inserted_by_workers = 0
    try:
        for chunk in chunks:
            shard_of = route_many(plan, chunk)
            for s in range(shards):
                part = chunk[shard_of == np.uint64(s)]
                for off in range(0, part.shape[0], BATCH_KEYS):
                    fifos[s].put(part[off : off + BATCH_KEYS])
            inserted_by_workers += chunk.shape[0]
    finally:
        for fifo in fifos:
            fifo.put(None)
        for w in workers:
            w.join()
    if failures:
        raise failures[0]
    # workers bumped ``inserted`` concurrently; set the exact total
    filt.inserted = inserted_by_workers
    return filt


def _background_reader(chunks: Iterable[np.ndarray], depth: int = 4) -> Iterator[np.ndarray]:
    """Pull chunks on a helper thread, hand them over through a small queue."""
    buf: queue.Queue = queue.Queue(maxsize=depth)
    errors: list[BaseException] = []
    abandoned = threading.Event()

    def put(item) -> bool:
        while not abandoned.is_set():
            try:
                buf.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def pump() -> None:
        try:
            for chunk in chunks:
                if not put(chunk):
                    return
        except BaseException as exc:
            errors.append(exc)
        finally:
            put(None)

    t = threading.Thread(target=pump, name="key-reader")
    t.start()
    try:
        while True:
            chunk = buf.get()
            if chunk is None:
                break
            yield chunk
    finally:
        abandoned.set()  # unblock the pump if we stop early
        t.join()
    if errors:
        raise errors[0]
