import math

import numpy as np
import pytest

from blowchoc.analysis import even_keys
from blowchoc.filters import Filter, FilterConfig
from blowchoc.sharding import (
    ShardPlan,
    build_sequential,
    build_sharded,
    route,
    route_many,
)


def _plan(shards, seed=0):
    cfg = FilterConfig(kind="blocked", k=4, n_capacity=10**4, shards=shards, seed=seed)
    return ShardPlan.for_filter(Filter.from_config(cfg))


def test_route_single_shard_is_zero():
    plan = _plan(1)
    assert all(route(plan, x) == 0 for x in range(100))


def test_route_deterministic():
    plan_a, plan_b = _plan(8, seed=5), _plan(8, seed=5)
    keys = even_keys(1000, 1)
    assert route_many(plan_a, keys).tolist() == route_many(plan_b, keys).tolist()
    for x in keys[:50].tolist():
        assert route(plan_a, x) == route_many(plan_a, np.array([x], np.uint64))[0]


def test_route_balance_binomial():
    shards, n = 8, 10**6
    plan = _plan(shards, seed=7)
    counts = np.bincount(route_many(plan, even_keys(n, 3)).astype(np.int64),
                         minlength=shards)
    expected = n / shards
    sd = math.sqrt(n * (1 / shards) * (1 - 1 / shards))
    assert (np.abs(counts - expected) < 5 * sd).all()


@pytest.mark.parametrize("shards", [1, 2, 4, 8])
def test_threaded_build_matches_sequential_reference(shards):
    cfg = FilterConfig(kind="blowchoc", k=8, n_capacity=10**5, choices=2,
                       shards=shards, seed=13)
    keys = even_keys(10**5, 17)
    threaded = build_sharded(cfg, keys, parallel=True)
    reference = build_sequential(cfg, keys)
    assert (threaded.storage.words == reference.storage.words).all()
    assert threaded.inserted == reference.inserted == 10**5


def test_single_shard_equals_plain_build():
    cfg = FilterConfig(kind="blocked", k=6, n_capacity=10**4, seed=19)
    keys = even_keys(10**4, 23)
    a = build_sharded(cfg, keys)
    b = Filter.from_config(cfg)
    b.insert_many(keys)
    assert (a.storage.words == b.storage.words).all()


def test_repeated_builds_identical():
    cfg = FilterConfig(kind="blowchoc", k=9, n_capacity=10**4, shards=4, seed=29)
    keys = even_keys(10**4, 31)
    a = build_sharded(cfg, keys, parallel=True)
    b = build_sharded(cfg, keys, parallel=True)
    assert (a.storage.words == b.storage.words).all()


def test_reader_thread_does_not_change_output():
    cfg = FilterConfig(kind="blowchoc", k=7, n_capacity=10**4, shards=2, seed=37)
    chunks = np.array_split(even_keys(10**4, 41), 7)
    a = build_sharded(cfg, iter(chunks), parallel=True, reader_thread=True)
    b = build_sharded(cfg, iter(chunks), parallel=True, reader_thread=False)
    assert (a.storage.words == b.storage.words).all()


def test_chunked_stream_equals_array_input():
    cfg = FilterConfig(kind="blocked", k=5, n_capacity=10**4, seed=43)
    keys = even_keys(10**4, 47)
    a = build_sharded(cfg, keys)
    b = build_sharded(cfg, iter(np.array_split(keys, 13)))
    assert (a.storage.words == b.storage.words).all()


def test_stream_errors_propagate():
    cfg = FilterConfig(kind="blowchoc", k=5, n_capacity=10**4, shards=2, seed=53)

    def broken():
        yield even_keys(1000, 1)
        raise OSError("stream died")

    with pytest.raises(OSError, match="stream died"):
        build_sharded(cfg, broken(), parallel=True)


def test_shard_writes_stay_in_shard():
    shards = 4
    cfg = FilterConfig(kind="blowchoc", k=8, n_capacity=10**4, shards=shards, seed=59)
    filt = Filter.from_config(cfg)
    keys = even_keys(10**4, 61)
    shard_of = filt.route_many(keys)
    wps = filt.blocks_per_shard * filt.storage.words_per_block
    for s in range(shards):
        part = keys[shard_of == np.uint64(s)]
        probe = Filter.from_config(cfg)
        probe.insert_many(part)
        touched = np.nonzero(probe.storage.words)[0]
        assert (touched // wps == s).all()
