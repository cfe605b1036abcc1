"""Compiled hot loops for bulk insertion and membership tests.

The per-key logic mirrors the scalar operations in ``filters``/``blockstore``
exactly (same hash branches, same cost formulas evaluated in the same order,
ties broken towards the lower choice index); equivalence is pinned by tests.
Everything here is nopython and releases the GIL, so shard workers and query
threads run truly in parallel.
"""

from __future__ import annotations

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

U64_0 = np.uint64(0)
U64_1 = np.uint64(1)


@intrinsic
def _popcnt(typingctx, x):
    """Population count of a uint64 (llvm.ctpop, a single instruction)."""
    if x != types.uint64:
        return None
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        (val,) = args
        fn = builder.module.declare_intrinsic("llvm.ctpop", [ir.IntType(64)])
        return builder.call(fn, [val])

    return sig, codegen


@intrinsic
def _prefetch(typingctx, arr, idx):
    """Read-prefetch hint for ``arr[idx]`` (llvm.prefetch into L1)."""
    if not isinstance(arr, types.Array):
        return None
    sig = types.void(arr, types.int64)

    def codegen(context, builder, signature, args):
        aryty = signature.args[0]
        ary, ind = args
        aryval = context.make_array(aryty)(context, builder, ary)
        ptr = builder.gep(aryval.data, [ind])
        i8ptr = builder.bitcast(ptr, ir.IntType(8).as_pointer())
        i32 = ir.IntType(32)
        fnty = ir.FunctionType(ir.VoidType(), [i8ptr.type, i32, i32, i32])
        name = "llvm.prefetch.p0"
        fn = builder.module.globals.get(name)
        if fn is None:
            fn = ir.Function(builder.module, fnty, name)
        builder.call(fn, [i8ptr, i32(0), i32(3), i32(1)])
        return context.get_dummy_value()

    return sig, codegen


@njit(inline="always")
def _hval(a, x, b, mode, shift):
    # multiply-mod hash; arithmetic wraps mod 2**64 (all operands uint64)
    ax = a * x
    if mode == 0:
        return ax % b
    elif mode == 1:
        return (ax >> shift) % b
    else:
        return (ax ^ (ax >> shift)) % b


@njit(inline="always")
def _fill_addrs(x, bit_a, bit_b, bit_mode, bit_shift, strategy, addrs):
    """Compute the k in-block bit addresses for one key into ``addrs``.

    random: independent hashes, duplicates possible.
    distinct: shrinking ranges with the bump-past-chosen adjustment, kept
    sorted by insertion; yields k distinct addresses.
    """
    k = bit_a.shape[0]
    if strategy == 0:
        for i in range(k):
            addrs[i] = np.int64(_hval(bit_a[i], x, bit_b[i], bit_mode[i], bit_shift[i]))
    else:
        for i in range(k):
            v = np.int64(_hval(bit_a[i], x, bit_b[i], bit_mode[i], bit_shift[i]))
            pos = 0
            for t in range(i):
                if addrs[t] <= v:
                    v += 1
                    pos = t + 1
                else:
                    break
            for t in range(i, pos, -1):
                addrs[t] = addrs[t - 1]
            addrs[pos] = v


@njit(inline="always")
def _cost(j, a, k_f, cost_code, cost_param, quarter, half):
    jf = np.float64(j)
    af = np.float64(a)
    if cost_code == 0:  # exponential in the resulting load
        return cost_param ** (jf / quarter) + af / k_f
    elif cost_code == 1:  # local-FPR term plus new bits
        return cost_param * k_f * (jf / half) ** k_f + af
    else:  # lookahead: local FPR after cost_param further worst-case inserts
        return k_f * ((jf + cost_param * k_f) / half) ** k_f + af


@njit(nogil=True, cache=True)
def insert_blocks(words, keys, shard_a, shard_b, shard_mode, shard_shift, wps,
                  block_a, block_b, block_mode, block_shift,
                  bit_a, bit_b, bit_mode, bit_shift, strategy, wpb,
                  cost_code, cost_param, quarter, half):
    """Insert keys into a blocked-family filter, in stream order.

    Each key lands in the shard selected by the shard hash; candidate blocks
    are addressed within that shard.  One choice sets the bits directly;
    several choices first check for a block that already holds all addresses
    (lowest index wins, nothing written), then set the bits in the
    argmin-cost block.  Callers that partition keys by shard get exclusive
    writes per shard because every key of a partition routes to the same
    sub-array.
    """
    c = block_a.shape[0]
    k = bit_a.shape[0]
    k_f = np.float64(k)
    addrs = np.empty(k, dtype=np.int64)
    mask = np.empty(wpb, dtype=np.uint64)
    bases = np.empty(c, dtype=np.int64)
    for n in range(keys.shape[0]):
        x = keys[n]
        shard_base = np.int64(_hval(shard_a, x, shard_b, shard_mode, shard_shift)) * wps
        _fill_addrs(x, bit_a, bit_b, bit_mode, bit_shift, strategy, addrs)
        for w in range(wpb):
            mask[w] = U64_0
        for i in range(k):
            f = addrs[i]
            mask[f >> 6] |= U64_1 << np.uint64(f & 63)
        if c == 1:
            base = shard_base + np.int64(
                _hval(block_a[0], x, block_b, block_mode, block_shift)) * wpb
            for w in range(wpb):
                words[base + w] |= mask[w]
            continue
        for ci in range(c):
            bases[ci] = shard_base + np.int64(
                _hval(block_a[ci], x, block_b, block_mode, block_shift)) * wpb
            _prefetch(words, bases[ci])
        best = 0
        best_cost = np.inf
        noop = False
        for ci in range(c):
            base = bases[ci]
            j = U64_0
            present = U64_0
            for w in range(wpb):
                wv = words[base + w]
                j += _popcnt(wv | mask[w])
                present += _popcnt(wv)
            a = j - present
            if a == U64_0:
                noop = True
                break
            cost = _cost(j, a, k_f, cost_code, cost_param, quarter, half)
            if cost < best_cost:
                best_cost = cost
                best = ci
        if not noop:
            base = bases[best]
            for w in range(wpb):
                words[base + w] |= mask[w]


@njit(nogil=True, cache=True)
def contains_blocks(words, keys, shard_a, shard_b, shard_mode, shard_shift, wps,
                    block_a, block_b, block_mode, block_shift,
                    bit_a, bit_b, bit_mode, bit_shift, strategy, wpb, out):
    """Membership of keys in a blocked-family filter.

    A key is present iff some choice's block has all its bit addresses set;
    scanning a block stops at the first unset bit, and choices stop at the
    first block that passes.
    """
    c = block_a.shape[0]
    k = bit_a.shape[0]
    addrs = np.empty(k, dtype=np.int64)
    for n in range(keys.shape[0]):
        x = keys[n]
        shard_base = np.int64(_hval(shard_a, x, shard_b, shard_mode, shard_shift)) * wps
        if strategy == 1:
            _fill_addrs(x, bit_a, bit_b, bit_mode, bit_shift, strategy, addrs)
        found = False
        for ci in range(c):
            base = shard_base + np.int64(
                _hval(block_a[ci], x, block_b, block_mode, block_shift)) * wpb
            ok = True
            for i in range(k):
                if strategy == 1:
                    f = addrs[i]
                else:
                    f = np.int64(_hval(bit_a[i], x, bit_b[i], bit_mode[i], bit_shift[i]))
                if (words[base + (f >> 6)] >> np.uint64(f & 63)) & U64_1 == U64_0:
                    ok = False
                    break
            if ok:
                found = True
                break
        out[n] = 1 if found else 0


@njit(nogil=True, cache=True)
def insert_flat(words, keys, bit_a, flat_b, flat_mode, flat_shift):
    """Insert keys into a flat bit array (standard Bloom): set k global bits."""
    k = bit_a.shape[0]
    for n in range(keys.shape[0]):
        x = keys[n]
        for i in range(k):
            f = np.int64(_hval(bit_a[i], x, flat_b, flat_mode, flat_shift))
            words[f >> 6] |= U64_1 << np.uint64(f & 63)


@njit(nogil=True, cache=True)
def contains_flat(words, keys, bit_a, flat_b, flat_mode, flat_shift, out):
    """Membership in a flat bit array: conjunction over k global bits."""
    k = bit_a.shape[0]
    for n in range(keys.shape[0]):
        x = keys[n]
        ok = True
        for i in range(k):
            f = np.int64(_hval(bit_a[i], x, flat_b, flat_mode, flat_shift))
            if (words[f >> 6] >> np.uint64(f & 63)) & U64_1 == U64_0:
                ok = False
                break
        out[n] = 1 if ok else 0
