"""First steps: build each filter kind, query it, inspect its load.

A filter stores a set of 64-bit integer keys approximately: inserted keys
are always found, never-inserted keys are found with a small probability
(the false positive rate, targeted at 2**-k for k bit functions per key).
"""

import numpy as np

from blowchoc import Filter, FilterConfig, even_keys, odd_keys

n = 100_000
keys = even_keys(n, seed=1)        # the keys we store (even integers)
strangers = odd_keys(n, seed=2)    # keys we never store (odd integers)

for kind, choices in [("standard", None), ("blocked", None), ("blowchoc", 2),
                      ("blowchoc", 3)]:
    config = FilterConfig(kind=kind, k=10, n_capacity=n, choices=choices, seed=7)
    filt = Filter.from_config(config)
    filt.insert_many(keys)

    # no false negatives, ever
    assert filt.contains_many(keys).all()

    # false positives are rare (about 2**-10 here)
    fp = filt.count_hits(strangers)
    label = kind if choices is None else f"{kind} (c={choices})"
    print(f"{label:>14s}: m = {filt.m:>9d} bits, load = {filt.load():.3f}, "
          f"false positives = {fp}/{n}")

# scalar operations spell out the same semantics one key at a time
filt = Filter.from_config(FilterConfig(kind="blowchoc", k=8, n_capacity=100))
filt.insert(42)
print("\nscalar: 42 inserted ->", filt.lookup(42), "   43 untouched ->", filt.lookup(43))
