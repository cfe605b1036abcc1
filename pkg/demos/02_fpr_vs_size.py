"""The space/FPR trade-off: sweep the relative filter size per kind.

A standard Bloom filter sized at n*k/ln(2) bits lands exactly on the 2**-k
target (relative size 1.00).  A blocked Bloom filter needs noticeably more
space for the same FPR at large k; adding block choices wins that space
back.  The printed TSV has one row per (variant, relative size); pipe it
into a plotting tool to draw the curves.
"""

import math

from blowchoc import FilterConfig, build_sharded, estimate_fpr, even_keys
from blowchoc.analysis import derive_seed

K = 12
N_KEYS = 10**6
N_QUERIES = 10**7
GRID = [0.90, 0.95, 1.00, 1.05, 1.10]

variants = [
    ("standard", None),
    ("blocked", None),
    ("blowchoc", 2),
    ("blowchoc", 3),
]

print("kind\tc\trel_size\tlog2_fpr\ttarget")
row = 0
for kind, choices in variants:
    for rel in GRID:
        row += 1
        config = FilterConfig(kind=kind, k=K, n_capacity=N_KEYS, choices=choices,
                              relative_size=rel, seed=derive_seed(33, row))
        filt = build_sharded(config, even_keys(N_KEYS, derive_seed(44, row)))
        est = estimate_fpr(filt, n_queries=N_QUERIES, seed=derive_seed(55, row),
                           threads=2)
        log2 = "nan" if est.log2_fpr is None else f"{est.log2_fpr:.3f}"
        print(f"{kind}\t{filt.choices}\t{rel:.2f}\t{log2}\t{-K}", flush=True)
