"""Why choices help: the distribution of set bits per block.

Without choices, some blocks end up overfull (high local FPR) and some
underfull.  Each extra choice shifts keys towards emptier blocks and
re-uses already set bits, so the load histogram both moves left (lower
mean) and tightens (lower variance).  Compare the means against the
analytic per-block budget needed to stay at the 2**-k target.
"""

from blowchoc import (
    FilterConfig,
    Filter,
    block_load_histogram,
    even_keys,
    max_allowed_load,
)

K = 14
N = 10**6

print(f"k = {K}, filter sized like a standard Bloom filter (relative size 1.0)\n")
print("choices\tmean_load\tvariance\tbudget_for_target")
for kind, choices in [("blocked", None), ("blowchoc", 2), ("blowchoc", 3)]:
    config = FilterConfig(kind=kind, k=K, n_capacity=N, choices=choices, seed=5)
    filt = Filter.from_config(config)
    filt.insert_many(even_keys(N, 6))
    hist = block_load_histogram(filt)
    c = 1 if choices is None else choices
    budget = max_allowed_load(K, c)
    print(f"{c}\t{hist.mean_load:.1f}\t{hist.variance:.1f}\t<= {budget}")

print("\ncoarse histogram (bits set per 512-bit block, 16 buckets of width 32):")
for kind, choices in [("blocked", None), ("blowchoc", 2), ("blowchoc", 3)]:
    config = FilterConfig(kind=kind, k=K, n_capacity=N, choices=choices, seed=5)
    filt = Filter.from_config(config)
    filt.insert_many(even_keys(N, 6))
    hist = block_load_histogram(filt)
    coarse = hist.counts.reshape(-1)[:512].reshape(16, 32).sum(axis=1)
    bars = "".join("#" if v else "." for v in (coarse > 0))
    peak = coarse.argmax()
    c = 1 if choices is None else choices
    print(f"c={c}: buckets {bars}  peak at [{32 * peak}, {32 * peak + 31}]")
