"""Analytic side of the story: load budgets, bit collisions, overloading.

Three closed-form quantities frame the empirical results:

* the per-block load budget that keeps a block's local FPR at 2**-k / c,
  which is what the insertion cost function has to achieve on average;
* the birthday probability that k independent in-block bit addresses
  collide, the motivation for the distinct selection strategy;
* the smooth FPR degradation (1 - 2**-gamma)**k when a Bloom-family filter
  is overloaded by a factor gamma.
"""

from blowchoc import collision_probability, max_allowed_load, overload_fpr, size_for

print("per-block set-bit budget for local FPR <= 2^-k / c (of 512):")
print("k\tc=1\tc=2\tc=3\tc=4")
for k in (3, 4, 7, 10, 14, 17, 20):
    budgets = [max_allowed_load(k, c) for c in (1, 2, 3, 4)]
    print(k, *budgets, sep="\t")

print("\nbirthday collisions among k random bit addresses in a 512-bit block:")
print("k\tp_collision")
for k in (2, 5, 10, 14, 17, 20):
    print(f"{k}\t{collision_probability(k, 512):.4f}")
print("(already at k=10 almost one key in ten queries fewer than k bits)")

print("\noverloading a filter of capacity n by factor gamma (k=10):")
print("gamma\tfpr\tfpr/2^-k")
for gamma in (0.9, 1.0, 1.1, 1.2, 1.5):
    fpr = overload_fpr(gamma, 10)
    print(f"{gamma}\t{fpr:.3e}\t{fpr / 2**-10:.2f}")

m, blocks = size_for(10**6, 10)
print(f"\nsizing: one million keys at k=10 need m = {m} bits "
      f"({blocks} blocks of 512), about 1.443 bits per key and bit function")
