"""Relative throughput of the filter kinds (informational).

Absolute numbers depend entirely on the machine; what tends to be stable is
the ordering: the blocked filter touches one cache line per operation and
leads on inserts, each extra choice costs one more cost evaluation and
candidate lookup.  At desk scale the whole filter may fit into the CPU
cache, which flatters the standard Bloom filter compared to the huge-filter
regime where each of its k probes is a cache miss.
"""

from blowchoc.bench import ordering_notes, run_benchmark

rows = run_benchmark(n=10**6, k=14, n_lookups=10**6, seed=1)

print(f"{'variant':>14s} {'insert':>10s} {'hit lookup':>12s} {'miss lookup':>12s}   (M keys/s)")
for r in rows:
    label = r.kind if r.choices in (0, 1) else f"{r.kind} c={r.choices}"
    print(f"{label:>14s} {r.insert_mkeys:10.1f} {r.hit_lookup_mkeys:12.1f} "
          f"{r.miss_lookup_mkeys:12.1f}")

print()
for note in ordering_notes(rows):
    print(note)
print("\n('NOTE' lines flag orderings this machine did not show; they are "
      "informational, not failures)")
