"""Genomics use case: store the q-grams of a DNA sequence in a filter.

Every window of q consecutive bases becomes a 2-bit-packed 64-bit key
(canonical form: the smaller of the window and its reverse complement, so
both strands map to the same key).  The filter then answers "have I seen
this fragment?" in one or two cache lines.
"""

from pathlib import Path

import numpy as np

from blowchoc import Filter, FilterConfig, QGramEncoder, encode_qgrams

fixture = Path(__file__).parent / "data" / "toy.fasta"
Q = 21

# parse the (tiny) FASTA by hand to show what the encoder sees
records = {}
name = None
for line in fixture.read_text().splitlines():
    if line.startswith(">"):
        name = line[1:].split()[0]
        records[name] = []
    elif line.strip():
        records[name].append(line.strip())
sequences = {name: "".join(parts) for name, parts in records.items()}

encoder = QGramEncoder(q=Q, canonical=True)
keys_per_record = {name: encode_qgrams(encoder, seq) for name, seq in sequences.items()}
all_keys = np.concatenate(list(keys_per_record.values()))
print(f"{len(sequences)} records, {len(all_keys)} q-grams of length {Q} "
      f"({len(np.unique(all_keys))} distinct)")

filt = Filter.from_config(FilterConfig(
    kind="blowchoc", k=14, n_capacity=max(1, len(all_keys)), choices=2, seed=11))
filt.insert_many(all_keys)

for name, keys in keys_per_record.items():
    assert filt.contains_many(keys).all()
    print(f"  {name}: all {len(keys)} fragments found")

# a mutated fragment is (almost certainly) rejected
probe = sequences[next(iter(sequences))][:Q]
mutated = ("T" if probe[10] != "T" else "A").join([probe[:10], probe[11:]])
print(f"original window  {probe!r}: {bool(filt.contains_many(encode_qgrams(encoder, probe))[0])}")
print(f"one-base mutant  {mutated!r}: {bool(filt.contains_many(encode_qgrams(encoder, mutated))[0])}")

# strand insensitivity: the reverse complement hits the same keys
complement = {"A": "T", "C": "G", "G": "C", "T": "A"}
rc = "".join(complement[b] for b in reversed(probe))
print(f"reverse strand   {rc!r}: {bool(filt.contains_many(encode_qgrams(encoder, rc))[0])}")
