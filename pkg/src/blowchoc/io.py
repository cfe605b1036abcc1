"""Filter serialization, key input formats and DNA q-gram encoding.

Filter file layout (all integers little-endian)::

    offset  size  field
         0     4  magic "BWCH"
         4     4  format version (currently 1)
         8     1  kind (0 standard, 1 blocked, 2 blowchoc)
         9     2  k, bit address functions per key
        11     1  choices (0 standard, 1 blocked, >=2 blowchoc)
        12     1  bit strategy (0 random, 1 distinct)
        13     1  cost kind (0 exp, 1 mix, 2 la)
        14     2  reserved, zero
        16     8  cost parameter (IEEE-754 double)
        24     8  block width in bits
        32     8  number of blocks
        40     8  shard count
        48     8  seed
        56     8  keys inserted
        64     -  bit array, blocks in index order, 64-bit words
                  little-endian, least-significant bit first

The hash functions are re-derived from the stored seed, so a round trip
reproduces the filter exactly.
"""

from __future__ import annotations

import struct
import sys
from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numpy as np

from .filters import CostModel, Filter

MAGIC = b"BWCH"
FORMAT_VERSION = 1

_KIND_CODES = {"standard": 0, "blocked": 1, "blowchoc": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_STRATEGY_CODES = {"random": 0, "distinct": 1}
_STRATEGY_NAMES = {v: k for k, v in _STRATEGY_CODES.items()}
_COST_CODES = {"exp": 0, "mix": 1, "la": 2}
_COST_NAMES = {v: k for k, v in _COST_CODES.items()}

_HEADER = struct.Struct("<4sIBHBBB2xdQQQQQ")
assert _HEADER.size == 64


class FilterFormatError(Exception):
    """The file is not a valid filter of a supported version."""


class KeyFormatError(Exception):
    """A key input stream could not be decoded."""


def write_filter(filt: Filter, path) -> None:
    """Serialize a filter; see the module docstring for the layout."""
    if filt.block_bits % 64 != 0:
        raise ValueError("only word-multiple block widths serialize")
    cost_code, cost_param = 0, 0.0
    if filt.cost is not None:
        cost_code, cost_param = _COST_CODES[filt.cost.kind], filt.cost.param
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, _KIND_CODES[filt.kind], filt.k,
        filt.choices, _STRATEGY_CODES[filt.strategy], cost_code,
        cost_param, filt.block_bits, filt.num_blocks, filt.shards,
        filt.seed, filt.inserted,
    )
    payload = np.ascontiguousarray(filt.storage.words, dtype="<u8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_filter(path) -> Filter:
    """Load a filter; raises FilterFormatError on anything malformed."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FilterFormatError("truncated header")
        (magic, version, kind_code, k, choices, strategy_code, cost_code,
         cost_param, block_bits, num_blocks, shards, seed, inserted) = \
            _HEADER.unpack(header)
        if magic != MAGIC:
            raise FilterFormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise FilterFormatError(f"unsupported format version {version}")
        if kind_code not in _KIND_NAMES or strategy_code not in _STRATEGY_NAMES \
                or cost_code not in _COST_NAMES:
            raise FilterFormatError("unknown enum value in header")
        if block_bits == 0 or block_bits % 64 != 0 or num_blocks == 0 \
                or shards == 0 or num_blocks % shards != 0 \
                or not 1 <= k <= block_bits:
            raise FilterFormatError("inconsistent filter geometry")
        kind = _KIND_NAMES[kind_code]
        choices_ok = {"standard": choices == 0, "blocked": choices == 1,
                      "blowchoc": 2 <= choices <= 8}[kind]
        if not choices_ok:
            raise FilterFormatError(f"{kind} filter with {choices} choices")
        if kind == "standard" and shards != 1:
            raise FilterFormatError("standard filters do not shard")
        expected = num_blocks * block_bits // 8
        payload = fh.read(expected + 1)
        if len(payload) != expected:
            raise FilterFormatError(
                f"bit array has {len(payload)} bytes, expected {expected}")
    words = np.frombuffer(payload, dtype="<u8").astype(np.uint64)
    cost = None
    if kind == "blowchoc":
        cost = CostModel(kind=_COST_NAMES[cost_code], param=cost_param, k=k)
    try:
        return Filter(kind=kind, k=k, choices=choices,
                      strategy=_STRATEGY_NAMES[strategy_code], cost=cost,
                      block_bits=block_bits, num_blocks=num_blocks,
                      shards=shards, seed=seed, inserted=inserted, words=words)
    except ValueError as exc:
        raise FilterFormatError(str(exc)) from exc


# -- q-gram encoding ---------------------------------------------------------

_BASE_CODES = np.full(256, 255, dtype=np.uint8)
for _base, _code in zip(b"ACGT", range(4)):
    _BASE_CODES[_base] = _code
    _BASE_CODES[_base + 32] = _code  # lower case


@dataclass(frozen=True)
class QGramEncoder:
    """2-bit packing of DNA q-grams into 64-bit integer keys.

    A=0, C=1, G=2, T=3, first base most significant; windows touching any
    other character are skipped.  With ``canonical`` the smaller of a code
    and its reverse complement is emitted, making the key strand-insensitive.
    """

    q: int
    canonical: bool = True

    def __post_init__(self):
        if not 1 <= self.q <= 32:
            raise ValueError(f"q must be in [1, 32], got {self.q}")


def reverse_complement_codes(codes: np.ndarray, q: int) -> np.ndarray:
    comp = codes ^ np.uint64((1 << (2 * q)) - 1)
    out = np.zeros_like(codes)
    for _ in range(q):
        out = (out << np.uint64(2)) | (comp & np.uint64(3))
        comp >>= np.uint64(2)
    return out


def encode_qgrams(enc: QGramEncoder, sequence) -> np.ndarray:
    """All valid q-gram keys of a DNA sequence, in sequence order."""
    if isinstance(sequence, str):
        sequence = sequence.encode("ascii", errors="replace")
    raw = np.frombuffer(bytes(sequence), dtype=np.uint8)
    q = enc.q
    n_windows = raw.shape[0] - q + 1
    if n_windows <= 0:
        return np.empty(0, dtype=np.uint64)
    codes = _BASE_CODES[raw]
    invalid = (codes == 255).astype(np.int64)
    bad = np.concatenate(([0], np.cumsum(invalid)))
    window_ok = (bad[q:] - bad[:-q]) == 0
    vals = np.zeros(n_windows, dtype=np.uint64)
    codes64 = codes.astype(np.uint64)
    for i in range(q):
        vals = (vals << np.uint64(2)) | codes64[i : i + n_windows]
    if enc.canonical:
        vals = np.minimum(vals, reverse_complement_codes(vals, q))
    return vals[window_ok]


# -- key input streams -------------------------------------------------------

KEY_FORMATS = ("u64le", "text", "fasta")


def _open_binary(path) -> BinaryIO:
    if path == "-":
        return sys.stdin.buffer
    return open(path, "rb")


def _read_u64le(fh: BinaryIO, chunk_size: int) -> Iterator[np.ndarray]:
    pending = b""
    while True:
        data = fh.read(chunk_size * 8)
        if not data:
            break
        pending += data
        usable = len(pending) - (len(pending) % 8)  # pipes may short-read
        if usable:
            yield np.frombuffer(pending[:usable], dtype="<u8").astype(np.uint64)
            pending = pending[usable:]
    if pending:
        raise KeyFormatError(f"u64le stream truncated ({len(pending)} stray bytes)")


def _read_text(fh: BinaryIO, chunk_size: int) -> Iterator[np.ndarray]:
    batch: list[int] = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            value = int(line)
        except ValueError as exc:
            raise KeyFormatError(f"line {lineno}: not an integer: {line!r}") from exc
        if not 0 <= value < 2**64:
            raise KeyFormatError(f"line {lineno}: key out of 64-bit range: {value}")
        batch.append(value)
        if len(batch) >= chunk_size:
            yield np.array(batch, dtype=np.uint64)
            batch = []
    if batch:
        yield np.array(batch, dtype=np.uint64)


def _read_fasta(fh: BinaryIO, enc: QGramEncoder) -> Iterator[np.ndarray]:
    parts: list[bytes] = []
    saw_record = False
    for line in fh:
        line = line.strip()
        if line.startswith(b">"):
            if parts:
                yield encode_qgrams(enc, b"".join(parts))
                parts = []
            saw_record = True
        elif line:
            if not saw_record:
                raise KeyFormatError("FASTA input does not start with a header line")
            parts.append(line)
    if parts:
        yield encode_qgrams(enc, b"".join(parts))


def read_keys(path, fmt: str, *, q: int | None = None, canonical: bool = True,
              chunk_size: int = 1 << 20) -> Iterator[np.ndarray]:
    """Key chunks from a file ('-' for stdin) in one of the input formats.

    ``u64le`` reads raw 8-byte little-endian records, ``text`` one decimal
    key per line, ``fasta`` DNA records encoded as q-grams (``q`` required).
    """
    if fmt not in KEY_FORMATS:
        raise KeyFormatError(f"unknown key format {fmt!r}")
    if fmt == "fasta":
        if q is None:
            raise KeyFormatError("FASTA input needs a q-gram length")
        enc = QGramEncoder(q=q, canonical=canonical)
    fh = _open_binary(path)
    try:
        if fmt == "u64le":
            yield from _read_u64le(fh, chunk_size)
        elif fmt == "text":
            yield from _read_text(fh, chunk_size)
        else:
            yield from _read_fasta(fh, enc)
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()
