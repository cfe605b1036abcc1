"""Command-line interface: build, query and evaluate filters.

Analytic and evaluation output is TSV on stdout; diagnostics go to stderr.
Exit codes: 0 ok, 1 usage error, 2 input/output error, 3 corrupt filter
file.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bench as bench_mod
from .analysis import (
    block_load_histogram,
    derive_seed,
    estimate_fpr,
    even_keys,
    max_allowed_load,
)
from .filters import (
    ConfigError,
    CostModel,
    Filter,
    FilterConfig,
    GOLDEN_BETA,
    overload_fpr,
    size_for,
)
from .hashing import collision_probability
from .io import (
    FilterFormatError,
    KeyFormatError,
    read_filter,
    read_keys,
    write_filter,
)
from .sharding import build_sharded

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CORRUPT = 3

_DEFAULT_COST_PARAM = {"exp": GOLDEN_BETA, "mix": 1.0, "la": 3.5}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's 2
        raise UsageError(message)


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _tsv(*fields) -> str:
    return "\t".join(_fmt(f) for f in fields)


def _effective_rel_size(filt: Filter) -> float:
    if filt.inserted == 0:
        return float("nan")
    return filt.m * math.log(2) / (filt.inserted * filt.k)


def _fpr_row(filt: Filter, est, rel_size: float) -> str:
    return _tsv(filt.kind, filt.k, filt.choices, filt.strategy,
                round(rel_size, 6), est.n_queries, est.false_positives,
                est.fpr, est.log2_fpr, est.stderr)


_FPR_HEADER = _tsv("kind", "k", "c", "strategy", "rel_size", "N", "W",
                   "fpr", "log2_fpr", "stderr")


def _make_cost(args, k: int) -> CostModel | None:
    if args.cost is None and args.cost_param is None:
        return None
    cost_kind = args.cost or "exp"
    param = args.cost_param
    if param is None:
        param = _DEFAULT_COST_PARAM[cost_kind]
    return CostModel(kind=cost_kind, param=param, k=k)


def _make_config(args) -> FilterConfig:
    cost = _make_cost(args, args.k)
    if cost is not None and args.kind != "blowchoc":
        raise UsageError("--cost/--cost-param apply to blowchoc filters only")
    # standard filters always build sequentially; bits span the whole array
    shards = 1 if args.kind == "standard" else max(1, args.threads)
    return FilterConfig(
        kind=args.kind, k=args.k, n_capacity=args.n, size_bits=args.size_bits,
        choices=args.choices, cost=cost, strategy=args.strategy,
        relative_size=args.relative_size, shards=shards, seed=args.seed,
    )


def _key_stream(args):
    return read_keys(args.keys, args.format, q=args.q,
                     canonical=not args.no_canonical)


def cmd_build(args) -> int:
    config = _make_config(args)
    t0 = time.perf_counter()
    filt = build_sharded(config, _key_stream(args), parallel=args.threads >= 1)
    wall = time.perf_counter() - t0
    write_filter(filt, args.out)
    print(_tsv("keys_inserted", "load", "wall_s", "m_bits", "blocks", "shards"),
          file=sys.stderr)
    print(_tsv(filt.inserted, filt.load(), round(wall, 3), filt.m,
               filt.num_blocks, filt.shards), file=sys.stderr)
    return EXIT_OK


def cmd_query(args) -> int:
    filt = read_filter(args.filter)
    pool = ThreadPoolExecutor(args.threads) if args.threads > 1 else None
    try:
        for chunk in _key_stream(args):
            if pool is not None and chunk.shape[0] >= 2 * args.threads:
                parts = np.array_split(chunk, args.threads)
                answers = np.concatenate(list(pool.map(filt.contains_many, parts)))
            else:
                answers = filt.contains_many(chunk)
            out = "\n".join(f"{key}\t{int(ans)}"
                            for key, ans in zip(chunk.tolist(), answers.tolist()))
            if out:
                print(out)
    finally:
        if pool is not None:
            pool.shutdown()
    return EXIT_OK


def cmd_fpr(args) -> int:
    filt = read_filter(args.filter)
    if args.keys is not None:
        est = estimate_fpr(filt, negatives=_key_stream(args))
    else:
        est = estimate_fpr(filt, n_queries=args.negatives, seed=args.neg_seed,
                           threads=args.threads)
    print(_FPR_HEADER)
    print(_fpr_row(filt, est, _effective_rel_size(filt)))
    return EXIT_OK


def cmd_hist(args) -> int:
    filt = read_filter(args.filter)
    hist = block_load_histogram(filt)
    print(_tsv("j", "count"))
    for j, count in enumerate(hist.counts.tolist()):
        print(_tsv(j, count))
    print(_tsv("# mean_load", hist.mean_load), file=sys.stderr)
    return EXIT_OK


def _sweep_variants(args):
    for kind in args.kinds.split(","):
        kind = kind.strip()
        if kind == "blowchoc":
            choice_list = [int(c) for c in args.choices_list.split(",")]
        else:
            choice_list = [None]
        for choices in choice_list:
            strategies = ["random"] if kind == "standard" \
                else [s.strip() for s in args.strategies.split(",")]
            for strategy in strategies:
                yield kind, choices, strategy


def cmd_sweep(args) -> int:
    rels = np.arange(args.rel_min, args.rel_max + args.rel_step / 2, args.rel_step)
    print(_FPR_HEADER)
    row = 0
    for kind, choices, strategy in _sweep_variants(args):
        for rel in rels:
            rel = round(float(rel), 6)
            row += 1
            cost = _make_cost(args, args.k) if kind == "blowchoc" else None
            shards = 1 if kind == "standard" else max(1, args.threads)
            config = FilterConfig(
                kind=kind, k=args.k, n_capacity=args.n, choices=choices,
                cost=cost, strategy=strategy, relative_size=rel,
                shards=shards, seed=derive_seed(args.seed, 2 * row),
            )
            keys = even_keys(args.n, derive_seed(args.seed, 2 * row + 1))
            filt = build_sharded(config, keys, parallel=args.threads >= 1)
            est = estimate_fpr(filt, n_queries=args.negatives,
                               seed=derive_seed(args.seed, 10**6 + row),
                               threads=max(1, args.threads))
            print(_fpr_row(filt, est, rel), flush=True)
    return EXIT_OK


def cmd_bounds(args) -> int:
    sections = [s for s in ("max_load", "collision", "overload", "size")
                if getattr(args, s)]
    if not sections:
        sections = ["max_load", "collision", "overload"]
    if "max_load" in sections:
        print(_tsv("# max allowed set bits per block for local FPR <= 2^-k / c"))
        print(_tsv("k", "c", "max_load"))
        ks = [args.k] if args.k else range(3, 21)
        cs = [args.choices] if args.choices else range(1, 5)
        for k in ks:
            for c in cs:
                print(_tsv(k, c, max_allowed_load(k, c, args.block_bits)))
    if "collision" in sections:
        print(_tsv("# probability that k random bit addresses collide"))
        print(_tsv("k", "block_bits", "p_collision"))
        for k in [args.k] if args.k else range(1, 21):
            print(_tsv(k, args.block_bits,
                       collision_probability(k, args.block_bits)))
    if "overload" in sections:
        print(_tsv("# FPR of a Bloom filter overloaded by factor gamma"))
        print(_tsv("gamma", "k", "fpr"))
        gammas = [args.gamma] if args.gamma else [g / 10 for g in range(10, 16)]
        for g in gammas:
            for k in [args.k] if args.k else (4, 10, 14, 17, 20):
                print(_tsv(g, k, overload_fpr(g, k)))
    if "size" in sections:
        if not args.n or not args.k:
            raise UsageError("--size needs --n and --k")
        m, blocks = size_for(args.n, args.k, args.relative_size,
                             args.block_bits, max(1, args.threads))
        print(_tsv("n", "k", "rel_size", "m_bits", "blocks"))
        print(_tsv(args.n, args.k, args.relative_size, m, blocks))
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = bench_mod.run_benchmark(n=args.n, k=args.k,
                                   n_lookups=args.lookups, seed=args.seed)
    print(_tsv("kind", "c", "insert_Mkeys_s", "hit_lookup_Mkeys_s",
               "miss_lookup_Mkeys_s"))
    for r in rows:
        print(_tsv(r.kind, r.choices, round(r.insert_mkeys, 2),
                   round(r.hit_lookup_mkeys, 2), round(r.miss_lookup_mkeys, 2)))
    for note in bench_mod.ordering_notes(rows):
        print(note, file=sys.stderr)
    return EXIT_OK


def _add_key_input(p, required=True):
    p.add_argument("--keys", required=required, help="key file, '-' for stdin")
    p.add_argument("--format", default="u64le", choices=["u64le", "text", "fasta"])
    p.add_argument("--q", type=int, default=None, help="q-gram length for fasta")
    p.add_argument("--no-canonical", action="store_true",
                   help="keep q-grams strand-specific")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blowchoc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a filter from a key stream")
    p.add_argument("--kind", required=True,
                   choices=["standard", "blocked", "blowchoc"])
    p.add_argument("--k", type=int, required=True,
                   help="bit address functions per key")
    p.add_argument("--choices", type=int, default=None)
    p.add_argument("--n", type=int, default=None, help="planned key count")
    p.add_argument("--size-bits", type=int, default=None,
                   help="filter size in bits instead of --n")
    p.add_argument("--relative-size", type=float, default=1.0)
    p.add_argument("--cost", choices=["exp", "mix", "la"], default=None)
    p.add_argument("--cost-param", type=float, default=None)
    p.add_argument("--strategy", choices=["random", "distinct"], default="random")
    p.add_argument("--threads", type=int, default=0,
                   help="shard/worker threads; 0 builds sequentially")
    p.add_argument("--seed", type=int, default=0)
    _add_key_input(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="query keys against a stored filter")
    p.add_argument("--filter", required=True)
    _add_key_input(p)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("fpr", help="estimate the empirical FPR of a filter")
    p.add_argument("--filter", required=True)
    p.add_argument("--negatives", type=int, default=10**6,
                   help="generated negative queries (odd keys)")
    p.add_argument("--neg-seed", type=int, default=0xFEEDBEEF)
    p.add_argument("--threads", type=int, default=1)
    _add_key_input(p, required=False)
    p.set_defaults(func=cmd_fpr, keys=None)

    p = sub.add_parser("hist", help="per-block load histogram of a filter")
    p.add_argument("--filter", required=True)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("sweep", help="FPR over a relative-size grid")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--negatives", type=int, default=10**7)
    p.add_argument("--kinds", default="standard,blocked,blowchoc")
    p.add_argument("--choices-list", default="2,3")
    p.add_argument("--strategies", default="random")
    p.add_argument("--cost", choices=["exp", "mix", "la"], default=None)
    p.add_argument("--cost-param", type=float, default=None)
    p.add_argument("--rel-min", type=float, default=0.8)
    p.add_argument("--rel-max", type=float, default=1.3)
    p.add_argument("--rel-step", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="analytic tables: loads, collisions, overload")
    p.add_argument("--max-load", dest="max_load", action="store_true")
    p.add_argument("--collision", action="store_true")
    p.add_argument("--overload", action="store_true")
    p.add_argument("--size", action="store_true")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--choices", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--relative-size", type=float, default=1.0)
    p.add_argument("--block-bits", type=int, default=512)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bench", help="informational throughput benchmark")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--k", type=int, default=14)
    p.add_argument("--lookups", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FilterFormatError as exc:
        print(f"error: corrupt filter file: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except KeyFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
