"""Bloom, Blocked Bloom and blocked-Bloom-with-choices filters.

Build filters over 64-bit integer keys, persist them, and reproduce
FPR/space/load analyses at desk scale.
"""

from .analysis import (
    BracketError,
    FprEstimate,
    LoadHistogram,
    block_load_histogram,
    estimate_fpr,
    even_keys,
    max_allowed_load,
    odd_keys,
    required_overhead,
)
from .blockstore import BlockArray
from .filters import (
    ConfigError,
    CostModel,
    Filter,
    FilterConfig,
    GOLDEN_BETA,
    cost_exp,
    cost_la,
    cost_mix,
    overload_fpr,
    size_for,
)
from .hashing import (
    BitSelector,
    HashSpec,
    SplitMix64,
    collision_probability,
    eval_hash,
    make_hash,
    select_bits_distinct,
    select_bits_random,
)
from .io import (
    FilterFormatError,
    KeyFormatError,
    QGramEncoder,
    encode_qgrams,
    read_filter,
    read_keys,
    write_filter,
)
from .sharding import ShardPlan, build_sequential, build_sharded, route, route_many

__version__ = "0.1.0"

__all__ = [
    "BitSelector", "BlockArray", "BracketError", "ConfigError", "CostModel",
    "Filter", "FilterConfig", "FilterFormatError", "FprEstimate",
    "GOLDEN_BETA", "HashSpec", "KeyFormatError", "LoadHistogram",
    "QGramEncoder", "ShardPlan", "SplitMix64", "block_load_histogram",
    "build_sequential", "build_sharded", "collision_probability", "cost_exp",
    "cost_la", "cost_mix", "encode_qgrams", "estimate_fpr", "eval_hash",
    "even_keys", "make_hash", "max_allowed_load", "odd_keys", "overload_fpr",
    "read_filter", "read_keys", "required_overhead", "route", "route_many",
    "select_bits_distinct", "select_bits_random", "size_for", "write_filter",
]
