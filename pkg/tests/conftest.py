import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,  # first kernel call may hit the JIT
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=60,
    derandomize=True,
)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) every kernel before any timed test."""
    from blowchoc import Filter, FilterConfig, even_keys, odd_keys

    keys = even_keys(64, 1)
    negs = odd_keys(64, 2)
    for kind, choices, strategy in [
        ("standard", None, "random"),
        ("blocked", 1, "random"),
        ("blowchoc", 2, "random"),
        ("blowchoc", 2, "distinct"),
    ]:
        f = Filter.from_config(FilterConfig(
            kind=kind, k=4, n_capacity=64, choices=choices, strategy=strategy))
        f.insert_many(keys)
        f.count_hits(negs)


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
