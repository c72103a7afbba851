import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from mcllt.chain_core import Chain, Functional  # noqa: E402

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_chains(draw, min_N=3, max_N=6, max_states=3, integer=True):
    """Random uniformly elliptic chain with an integer (or real) functional."""
    N = draw(st.integers(min_N, max_N))
    sizes = [draw(st.integers(2, max_states)) for _ in range(N + 1)]
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    kernels = []
    for n in range(N):
        k = rng.uniform(0.05, 1.0, size=(sizes[n], sizes[n + 1]))
        kernels.append(k / k.sum(axis=1, keepdims=True))
    init = rng.uniform(0.1, 1.0, size=sizes[0])
    chain = Chain(tuple(kernels), init / init.sum())
    if integer:
        vals = tuple(rng.integers(-2, 3, size=(sizes[n], sizes[n + 1])).astype(float) for n in range(N))
        fun = Functional(vals, 1.0)
    else:
        vals = tuple(rng.normal(size=(sizes[n], sizes[n + 1])) for n in range(N))
        fun = Functional(vals)
    return chain, fun


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
