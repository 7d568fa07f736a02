import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def scalar_sum(terms):
    """Plain-Python accumulation used by the hand oracles."""
    return math.fsum(terms)


@st.composite
def distributions(draw, size=None, min_size=2, max_size=6, positive=False):
    n = draw(st.integers(min_size, max_size)) if size is None else size
    # entries are either exact zeros or at least 1e-3, so they stay well
    # above the feasibility tolerances of the LP-based references
    entry = st.floats(1e-3, 1.0)
    if not positive:
        entry = st.one_of(st.just(0.0), entry)
    raw = draw(st.lists(entry, min_size=n, max_size=n))
    raw = np.array(raw)
    if raw.sum() <= 0:
        raw[0] = 1.0
    return raw / raw.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Collects the one-line verdict of each acceptance criterion."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
