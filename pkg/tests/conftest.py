import numpy as np
import pytest

from wftiming.trace import Packet, Trace, parse_trace

# The worked four-burst example: three outgoing packets, three incoming,
# two outgoing (first at 0.65), two incoming (first at 0.75).
FOUR_BURST_TEXT = (
    "0.0\t1\n"
    "0.10\t1\n"
    "0.20\t1\n"
    "0.40\t-1\n"
    "0.50\t-1\n"
    "0.60\t-1\n"
    "0.65\t1\n"
    "0.70\t1\n"
    "0.75\t-1\n"
    "0.85\t-1\n"
)


@pytest.fixture
def four_burst_trace() -> Trace:
    return parse_trace(FOUR_BURST_TEXT)


def random_trace(rng: np.random.Generator, max_len: int = 60) -> Trace:
    """A random normalized trace starting outgoing, for property tests."""
    n = int(rng.integers(1, max_len))
    gaps = rng.random(n) * 0.3
    gaps[0] = 0.0
    stamps = np.cumsum(gaps)
    dirs = rng.choice([1, -1], size=n)
    dirs[0] = 1
    return Trace(tuple(Packet(float(t), int(d)) for t, d in zip(stamps, dirs)))
