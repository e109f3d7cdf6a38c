import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wftiming.trace import (
    EmptyTraceError,
    Packet,
    Trace,
    TraceParseError,
    parse_trace,
    segment_bursts,
    segment_bursts_by_time,
    serialize_trace,
)

from conftest import FOUR_BURST_TEXT


def test_parse_four_burst_prefix():
    trace = parse_trace("0.0\t1\n0.10\t1\n0.20\t1\n0.40\t-1")
    assert len(trace) == 4
    assert list(trace.directions) == [1, 1, 1, -1]
    assert list(trace.timestamps) == [0.0, 0.10, 0.20, 0.40]


def test_parse_normalizes_origin():
    trace = parse_trace("5.0\t1\n5.5\t-1")
    assert list(trace.timestamps) == [0.0, 0.5]


def test_parse_accepts_float_directions():
    trace = parse_trace("0.0\t1.0\n0.1\t-1.00")
    assert list(trace.directions) == [1, -1]


def test_parse_rejects_bad_direction():
    with pytest.raises(TraceParseError, match="line 1"):
        parse_trace("0.0\t2")


def test_parse_rejects_malformed_line():
    with pytest.raises(TraceParseError, match="line 2"):
        parse_trace("0.0\t1\nnot-a-line")


def test_parse_rejects_decreasing_timestamps():
    with pytest.raises(TraceParseError, match="non-decreasing"):
        parse_trace("1.0\t1\n0.5\t1")


def test_parse_empty_file():
    with pytest.raises(EmptyTraceError):
        parse_trace("")
    with pytest.raises(EmptyTraceError):
        parse_trace("\n\n")


def test_serialize_round_trip():
    trace = parse_trace(FOUR_BURST_TEXT)
    again = parse_trace(serialize_trace(trace))
    assert np.array_equal(again.timestamps, trace.timestamps)
    assert np.array_equal(again.directions, trace.directions)


def test_four_burst_segmentation():
    bursts = segment_bursts(parse_trace(FOUR_BURST_TEXT))
    assert len(bursts) == 4
    assert bursts[0].timestamps == (0.0, 0.10, 0.20)
    assert bursts[1].first == 0.40
    assert bursts[2].first == 0.65
    assert bursts[3].first == 0.75
    assert [b.direction for b in bursts] == [1, -1, 1, -1]


def test_single_direction_is_one_burst():
    trace = parse_trace("\n".join(f"{i / 10}\t1" for i in range(5)))
    bursts = segment_bursts(trace)
    assert len(bursts) == 1
    assert bursts[0].size == 5


def test_alternating_packets_are_singleton_bursts():
    trace = parse_trace("0.0\t1\n0.1\t-1\n0.2\t1\n0.3\t-1")
    assert [b.size for b in segment_bursts(trace)] == [1, 1, 1, 1]


def test_empty_trace_segments_to_empty_list():
    assert segment_bursts(Trace(())) == []


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_segmentation_is_alternating_partition(data):
    n = data.draw(st.integers(1, 50))
    dirs = data.draw(st.lists(st.sampled_from([1, -1]), min_size=n, max_size=n))
    gaps = data.draw(
        st.lists(st.floats(0, 1, allow_nan=False), min_size=n, max_size=n)
    )
    stamps = np.cumsum(gaps)
    stamps -= stamps[0]
    trace = Trace(tuple(Packet(float(t), d) for t, d in zip(stamps, dirs)))
    bursts = segment_bursts(trace)
    assert sum(b.size for b in bursts) == len(trace)
    flattened = [t for b in bursts for t in b.timestamps]
    assert flattened == list(trace.timestamps)
    for b1, b2 in zip(bursts, bursts[1:]):
        assert b1.direction != b2.direction  # maximality


def test_time_threshold_splits_same_direction_gap():
    trace = parse_trace("0.0\t1\n0.1\t1\n0.5\t1")
    bursts = segment_bursts_by_time(trace, 0.3)
    assert [b.timestamps for b in bursts] == [(0.0, 0.1), (0.5,)]


def test_time_threshold_on_four_burst_example_matches_direction_segmentation():
    # All intra-burst gaps in the worked example are <= 0.10 s, so a 300 ms
    # threshold must split exactly at the direction changes.
    trace = parse_trace(FOUR_BURST_TEXT)
    assert segment_bursts_by_time(trace, 0.3) == segment_bursts(trace)


def test_time_threshold_single_packet():
    trace = parse_trace("0.0\t1")
    assert [b.size for b in segment_bursts_by_time(trace, 0.1)] == [1]


def test_time_threshold_rejects_nonpositive():
    trace = parse_trace("0.0\t1")
    with pytest.raises(ValueError):
        segment_bursts_by_time(trace, 0.0)
    with pytest.raises(ValueError):
        segment_bursts_by_time(trace, -1.0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_infinite_threshold_equals_direction_segmentation(seed):
    from conftest import random_trace

    trace = random_trace(np.random.default_rng(seed))
    assert segment_bursts_by_time(trace, math.inf) == segment_bursts(trace)


def test_burst_statistics():
    burst = segment_bursts(parse_trace(FOUR_BURST_TEXT))[0]
    assert burst.median() == pytest.approx(0.10)
    assert burst.variance() == pytest.approx(0.02 / 3)
    assert burst.length() == pytest.approx(0.2)
