import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wftiming.defense import (
    BurstSequence,
    burst_sequence_from_trace,
    defended_burst_sizes,
    mold_trace,
    overhead_report,
    overheads,
    pair_sites,
    supersequence,
)
from wftiming.synthetic import make_trace
from wftiming.trace import Packet, Trace, parse_trace, segment_bursts_by_time

sizes_strategy = st.lists(st.integers(1, 30), min_size=1, max_size=12)


def seq(*sizes) -> BurstSequence:
    return BurstSequence(tuple(sizes))


def alternating_trace(sizes, gap=0.2, intra=0.01) -> Trace:
    return make_trace(np.random.default_rng(0), list(sizes), gap_scale=gap, intra_gap=intra)


def test_supersequence_examples():
    assert supersequence(seq(3, 5, 2), seq(4, 2, 2)).sizes == (4, 5, 2)
    assert supersequence(seq(3, 5), seq(3, 5, 7, 1)).sizes == (3, 5, 7, 1)
    assert supersequence(seq(2, 9), seq(2, 9)).sizes == (2, 9)


@given(sizes_strategy, sizes_strategy)
@settings(max_examples=200, deadline=None)
def test_supersequence_properties(a_sizes, b_sizes):
    a, b = seq(*a_sizes), seq(*b_sizes)
    s = supersequence(a, b)
    assert s.sizes == supersequence(b, a).sizes  # commutative
    assert supersequence(a, a).sizes == a.sizes  # idempotent
    assert len(s) == max(len(a), len(b))
    for i, size in enumerate(a.sizes):
        assert s[i] >= size  # dominates both inputs
    for i, size in enumerate(b.sizes):
        assert s[i] >= size


def test_burst_sequence_rejects_bad_sizes():
    with pytest.raises(ValueError):
        BurstSequence((3, 0, 2))


def test_burst_sequence_from_trace_requires_outgoing_start():
    trace = parse_trace("0.0\t-1\n0.1\t1")
    with pytest.raises(ValueError, match="outgoing"):
        burst_sequence_from_trace(trace)


def test_burst_sequence_from_trace(four_burst_trace):
    assert burst_sequence_from_trace(four_burst_trace, 0.3).sizes == (3, 3, 2, 2)


def test_mold_pads_to_target():
    real = alternating_trace([3, 5])
    defended, plan = mold_trace(real, seq(4, 5), threshold=0.3)
    assert plan.real_sizes == (3, 5)
    assert plan.padding == (1, 0)
    assert plan.tail_sizes == ()
    assert plan.defended_sizes == (4, 5)
    assert not plan.leaked
    assert defended_burst_sizes(defended) == (4, 5)


def test_mold_appends_fake_tail_bursts():
    real = alternating_trace([3])
    defended, plan = mold_trace(real, seq(3, 2, 2), threshold=0.3)
    assert plan.tail_sizes == (2, 2)
    assert plan.defended_sizes == (3, 2, 2)
    assert defended_burst_sizes(defended) == (3, 2, 2)
    # fake bursts alternate direction after the real traffic
    dirs = [b.direction for b in segment_bursts_by_time(defended, 1e9)]
    assert dirs == [1, -1, 1]


def test_mold_overflow_flagged_never_dropped():
    real = alternating_trace([6])
    defended, plan = mold_trace(real, seq(4), threshold=0.3)
    assert plan.overflow == (True,)
    assert plan.leaked
    assert plan.padding == (0,)
    assert defended_burst_sizes(defended) == (6,)
    assert len(defended) == 6  # all real packets kept


def test_mold_extra_real_bursts_flagged():
    real = alternating_trace([3, 4, 2])
    defended, plan = mold_trace(real, seq(3, 4), threshold=0.3)
    assert plan.overflow == (False, False, True)
    assert defended_burst_sizes(defended) == (3, 4, 2)


def test_mold_rejects_empty_inputs():
    real = alternating_trace([2, 2])
    with pytest.raises(ValueError):
        mold_trace(real, BurstSequence(()), threshold=0.3)
    with pytest.raises(ValueError):
        mold_trace(Trace(()), seq(1), threshold=0.3)


def test_queue_then_flush_timestamps():
    real = alternating_trace([2, 3], gap=0.5, intra=0.02)
    segments = segment_bursts_by_time(real, 0.3)
    defended, _ = mold_trace(real, seq(4, 4), threshold=0.3)
    out = segment_bursts_by_time(defended, 1e9)
    for seg, orig in zip(out, segments):
        assert len(set(seg.timestamps)) == 1  # all packets flushed together
        assert seg.first == pytest.approx(orig.last + 0.3)


def test_defended_never_smaller_than_real():
    rng = np.random.default_rng(77)
    for _ in range(50):
        sizes = list(rng.integers(1, 9, size=rng.integers(1, 8)))
        real = make_trace(rng, sizes)
        tgt_sizes = list(rng.integers(1, 9, size=rng.integers(1, 8)))
        defended, _ = mold_trace(real, seq(*tgt_sizes), threshold=0.3)
        assert len(defended) >= len(real)


def test_perfect_molding_indistinguishability():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a_sizes = list(rng.integers(1, 12, size=rng.integers(1, 10)))
        b_sizes = list(rng.integers(1, 12, size=rng.integers(1, 10)))
        a = make_trace(rng, a_sizes)
        b = make_trace(rng, b_sizes)
        target = supersequence(
            burst_sequence_from_trace(a, 0.3), burst_sequence_from_trace(b, 0.3)
        )
        da, plan_a = mold_trace(a, target, threshold=0.3)
        db, plan_b = mold_trace(b, target, threshold=0.3)
        assert not plan_a.leaked and not plan_b.leaked
        assert defended_burst_sizes(da) == target.sizes
        assert defended_burst_sizes(db) == target.sizes


def test_pairing_schedule_seeded_and_symmetric():
    a = pair_sites([1, 2], [100, 200], samples=4, seed=3)
    b = pair_sites([1, 2], [100, 200], samples=4, seed=3)
    assert a == b
    assert pair_sites([1, 2], [100, 200], samples=4, seed=4) != a
    # every forward pairing is followed by its reverse
    for fwd, rev in zip(a[::2], a[1::2]):
        assert (fwd.visit_site, fwd.decoy_site) == (rev.decoy_site, rev.visit_site)
        assert fwd.instance_id == rev.instance_id


def test_pairing_triples_unique_at_scale():
    schedule = pair_sites(list(range(100)), list(range(10_000)), samples=5000, seed=0)
    keys = {
        (v.visit_site, v.decoy_site, v.instance_id, v.monitored_visit)
        for v in schedule
    }
    assert len(keys) == len(schedule) == 10_000
    assert sum(v.monitored_visit for v in schedule) == 5000  # half per direction


def test_pairing_rejects_empty_lists():
    with pytest.raises(ValueError):
        pair_sites([], [1], samples=1)
    with pytest.raises(ValueError):
        pair_sites([1], [], samples=1)


def test_overheads_identity():
    real = alternating_trace([3, 3])
    ov = overheads(real, real)
    assert ov.bandwidth == 1.0
    assert ov.latency == pytest.approx(1.0)


def test_overheads_bandwidth_ratio():
    real = Trace(tuple(Packet(i * 0.01, 1) for i in range(100)))
    defended = Trace(tuple(Packet(i * 0.01, 1) for i in range(221)))
    assert overheads(real, defended).bandwidth == pytest.approx(2.21)


def test_overheads_zero_duration_floor():
    real = Trace((Packet(0.0, 1),))
    defended = Trace((Packet(0.0, 1), Packet(1.0, -1)))
    ov = overheads(real, defended)
    assert ov.bandwidth == 2.0
    assert ov.latency > 0


def test_overheads_reject_empty():
    with pytest.raises(ValueError):
        overheads(Trace(()), Trace(()))


def test_overhead_report_matches_hand_computation():
    rng = np.random.default_rng(9)
    pairs = []
    expected_bw, expected_lat = [], []
    for sizes, target in [
        ([2, 3], (4, 3)),
        ([1, 2], (1, 2)),
        ([5, 1, 2], (5, 2, 2)),
        ([3, 3], (3, 3)),
        ([2, 1], (6, 1)),
    ]:
        real = make_trace(rng, sizes)
        defended, _ = mold_trace(real, seq(*target), threshold=0.3)
        pairs.append((real, defended))
        expected_bw.append(len(defended) / len(real))
        expected_lat.append(defended.duration / real.duration)
    report = overhead_report(pairs)
    assert report.count == 5
    assert report.bandwidth_mean == pytest.approx(np.mean(expected_bw))
    assert report.bandwidth_std == pytest.approx(np.std(expected_bw))
    assert report.latency_mean == pytest.approx(np.mean(expected_lat))
    assert report.latency_std == pytest.approx(np.std(expected_lat))
