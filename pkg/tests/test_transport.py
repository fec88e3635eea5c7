import numpy as np
import pytest

from safesim import (
    SampleFrame,
    constant_source,
    loss_stats,
    packetize,
    read_capture,
    reassemble,
    run_acquisition,
    safe_device_spec,
    transmit,
    write_capture,
)

SPEC = safe_device_spec()


def make_frames(n, channels=6, seed=0):
    rng = np.random.default_rng(seed)
    values = np.round(rng.uniform(-100, 100, size=(n, channels)) / 0.125) * 0.125
    return [SampleFrame(i, values[i]) for i in range(n)]


def test_packetize_counts():
    packets = packetize(make_frames(30720), SPEC)
    assert len(packets) == 750
    assert len(packets[-1].frames) == 11  # 749 * 41 = 30709
    assert packets[0].first_frame_index == 0
    assert packets[1].first_frame_index == 41

    assert len(packetize(make_frames(41), SPEC)) == 1
    assert len(packetize(make_frames(307200), SPEC)) == 7493  # five-minute session


def test_packetize_rejects_non_contiguous():
    frames = make_frames(10)
    frames[3] = SampleFrame(99, frames[3].channel_values_uv)
    with pytest.raises(ValueError):
        packetize(frames, SPEC)


def test_transmit_identity_and_empty():
    packets = packetize(make_frames(410), SPEC)
    assert transmit(packets, 0.0, seed=1) == packets
    assert transmit(packets, 1.0, seed=1) == []
    with pytest.raises(ValueError):
        transmit(packets, 1.5, seed=1)


def test_transmit_order_and_determinism():
    packets = packetize(make_frames(4100), SPEC)
    rx1 = transmit(packets, 0.3, seed=9)
    rx2 = transmit(packets, 0.3, seed=9)
    assert rx1 == rx2
    seqs = [p.seq for p in rx1]
    assert seqs == sorted(seqs)
    assert len(rx1) < len(packets)


def test_transmit_mean_rate_over_seeds():
    packets = packetize(make_frames(30720), SPEC)
    fractions = []
    for seed in range(50):
        rx = transmit(packets, 0.05, seed=seed)
        fractions.append(loss_stats(rx, len(packets)).fraction_received)
    assert 0.94 <= float(np.mean(fractions)) <= 0.96


def test_roundtrip_identity_without_loss():
    frames = make_frames(1000)
    packets = packetize(frames, SPEC)
    record = reassemble(transmit(packets, 0.0, seed=0), SPEC, len(frames))
    assert record.gaps == []
    original = np.stack([f.channel_values_uv for f in frames])
    assert np.array_equal(record.values_uv, original)


def test_reassemble_single_gap():
    frames = make_frames(205)  # 5 packets of 41
    packets = packetize(frames, SPEC)
    received = [p for p in packets if p.seq != 2]
    record = reassemble(received, SPEC, 205)
    assert record.gaps == [(82, 123)]
    assert np.all(np.isnan(record.values_uv[82:123]))
    assert not np.any(np.isnan(record.values_uv[:82]))
    assert not np.any(np.isnan(record.values_uv[123:]))


def test_reassemble_adjacent_gaps_stay_separate():
    frames = make_frames(205)
    packets = packetize(frames, SPEC)
    received = [p for p in packets if p.seq not in (2, 3)]
    record = reassemble(received, SPEC, 205)
    assert record.gaps == [(82, 123), (123, 164)]


def test_reassemble_short_final_packet_gap():
    frames = make_frames(100)  # packets of 41, 41, 18
    packets = packetize(frames, SPEC)
    received = [p for p in packets if p.seq != 2]
    record = reassemble(received, SPEC, 100)
    assert record.gaps == [(82, 100)]


def test_reassemble_rejects_duplicates_and_overflow():
    frames = make_frames(82)
    packets = packetize(frames, SPEC)
    with pytest.raises(ValueError):
        reassemble([packets[0], packets[0]], SPEC, 82)
    with pytest.raises(ValueError):
        reassemble(packets, SPEC, 50)  # frames extend beyond total


def test_frame_conservation_under_random_loss():
    frames = make_frames(2050)
    packets = packetize(frames, SPEC)
    for seed in range(10):
        rx = transmit(packets, 0.3, seed=seed)
        record = reassemble(rx, SPEC, len(frames))
        in_gaps = sum(b - a for a, b in record.gaps)
        received_frames = sum(len(p.frames) for p in rx)
        assert in_gaps + received_frames == len(frames)


def test_record_segments():
    frames = make_frames(205)
    packets = packetize(frames, SPEC)
    record = reassemble([p for p in packets if p.seq != 2], SPEC, 205)
    assert record.segments() == [(0, 82), (123, 205)]
    assert record.overlaps_gap(80, 85)
    assert not record.overlaps_gap(0, 82)
    assert not record.overlaps_gap(123, 200)


def test_loss_stats_examples():
    frames = make_frames(30720)
    packets = packetize(frames, SPEC)
    report = loss_stats(packets[:712], 750)
    assert report.expected == 750
    assert report.received == 712
    assert report.fraction_received == pytest.approx(0.949333, abs=1e-6)
    assert loss_stats(packets, 750).fraction_received == 1.0
    assert loss_stats([], 750).fraction_received == 0.0
    with pytest.raises(ValueError):
        loss_stats(packets, 0)
    with pytest.raises(ValueError):
        loss_stats(packets, 10)


def test_capture_roundtrip(tmp_path):
    src = constant_source(0.0, 0.5)
    frames = run_acquisition(src, SPEC, 0.5, seed=3)
    packets = transmit(packetize(frames, SPEC), 0.2, seed=4)
    path = tmp_path / "session.cap"
    write_capture(packets, SPEC, path)
    back, channels, step = read_capture(path)
    assert channels == SPEC.channel_count
    assert step == SPEC.adc_step_uv
    assert len(back) == len(packets)
    for a, b in zip(packets, back):
        assert a.seq == b.seq
        assert a.first_frame_index == b.first_frame_index
        assert a.trigger_flag == b.trigger_flag
        for fa, fb in zip(a.frames, b.frames):
            assert fa.frame_index == fb.frame_index
            assert np.array_equal(fa.channel_values_uv, fb.channel_values_uv)


def test_capture_rejects_garbage(tmp_path):
    path = tmp_path / "bad.cap"
    path.write_bytes(b"not a capture")
    with pytest.raises(ValueError):
        read_capture(path)
