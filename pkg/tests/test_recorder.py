import numpy as np
import pytest

from safesim import (
    MalformedHeaderError,
    RaggedRowError,
    Recording,
    UnknownVersionError,
    constant_source,
    gen_sinusoid,
    label_packet_granular,
    label_sample_accurate,
    packetize,
    read_csv,
    reassemble,
    run_acquisition,
    safe_device_spec,
    transmit,
    write_csv,
)
from safesim.transport import ContiguousRecord

SPEC = safe_device_spec()


def build_recording(duration=1.0, loss=0.2, seed=5, triggers=True):
    src = gen_sinusoid(50.0, 20.0, duration_s=duration)
    frames = run_acquisition(src, SPEC, duration, seed=seed)
    packets = packetize(frames, SPEC)
    received = transmit(packets, loss, seed=seed + 1)
    record = reassemble(received, SPEC, len(frames))
    times = [0.1 * duration, 0.5 * duration, 0.85 * duration]
    trig = label_packet_granular(times, SPEC) if triggers else []
    return Recording(
        spec=SPEC,
        record=record,
        triggers=trig,
        metadata={"seed": str(seed), "source": src.description, "start_time": "session-clock-0"},
    )


def assert_recordings_equal(a: Recording, b: Recording):
    assert a.spec == b.spec
    assert np.array_equal(a.record.values_uv, b.record.values_uv, equal_nan=True)
    assert a.record.gaps == b.record.gaps
    assert a.record.sample_rate_hz == b.record.sample_rate_hz
    assert a.triggers == b.triggers
    assert a.metadata == b.metadata


def test_roundtrip_identity(tmp_path):
    rec = build_recording()
    path = tmp_path / "session.csv"
    write_csv(rec, path)
    assert_recordings_equal(rec, read_csv(path))


def test_roundtrip_identity_lossless_sample_accurate(tmp_path):
    src = constant_source(1.0, 0.5)
    frames = run_acquisition(src, SPEC, 0.5, seed=1)
    record = reassemble(packetize(frames, SPEC), SPEC, len(frames))
    rec = Recording(SPEC, record, label_sample_accurate([0.25], SPEC), {"seed": "1"})
    path = tmp_path / "s.csv"
    write_csv(rec, path)
    assert_recordings_equal(rec, read_csv(path))


def test_rewrite_is_byte_identical(tmp_path):
    rec = build_recording()
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(rec, p1)
    write_csv(read_csv(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_file_layout(tmp_path):
    rec = build_recording(duration=0.5, loss=0.0)
    path = tmp_path / "session.csv"
    write_csv(rec, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# safe-csv-1"
    header_at = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    assert lines[header_at] == "frame_index,ch1,ch2,ch3,ch4,ch5,ch6,trigger,gap"
    # row count: one per frame after comments and header
    assert len(lines) - header_at - 1 == rec.record.n_frames
    first = lines[header_at + 1].split(",")
    assert first[0] == "0" and len(first) == 9
    float(first[1])  # 6-decimal channel cell parses


def test_empty_record_header_only(tmp_path):
    record = ContiguousRecord(np.empty((0, 6)), [], SPEC.sample_rate_hz)
    rec = Recording(SPEC, record, [], {"seed": "0"})
    path = tmp_path / "empty.csv"
    write_csv(rec, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# safe-csv-1"
    assert lines[-1] == "frame_index,ch1,ch2,ch3,ch4,ch5,ch6,trigger,gap"
    back = read_csv(path)
    assert back.record.n_frames == 0


def test_dropped_packet_rows(tmp_path):
    rec = build_recording(duration=0.5, loss=0.0)
    # force a gap across packet 2
    rec.record.values_uv[82:123] = np.nan
    rec.record.gaps.append((82, 123))
    path = tmp_path / "gap.csv"
    write_csv(rec, path)
    lines = path.read_text().splitlines()
    header_at = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    rows = lines[header_at + 1 :]
    gap_rows = [r for r in rows if r.endswith(",1")]
    assert len(gap_rows) == 41
    for r in gap_rows:
        cells = r.split(",")
        assert all(c == "" for c in cells[1:7])  # empty channel cells
    back = read_csv(path)
    assert back.record.gaps == [(82, 123)]
    assert np.all(np.isnan(back.record.values_uv[82:123]))


def test_trigger_column_marks_anchor_frames(tmp_path):
    rec = build_recording(duration=1.0, loss=0.0)
    path = tmp_path / "t.csv"
    write_csv(rec, path)
    from safesim import anchor_frame

    anchors = {anchor_frame(t, SPEC) for t in rec.triggers}
    lines = path.read_text().splitlines()
    header_at = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    marked = {
        int(r.split(",")[0])
        for r in lines[header_at + 1 :]
        if r.split(",")[-2] == "1"
    }
    assert marked == anchors


def test_unknown_version_error(tmp_path):
    path = tmp_path / "v2.csv"
    path.write_text("# safe-csv-2\nframe_index\n", encoding="utf-8")
    with pytest.raises(UnknownVersionError):
        read_csv(path)


def test_malformed_header_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# safe-csv-1\n# total_frames=0\nframe_index,ch1\n", encoding="utf-8")
    with pytest.raises(MalformedHeaderError):
        read_csv(path)


def test_ragged_row_error_names_line(tmp_path):
    rec = build_recording(duration=0.1, loss=0.0, triggers=False)
    path = tmp_path / "ragged.csv"
    write_csv(rec, path)
    lines = path.read_text().splitlines()
    header_at = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    bad_line_no = header_at + 3  # 0-based index of the third data row
    lines[bad_line_no] = lines[bad_line_no] + ",999"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(RaggedRowError) as err:
        read_csv(path)
    assert f"line {bad_line_no + 1}" in str(err.value)


def test_recording_validates_triggers_and_channels():
    record = ContiguousRecord(np.zeros((100, 6)), [], SPEC.sample_rate_hz)
    with pytest.raises(ValueError):
        Recording(SPEC, record, label_sample_accurate([10.0], SPEC))  # beyond session
    bad = ContiguousRecord(np.zeros((100, 3)), [], SPEC.sample_rate_hz)
    with pytest.raises(ValueError):
        Recording(SPEC, bad, [])
    mixed = label_sample_accurate([0.01], SPEC) + label_packet_granular([0.02], SPEC)
    with pytest.raises(ValueError):
        Recording(SPEC, record, mixed)
