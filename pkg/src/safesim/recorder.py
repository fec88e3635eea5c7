"""Session persistence: CSV recordings with bit-exact round-tripping.

Dialect "safe-csv-1": comma separator, ``\\n`` line endings, leading ``#``
comment lines carrying the device spec, session metadata, trigger list,
and gap list, then a header row and one row per frame:

    frame_index, ch1..chN (microvolts, fixed 6 decimals), trigger, gap

Channel cells are empty inside gaps so fabricated values can never leak
into analysis; trigger is 1 on epoch anchor frames. The first comment line
is the version tag.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import DeviceSpec
from .transport import ContiguousRecord
from .triggering import LabelMode, TriggerEvent, anchor_frame

__all__ = [
    "Recording",
    "write_csv",
    "read_csv",
    "RecordingFormatError",
    "UnknownVersionError",
    "MalformedHeaderError",
    "RaggedRowError",
    "CSV_VERSION_TAG",
]

CSV_VERSION_TAG = "safe-csv-1"

_SPEC_FIELDS = (
    "sample_rate_hz",
    "adc_step_uv",
    "adc_bits",
    "interchannel_skew_us",
    "channel_count",
    "frames_per_packet",
    "noise_sigma_uv",
    "loss_probability",
)
_SPEC_INT_FIELDS = {"adc_bits", "channel_count", "frames_per_packet"}


class RecordingFormatError(ValueError):
    """Base class for recording file format violations."""


class UnknownVersionError(RecordingFormatError):
    pass


class MalformedHeaderError(RecordingFormatError):
    pass


class RaggedRowError(RecordingFormatError):
    pass


@dataclass
class Recording:
    """A reassembled record plus its trigger labels and session metadata.

    ``metadata`` holds free-form string pairs (seed, source description,
    start time, experiment tags); keys and values must not contain
    newlines and keys must not contain '='.
    """

    spec: DeviceSpec
    record: ContiguousRecord
    triggers: list[TriggerEvent] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.record.channel_count != self.spec.channel_count:
            raise ValueError(
                f"record has {self.record.channel_count} channels, spec says {self.spec.channel_count}"
            )
        modes = {t.label_mode for t in self.triggers}
        if len(modes) > 1:
            raise ValueError("all triggers in a recording must share one label mode")
        n = self.record.n_frames
        last_packet = max(0, (n - 1) // self.spec.frames_per_packet) if n else 0
        for t in self.triggers:
            if t.label_mode is LabelMode.SAMPLE_ACCURATE and not 0 <= t.label < n:
                raise ValueError(f"trigger sample index {t.label} outside session of {n} frames")
            if t.label_mode is LabelMode.PACKET_GRANULAR and not 0 <= t.label <= last_packet:
                raise ValueError(f"trigger packet seq {t.label} outside session")
        for key, value in self.metadata.items():
            if "=" in key or "\n" in key or "\n" in value:
                raise ValueError(f"invalid metadata entry {key!r}")

    @property
    def label_mode(self) -> LabelMode | None:
        return self.triggers[0].label_mode if self.triggers else None


def _header_row(channel_count: int) -> str:
    channels = ",".join(f"ch{c + 1}" for c in range(channel_count))
    return f"frame_index,{channels},trigger,gap"


def write_csv(recording: Recording, path: str | Path) -> None:
    """Write a recording in the safe-csv-1 dialect (see module docstring)."""
    spec = recording.spec
    rec = recording.record
    n = rec.n_frames

    lines = [f"# {CSV_VERSION_TAG}"]
    for name in _SPEC_FIELDS:
        value = getattr(spec, name)
        lines.append(f"# {name}={value!r}" if isinstance(value, float) else f"# {name}={value}")
    lines.append(f"# total_frames={n}")
    mode = recording.label_mode
    lines.append(f"# label_mode={mode.value if mode else 'none'}")
    for key, value in recording.metadata.items():
        lines.append(f"# meta {key}={value}")
    for t in recording.triggers:
        lines.append(f"# trigger={t.true_time_s!r},{t.label}")
    for g0, g1 in rec.gaps:
        lines.append(f"# gap={g0},{g1}")
    lines.append(_header_row(spec.channel_count))

    gap_mask = np.zeros(n, dtype=bool)
    for g0, g1 in rec.gaps:
        gap_mask[g0:g1] = True
    anchors = set()
    for t in recording.triggers:
        a = anchor_frame(t, spec)
        if 0 <= a < n:
            anchors.add(a)

    values = rec.values_uv
    empty_cells = "," * spec.channel_count
    for i in range(n):
        trig = 1 if i in anchors else 0
        if gap_mask[i]:
            lines.append(f"{i}{empty_cells},{trig},1")
        else:
            cells = ",".join(f"{v:.6f}" for v in values[i])
            lines.append(f"{i},{cells},{trig},0")

    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed to write recording to {path}: {exc}") from exc


def read_csv(path: str | Path) -> Recording:
    """Read a safe-csv-1 file; inverse of :func:`write_csv` on its image."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed to read recording from {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# {CSV_VERSION_TAG}":
        raise UnknownVersionError(f"{path}: first comment line is not the {CSV_VERSION_TAG} version tag")

    spec_fields: dict[str, str] = {}
    metadata: dict[str, str] = {}
    trigger_rows: list[tuple[float, int]] = []
    gaps: list[tuple[int, int]] = []
    total_frames: int | None = None
    mode_name: str | None = None

    idx = 1
    while idx < len(lines) and lines[idx].startswith("#"):
        body = lines[idx][1:].strip()
        idx += 1
        if body.startswith("meta "):
            key, _, value = body[5:].partition("=")
            metadata[key] = value
        elif body.startswith("trigger="):
            t_str, _, label_str = body[len("trigger="):].partition(",")
            trigger_rows.append((float(t_str), int(label_str)))
        elif body.startswith("gap="):
            g0, _, g1 = body[len("gap="):].partition(",")
            gaps.append((int(g0), int(g1)))
        elif body.startswith("total_frames="):
            total_frames = int(body.split("=", 1)[1])
        elif body.startswith("label_mode="):
            mode_name = body.split("=", 1)[1]
        elif "=" in body:
            key, value = body.split("=", 1)
            spec_fields[key] = value
        else:
            raise MalformedHeaderError(f"{path}: unrecognized comment line {body!r}")

    missing = [f for f in _SPEC_FIELDS if f not in spec_fields]
    if missing or total_frames is None or mode_name is None:
        raise MalformedHeaderError(f"{path}: incomplete metadata (missing {missing or 'total_frames/label_mode'})")
    try:
        spec = DeviceSpec.from_mapping(spec_fields)
    except ValueError as exc:
        raise MalformedHeaderError(f"{path}: bad device fields: {exc}") from exc

    if idx >= len(lines) or lines[idx] != _header_row(spec.channel_count):
        raise MalformedHeaderError(f"{path}: missing or wrong column header row")
    idx += 1

    data_lines = [ln for ln in lines[idx:] if ln]
    if len(data_lines) != total_frames:
        raise MalformedHeaderError(
            f"{path}: expected {total_frames} data rows, found {len(data_lines)}"
        )

    n_cols = spec.channel_count + 3
    values = np.full((total_frames, spec.channel_count), np.nan)
    for row_no, line in enumerate(data_lines):
        parts = line.split(",")
        if len(parts) != n_cols:
            # 1-based file line number: version line + comments + header precede
            raise RaggedRowError(f"{path}: row at line {idx + row_no + 1} has {len(parts)} cells, expected {n_cols}")
        if parts[-1] == "0":
            values[row_no] = [float(p) for p in parts[1:-2]]

    record = ContiguousRecord(values_uv=values, gaps=gaps, sample_rate_hz=spec.sample_rate_hz)
    if mode_name == "none":
        triggers: list[TriggerEvent] = []
    else:
        mode = LabelMode(mode_name)
        triggers = [TriggerEvent(t, label, mode) for t, label in trigger_rows]
    return Recording(spec=spec, record=record, triggers=triggers, metadata=metadata)
