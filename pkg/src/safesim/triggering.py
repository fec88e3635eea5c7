"""Stimulus trigger labeling.

Two fidelities are modeled. A wired amplifier timestamps the exact sample
of each trigger. The wireless receiver only learns which packet was being
collected when the trigger fired, so its labels are packet-granular and
its effective event time is the packet's completion. A uniform jitter
operation lets the sample-accurate arm emulate that coarseness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .device import DeviceSpec
from .transport import Packet

__all__ = [
    "LabelMode",
    "TriggerEvent",
    "label_sample_accurate",
    "label_packet_granular",
    "jitter_triggers",
    "anchor_frame",
    "flag_trigger_packets",
    "write_trigger_file",
    "read_trigger_file",
]


class LabelMode(Enum):
    SAMPLE_ACCURATE = "sample_accurate"
    PACKET_GRANULAR = "packet_granular"


@dataclass(frozen=True)
class TriggerEvent:
    """A stimulus timestamp plus its recorded label.

    ``label`` is a sample index for SAMPLE_ACCURATE events and a packet
    sequence number for PACKET_GRANULAR events.
    """

    true_time_s: float
    label: int
    label_mode: LabelMode


def _check_times(times: Sequence[float]) -> None:
    for t in times:
        if t < 0:
            raise ValueError(f"trigger times must be nonnegative, got {t}")


def label_sample_accurate(times: Sequence[float], spec: DeviceSpec) -> list[TriggerEvent]:
    """Label each trigger with its nearest sample index, order preserved."""
    _check_times(times)
    fs = spec.sample_rate_hz
    return [
        TriggerEvent(float(t), int(math.floor(t * fs + 0.5)), LabelMode.SAMPLE_ACCURATE)
        for t in times
    ]


def label_packet_granular(times: Sequence[float], spec: DeviceSpec) -> list[TriggerEvent]:
    """Label each trigger with the packet during which it occurred.

    Packet k spans sample times [k*fpp/fs, (k+1)*fpp/fs); a trigger on a
    boundary belongs to the packet containing its timestamp (half-open).
    """
    _check_times(times)
    fs = spec.sample_rate_hz
    fpp = spec.frames_per_packet
    return [
        TriggerEvent(float(t), int(math.floor(t * fs / fpp)), LabelMode.PACKET_GRANULAR)
        for t in times
    ]


def jitter_triggers(times: Sequence[float], range_ms: float, seed: int) -> list[float]:
    """Shift each trigger late by an independent uniform draw in [0, range_ms).

    Emulates packet-granular timing on a sample-accurate trigger train.
    Deterministic per seed; range 0 is the identity.
    """
    if range_ms < 0:
        raise ValueError(f"range_ms must be nonnegative, got {range_ms}")
    rng = np.random.default_rng(seed)
    shifts_s = rng.uniform(0.0, range_ms, size=len(times)) / 1000.0
    return [float(t + s) for t, s in zip(times, shifts_s)]


def anchor_frame(event: TriggerEvent, spec: DeviceSpec) -> int:
    """Epoch anchor frame for a labeled trigger.

    Sample-accurate events anchor at their sample. Packet-granular events
    anchor at the first frame after the labeled packet: the receiver only
    knows the event once that packet completes, so the anchor lags the
    true flash by up to one packet span. This matches the late-shift
    convention of :func:`jitter_triggers`, making the two labelings
    statistically equivalent (both anchors lag the flash by an
    approximately uniform 0..packet-span delay).
    """
    if event.label_mode is LabelMode.SAMPLE_ACCURATE:
        return event.label
    return (event.label + 1) * spec.frames_per_packet


def flag_trigger_packets(packets: list[Packet], times: Sequence[float], spec: DeviceSpec) -> list[Packet]:
    """Set trigger_flag on every packet whose span contains a trigger time."""
    _check_times(times)
    fs = spec.sample_rate_hz
    fpp = spec.frames_per_packet
    flagged = {int(math.floor(t * fs / fpp)) for t in times}
    return [replace(p, trigger_flag=True) if p.seq in flagged else p for p in packets]


def write_trigger_file(path: str | Path, events: Sequence[TriggerEvent]) -> None:
    """Serialize triggers as a two-column text file: true_time_s, label."""
    modes = {e.label_mode for e in events}
    if len(modes) > 1:
        raise ValueError("cannot serialize a mixed-mode trigger list")
    mode = next(iter(modes)).value if modes else "none"
    lines = [f"# label_mode={mode}"]
    lines += [f"{e.true_time_s!r},{e.label}" for e in events]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trigger_file(path: str | Path) -> list[TriggerEvent]:
    text = Path(path).read_text(encoding="utf-8")
    mode: LabelMode | None = None
    events: list[TriggerEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("label_mode="):
                value = body.split("=", 1)[1]
                mode = None if value == "none" else LabelMode(value)
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}: line {lineno}: expected 'true_time_s,label'")
        if mode is None:
            raise ValueError(f"{path}: trigger rows present but no label_mode declared")
        events.append(TriggerEvent(float(parts[0]), int(parts[1]), mode))
    return events
