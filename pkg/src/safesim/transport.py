"""Packetized lossy transport.

Frames are batched into sequence-numbered packets, each packet is dropped
independently with a fixed probability, and the receiver reassembles the
stream with explicit gap intervals where packets went missing. Values
inside gaps are marked absent (NaN), never fabricated.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import DeviceSpec, SampleFrame

__all__ = [
    "Packet",
    "ContiguousRecord",
    "PacketLossReport",
    "packetize",
    "transmit",
    "reassemble",
    "loss_stats",
    "write_capture",
    "read_capture",
]

CAPTURE_MAGIC = b"SCAP"
CAPTURE_VERSION = 1


@dataclass(frozen=True)
class Packet:
    """One transport frame batch. ``first_frame_index == seq * frames_per_packet``;
    only the final packet of a session may hold fewer frames."""

    seq: int
    first_frame_index: int
    frames: tuple[SampleFrame, ...]
    trigger_flag: bool = False


@dataclass
class ContiguousRecord:
    """Received per-channel time series aligned to the global frame index.

    ``values_uv`` has shape (n_frames, n_channels) with NaN inside gaps.
    ``gaps`` lists half-open [start, stop) frame intervals of unreceived
    packets, sorted and disjoint; adjacent lost packets stay separate
    intervals so per-packet accounting is preserved.
    """

    values_uv: np.ndarray
    gaps: list[tuple[int, int]] = field(default_factory=list)
    sample_rate_hz: float = 1024.0

    @property
    def n_frames(self) -> int:
        return self.values_uv.shape[0]

    @property
    def channel_count(self) -> int:
        return self.values_uv.shape[1]

    def overlaps_gap(self, start: int, stop: int) -> bool:
        """True if the half-open frame interval [start, stop) touches any gap."""
        return any(g0 < stop and start < g1 for g0, g1 in self.gaps)

    def segments(self) -> list[tuple[int, int]]:
        """Contiguous received spans, the complement of the gap list."""
        spans: list[tuple[int, int]] = []
        pos = 0
        for g0, g1 in self.gaps:
            if g0 > pos:
                spans.append((pos, g0))
            pos = g1
        if pos < self.n_frames:
            spans.append((pos, self.n_frames))
        return spans


@dataclass(frozen=True)
class PacketLossReport:
    expected: int
    received: int
    fraction_received: float


def packetize(frames: list[SampleFrame], spec: DeviceSpec) -> list[Packet]:
    """Partition contiguous frames into ceil(n / frames_per_packet) packets."""
    for i, f in enumerate(frames):
        if f.frame_index != i:
            raise ValueError(f"frames must be contiguous from 0; index {f.frame_index} at position {i}")
    fpp = spec.frames_per_packet
    n_packets = math.ceil(len(frames) / fpp)
    return [
        Packet(seq=s, first_frame_index=s * fpp, frames=tuple(frames[s * fpp : (s + 1) * fpp]))
        for s in range(n_packets)
    ]


def transmit(packets: list[Packet], loss_probability: float, seed: int) -> list[Packet]:
    """Drop each packet independently with the given probability.

    Relative order is preserved; there is no retransmission, reordering,
    or duplication. Deterministic per seed.
    """
    if not 0.0 <= loss_probability <= 1.0:
        raise ValueError(f"loss_probability must be in [0, 1], got {loss_probability}")
    rng = np.random.default_rng(seed)
    draws = rng.random(len(packets))
    return [p for p, d in zip(packets, draws) if d >= loss_probability]


def reassemble(received: list[Packet], spec: DeviceSpec, total_frames: int) -> ContiguousRecord:
    """Place received frames by index; every missing seq becomes one gap
    interval spanning exactly that packet's frames."""
    if total_frames < 0:
        raise ValueError("total_frames must be nonnegative")
    fpp = spec.frames_per_packet
    n_packets = math.ceil(total_frames / fpp)

    values = np.full((total_frames, spec.channel_count), np.nan)
    seen: set[int] = set()
    last_seq = -1
    for p in received:
        if p.seq in seen:
            raise ValueError(f"duplicate packet seq {p.seq}")
        if p.seq <= last_seq:
            raise ValueError(f"packet seqs must be ascending; saw {p.seq} after {last_seq}")
        if p.first_frame_index != p.seq * fpp:
            raise ValueError(f"packet {p.seq}: first_frame_index {p.first_frame_index} != seq * frames_per_packet")
        stop = p.first_frame_index + len(p.frames)
        if stop > total_frames:
            raise ValueError(f"packet {p.seq} frames extend to {stop}, beyond total_frames {total_frames}")
        seen.add(p.seq)
        last_seq = p.seq
        if p.frames:
            values[p.first_frame_index : stop] = np.stack([f.channel_values_uv for f in p.frames])

    gaps = [
        (s * fpp, min((s + 1) * fpp, total_frames))
        for s in range(n_packets)
        if s not in seen
    ]
    return ContiguousRecord(values_uv=values, gaps=gaps, sample_rate_hz=spec.sample_rate_hz)


def loss_stats(received: list[Packet], expected: int) -> PacketLossReport:
    """Exact received/expected packet accounting."""
    if expected <= 0:
        raise ValueError(f"expected packet count must be positive, got {expected}")
    if len(received) > expected:
        raise ValueError(f"received {len(received)} packets but only {expected} expected")
    return PacketLossReport(
        expected=expected,
        received=len(received),
        fraction_received=len(received) / expected,
    )


# --- optional capture files -------------------------------------------------
#
# Binary layout, little-endian, version 1:
#   header: magic b"SCAP", u16 version, u16 channel_count, f64 adc_step_uv
#   per packet: u32 seq, u32 first_frame_index, u8 trigger_flag,
#               u8 frame_count, then frame_count * channel_count i16 ADC codes

_HEADER = struct.Struct("<4sHHd")
_PACKET_HEAD = struct.Struct("<IIBB")


def write_capture(packets: list[Packet], spec: DeviceSpec, path: str | Path) -> None:
    chunks = [_HEADER.pack(CAPTURE_MAGIC, CAPTURE_VERSION, spec.channel_count, spec.adc_step_uv)]
    for p in packets:
        if len(p.frames) > 255:
            raise ValueError(f"packet {p.seq}: frame_count {len(p.frames)} exceeds u8 range")
        chunks.append(_PACKET_HEAD.pack(p.seq, p.first_frame_index, int(p.trigger_flag), len(p.frames)))
        if p.frames:
            values = np.stack([f.channel_values_uv for f in p.frames])
            codes = np.rint(values / spec.adc_step_uv).astype("<i2")
            chunks.append(codes.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_capture(path: str | Path) -> tuple[list[Packet], int, float]:
    """Read a capture file; returns (packets, channel_count, adc_step_uv)."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated capture header")
    magic, version, channels, step = _HEADER.unpack_from(data, 0)
    if magic != CAPTURE_MAGIC:
        raise ValueError(f"{path}: not a capture file")
    if version != CAPTURE_VERSION:
        raise ValueError(f"{path}: unsupported capture version {version}")
    offset = _HEADER.size
    packets: list[Packet] = []
    while offset < len(data):
        seq, first_idx, flag, count = _PACKET_HEAD.unpack_from(data, offset)
        offset += _PACKET_HEAD.size
        nbytes = count * channels * 2
        if offset + nbytes > len(data):
            raise ValueError(f"{path}: truncated packet seq {seq}")
        codes = np.frombuffer(data, dtype="<i2", count=count * channels, offset=offset)
        offset += nbytes
        values = codes.reshape(count, channels).astype(float) * step
        frames = tuple(SampleFrame(first_idx + i, values[i]) for i in range(count))
        packets.append(Packet(seq=seq, first_frame_index=first_idx, frames=frames, trigger_flag=bool(flag)))
    return packets, channels, step
