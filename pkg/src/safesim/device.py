"""Amplifier front-end model.

Simulates per-channel sequential sampling with a fixed inter-channel delay,
additive white Gaussian input noise, and signed-integer ADC quantization.
Any continuous signal source can drive an acquisition; acquisitions are
deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .kvconfig import read_key_value_file

__all__ = [
    "DeviceSpec",
    "SampleFrame",
    "SignalSource",
    "adc_quantize",
    "sample_frame",
    "run_acquisition",
    "safe_device_spec",
    "reference_device_spec",
    "DEVICE_PRESETS",
]


@dataclass(frozen=True)
class DeviceSpec:
    """Static description of one simulated amplifier.

    Fields
    ------
    sample_rate_hz : per-channel sampling rate.
    adc_step_uv : ADC step size in microvolts per code.
    adc_bits : ADC resolution; full scale is +/- adc_step_uv * 2**(adc_bits-1).
    interchannel_skew_us : delay between consecutive channel conversions
        inside one frame (sequential multiplexed sampling).
    channel_count : number of recorded channels.
    frames_per_packet : frames batched into one transport packet.
    noise_sigma_uv : std of the additive Gaussian input-referred noise.
    loss_probability : per-packet drop probability on the wireless link.
    """

    sample_rate_hz: float = 1024.0
    adc_step_uv: float = 0.125
    adc_bits: int = 16
    interchannel_skew_us: float = 10.0
    channel_count: int = 6
    frames_per_packet: int = 41
    noise_sigma_uv: float = 9.4
    loss_probability: float = 0.05

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.adc_step_uv <= 0:
            raise ValueError(f"adc_step_uv must be positive, got {self.adc_step_uv}")
        if self.adc_bits < 1:
            raise ValueError(f"adc_bits must be a positive integer, got {self.adc_bits}")
        if self.interchannel_skew_us < 0:
            raise ValueError(f"interchannel_skew_us must be nonnegative, got {self.interchannel_skew_us}")
        if self.channel_count < 1:
            raise ValueError(f"channel_count must be a positive integer, got {self.channel_count}")
        if self.frames_per_packet < 1:
            raise ValueError(f"frames_per_packet must be a positive integer, got {self.frames_per_packet}")
        if self.noise_sigma_uv < 0:
            raise ValueError(f"noise_sigma_uv must be nonnegative, got {self.noise_sigma_uv}")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError(f"loss_probability must be in [0, 1], got {self.loss_probability}")
        # All channels must fit inside one frame period.
        if self.interchannel_skew_us * self.channel_count >= 1e6 / self.sample_rate_hz:
            raise ValueError(
                "interchannel_skew_us * channel_count must be smaller than the frame period "
                f"({1e6 / self.sample_rate_hz:.3f} us)"
            )

    @property
    def full_scale_uv(self) -> float:
        return self.adc_step_uv * 2 ** (self.adc_bits - 1)

    @property
    def frame_period_s(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def skew_s(self) -> float:
        return self.interchannel_skew_us * 1e-6

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "DeviceSpec":
        """Build a spec from string key/value pairs; keys match field names."""
        kwargs: dict[str, float | int] = {}
        int_fields = {"adc_bits", "channel_count", "frames_per_packet"}
        valid = set(cls.__dataclass_fields__)
        for key, value in mapping.items():
            if key not in valid:
                raise ValueError(f"unknown DeviceSpec key {key!r}")
            kwargs[key] = int(value) if key in int_fields else float(value)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "DeviceSpec":
        return cls.from_mapping(read_key_value_file(path))


def safe_device_spec() -> DeviceSpec:
    """Wireless six-channel amplifier preset (1024 Hz, skewed, lossy link)."""
    return DeviceSpec()


def reference_device_spec() -> DeviceSpec:
    """Wired bench amplifier preset: 1200 Hz, simultaneous sampling, low
    noise, lossless transport."""
    return DeviceSpec(
        sample_rate_hz=1200.0,
        interchannel_skew_us=0.0,
        noise_sigma_uv=4.0,
        loss_probability=0.0,
    )


DEVICE_PRESETS: dict[str, Callable[[], DeviceSpec]] = {
    "safe": safe_device_spec,
    "reference": reference_device_spec,
}


@dataclass(frozen=True)
class SampleFrame:
    """One simultaneous-in-index sample of all channels, post quantization."""

    frame_index: int
    channel_values_uv: np.ndarray


@dataclass(frozen=True)
class SignalSource:
    """A deterministic voltage evaluator defined on [0, duration_s].

    ``channel_voltage(channel, t_s)`` maps a channel index and an array of
    times in seconds to voltages in microvolts. Evaluators must be pure:
    repeated calls with the same inputs return the same values.
    """

    duration_s: float
    channel_voltage: Callable[[int, np.ndarray], np.ndarray]
    description: str = ""

    def voltage_uv(self, channel: int, t_s: float | np.ndarray) -> np.ndarray:
        t = np.asarray(t_s, dtype=float)
        return np.asarray(self.channel_voltage(channel, t), dtype=float)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    # round-half-away-from-zero, so cross-implementation outputs match
    return np.trunc(x + np.copysign(0.5, x))


def adc_quantize(v_uv: float | np.ndarray, spec: DeviceSpec) -> float | np.ndarray:
    """Quantize voltages to the ADC grid.

    Codes are clamped to the signed range [-2**(bits-1), 2**(bits-1) - 1]
    and mapped back to microvolts. Rounding is half-away-from-zero. The
    operation is idempotent and rejects non-finite inputs.
    """
    v = np.asarray(v_uv, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("adc_quantize: input voltages must be finite")
    codes = _round_half_away(v / spec.adc_step_uv)
    lo = -(2 ** (spec.adc_bits - 1))
    hi = 2 ** (spec.adc_bits - 1) - 1
    out = np.clip(codes, lo, hi) * spec.adc_step_uv
    if np.isscalar(v_uv) or out.ndim == 0:
        return float(out)
    return out


def sample_frame(
    src: SignalSource,
    frame_index: int,
    spec: DeviceSpec,
    noise_stream: np.random.Generator,
) -> SampleFrame:
    """Sample one frame: channel c is read at t = frame_index/fs + c*skew.

    Gaussian noise (sigma = spec.noise_sigma_uv) is added per channel
    before quantization. The noise stream is always consumed, even at
    sigma = 0, so batched and frame-by-frame acquisition stay in step.
    """
    if frame_index < 0:
        raise ValueError("frame_index must be nonnegative")
    times = frame_index / spec.sample_rate_hz + np.arange(spec.channel_count) * spec.skew_s
    if times[-1] > src.duration_s:
        raise ValueError(
            f"frame {frame_index} samples at t={times[-1]:.6f} s, beyond source duration {src.duration_s} s"
        )
    clean = np.array([src.voltage_uv(c, times[c]) for c in range(spec.channel_count)], dtype=float)
    noisy = clean + noise_stream.normal(0.0, spec.noise_sigma_uv, size=spec.channel_count)
    return SampleFrame(frame_index, adc_quantize(noisy, spec))


def frame_count(duration_s: float, spec: DeviceSpec) -> int:
    """Number of whole frames in a session: floor(duration * rate)."""
    # tiny tolerance absorbs representation error in duration * rate
    return int(math.floor(duration_s * spec.sample_rate_hz + 1e-9))


def run_acquisition(
    src: SignalSource,
    spec: DeviceSpec,
    duration_s: float,
    seed: int,
) -> list[SampleFrame]:
    """Acquire floor(duration * rate) frames with indices contiguous from 0.

    Equivalent to repeated :func:`sample_frame` calls sharing one noise
    stream, but evaluated with array operations. Two acquisitions with
    identical (seed, spec, source) are bit-identical.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    if duration_s > src.duration_s + 1e-12:
        raise ValueError(f"duration {duration_s} s exceeds source duration {src.duration_s} s")
    n = frame_count(duration_s, spec)
    if n == 0:
        raise ValueError(f"duration {duration_s} s is shorter than one frame period")

    base_t = np.arange(n, dtype=float) / spec.sample_rate_hz
    clean = np.empty((n, spec.channel_count), dtype=float)
    for c in range(spec.channel_count):
        clean[:, c] = src.voltage_uv(c, base_t + c * spec.skew_s)

    rng = np.random.default_rng(seed)
    noisy = clean + rng.normal(0.0, spec.noise_sigma_uv, size=(n, spec.channel_count))
    quantized = adc_quantize(noisy, spec)
    return [SampleFrame(i, quantized[i]) for i in range(n)]
