"""Test-signal generation.

Produces the two stimulus families the validation experiments use: DAC
quantized sinusoids stepped down through a voltage-divider model, and
synthetic flash-response sessions (a stereotyped template repeating at a
fixed flash rate over Gaussian background activity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .device import SignalSource, _round_half_away

__all__ = [
    "DacModel",
    "VepTemplate",
    "biphasic_template",
    "gen_sinusoid",
    "sweep_frequencies",
    "gen_vep_session",
    "constant_source",
    "ramp_source",
]

DEFAULT_DAC_STEP_V = 610e-6
DEFAULT_POST_DIVIDER_STEP_V = 3.39e-12

# Raised-cosine background noise would need a spectral model; instead the
# background is sample-and-hold white noise on this fine grid, which keeps
# per-sample draws i.i.d. Gaussian for any consumer rate below the grid rate.
BACKGROUND_GRID_HZ = 8192.0


@dataclass(frozen=True)
class DacModel:
    """Signal generator DAC step and the divider that scales it down.

    The post-divider step (dac_step_v / divider_ratio) is the quantization
    granularity actually seen by the amplifiers. The default ratio is chosen
    so the post-divider step is 3.39e-12 V per code.
    """

    dac_step_v: float = DEFAULT_DAC_STEP_V
    divider_ratio: float = DEFAULT_DAC_STEP_V / DEFAULT_POST_DIVIDER_STEP_V

    def __post_init__(self) -> None:
        if self.dac_step_v <= 0:
            raise ValueError(f"dac_step_v must be positive, got {self.dac_step_v}")
        if self.divider_ratio <= 0:
            raise ValueError(f"divider_ratio must be positive, got {self.divider_ratio}")

    @property
    def post_divider_step_uv(self) -> float:
        return self.dac_step_v / self.divider_ratio * 1e6


def gen_sinusoid(
    amplitude_uv: float,
    freq_hz: float,
    dac: DacModel | None = None,
    duration_s: float = 30.0,
) -> SignalSource:
    """Divider-scaled, DAC-quantized sinusoid, identical on every channel.

    Quantization is applied at the DAC resolution before division, so the
    delivered signal deviates from the analytic sinusoid by at most half
    the post-divider step. A zero amplitude yields an identically zero
    source; negative amplitudes and non-positive frequencies are rejected.
    """
    if amplitude_uv < 0:
        raise ValueError(f"amplitude_uv must be nonnegative, got {amplitude_uv}")
    if freq_hz <= 0:
        raise ValueError(f"freq_hz must be positive, got {freq_hz}")
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    dac = dac or DacModel()
    step_uv = dac.post_divider_step_uv
    omega = 2.0 * math.pi * freq_hz

    def evaluate(channel: int, t_s: np.ndarray) -> np.ndarray:
        y = amplitude_uv * np.sin(omega * t_s)
        return _round_half_away(y / step_uv) * step_uv

    return SignalSource(
        duration_s=duration_s,
        channel_voltage=evaluate,
        description=f"sinusoid amplitude_uv={amplitude_uv!r} freq_hz={freq_hz!r}",
    )


def sweep_frequencies() -> list[float]:
    """Frequency sweep: 10..190 Hz in 10 Hz steps, mains and harmonics skipped."""
    mains = {50.0, 100.0, 150.0}
    return [float(f) for f in range(10, 200, 10) if float(f) not in mains]


@dataclass(frozen=True)
class VepTemplate:
    """Stereotyped flash-response waveform.

    ``waveform`` maps latency in milliseconds to microvolts and is zero
    outside [0, support_ms]. The largest-magnitude extremum sits at
    ``peak_time_ms`` and max - min over the support equals
    ``peak_to_peak_uv``.
    """

    waveform: Callable[[np.ndarray], np.ndarray]
    peak_time_ms: float
    peak_to_peak_uv: float
    support_ms: float = 200.0

    def __post_init__(self) -> None:
        if not 0.0 < self.peak_time_ms < self.support_ms:
            raise ValueError("peak_time_ms must lie strictly inside (0, support_ms)")
        if self.peak_to_peak_uv <= 0:
            raise ValueError("peak_to_peak_uv must be positive")


def _raised_cosine(lat_ms: np.ndarray, center_ms: float, half_width_ms: float) -> np.ndarray:
    x = (lat_ms - center_ms) / half_width_ms
    return np.where(np.abs(x) < 1.0, 0.5 * (1.0 + np.cos(np.pi * x)), 0.0)


def biphasic_template(peak_time_ms: float = 90.0, peak_to_peak_uv: float = 100.0) -> VepTemplate:
    """Biphasic raised-cosine pulse: small negative lobe then dominant
    positive lobe peaking at ``peak_time_ms``.

    Lobes do not overlap, so the extrema sit exactly at the lobe centers
    and max - min equals ``peak_to_peak_uv`` by construction.
    """
    support = 200.0
    w_pos = min(0.3 * peak_time_ms, support - peak_time_ms)
    w_neg = 0.55 * w_pos
    c_neg = peak_time_ms - w_pos - w_neg
    if w_pos <= 0 or c_neg - w_neg < 0:
        raise ValueError(f"peak_time_ms={peak_time_ms} leaves no room for the leading lobe")
    a_pos = peak_to_peak_uv / 1.5
    a_neg = 0.5 * a_pos

    def waveform(lat_ms: np.ndarray) -> np.ndarray:
        lat = np.asarray(lat_ms, dtype=float)
        return a_pos * _raised_cosine(lat, peak_time_ms, w_pos) - a_neg * _raised_cosine(lat, c_neg, w_neg)

    return VepTemplate(
        waveform=waveform,
        peak_time_ms=peak_time_ms,
        peak_to_peak_uv=peak_to_peak_uv,
        support_ms=support,
    )


def gen_vep_session(
    template: VepTemplate,
    flash_rate_hz: float,
    duration_s: float,
    background_sigma_uv: float,
    seed: int,
    channel_gains: Sequence[float] | None = None,
) -> tuple[SignalSource, list[float]]:
    """Flash-response session: template instances at each flash time plus
    Gaussian background activity.

    Returns the source and the exact flash times k / flash_rate_hz for
    k = 0 .. floor(duration * rate) - 1. The template is identical on all
    channels unless per-channel gains are supplied; background noise is
    independent per channel and deterministic per (seed, channel).

    The flash period must cover the response support plus an equally long
    pre-stimulus window, so consecutive analysis windows cannot overlap.
    """
    if flash_rate_hz <= 0:
        raise ValueError(f"flash_rate_hz must be positive, got {flash_rate_hz}")
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    if background_sigma_uv < 0:
        raise ValueError(f"background_sigma_uv must be nonnegative, got {background_sigma_uv}")
    window_s = 2.0 * template.support_ms / 1000.0
    if 1.0 / flash_rate_hz < window_s:
        raise ValueError(
            f"flash period {1.0 / flash_rate_hz:.3f} s overlaps the "
            f"{window_s:.3f} s analysis window of the next flash"
        )

    n_flashes = int(math.floor(duration_s * flash_rate_hz + 1e-9))
    flash_times = [k / flash_rate_hz for k in range(n_flashes)]
    support_s = template.support_ms / 1000.0
    gains = None if channel_gains is None else np.asarray(channel_gains, dtype=float)

    grid_n = int(math.floor(duration_s * BACKGROUND_GRID_HZ + 1e-9)) + 1

    def background(channel: int, t_s: np.ndarray) -> np.ndarray:
        if background_sigma_uv == 0.0:
            return np.zeros_like(t_s)
        rng = np.random.default_rng([seed, 0x5AFE, channel])
        cells = rng.standard_normal(grid_n) * background_sigma_uv
        idx = np.minimum((t_s * BACKGROUND_GRID_HZ).astype(np.int64), grid_n - 1)
        return cells[idx]

    def template_sum(t_sorted: np.ndarray) -> np.ndarray:
        out = np.zeros_like(t_sorted)
        for t_k in flash_times:
            i0 = np.searchsorted(t_sorted, t_k, side="left")
            i1 = np.searchsorted(t_sorted, t_k + support_s, side="right")
            if i1 > i0:
                out[i0:i1] += template.waveform((t_sorted[i0:i1] - t_k) * 1000.0)
        return out

    def evaluate(channel: int, t_s: np.ndarray) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t_s, dtype=float))
        if t.size > 1 and np.any(np.diff(t) < 0):
            order = np.argsort(t, kind="stable")
            resp = np.empty_like(t)
            resp[order] = template_sum(t[order])
        else:
            resp = template_sum(t)
        gain = 1.0 if gains is None else float(gains[channel])
        out = gain * resp + background(channel, t)
        return out if np.ndim(t_s) else out[0]

    src = SignalSource(
        duration_s=duration_s,
        channel_voltage=evaluate,
        description=(
            f"vep flash_rate_hz={flash_rate_hz!r} background_sigma_uv={background_sigma_uv!r} "
            f"peak_time_ms={template.peak_time_ms!r} peak_to_peak_uv={template.peak_to_peak_uv!r}"
        ),
    )
    return src, flash_times


def constant_source(value_uv: float, duration_s: float) -> SignalSource:
    return SignalSource(
        duration_s=duration_s,
        channel_voltage=lambda c, t: np.full_like(np.asarray(t, dtype=float), value_uv),
        description=f"constant {value_uv} uV",
    )


def ramp_source(slope_uv_per_us: float, duration_s: float) -> SignalSource:
    slope_per_s = slope_uv_per_us * 1e6
    return SignalSource(
        duration_s=duration_s,
        channel_voltage=lambda c, t: slope_per_s * np.asarray(t, dtype=float),
        description=f"ramp {slope_uv_per_us} uV/us",
    )
