"""Offline analysis pipeline.

Sine validation: zero-phase high-pass filtering, one-period epoching with
gap and artifact rejection, phase-only least-squares sine fitting, and the
residual RMSE that estimates recording noise.

Flash-response validation: per-trigger epoch extraction, averaging over
clean trials, amplitude / SNR / peak-time metrics, symmetric percent
differences between two recording arms, and one-sample t-tests on the
per-channel differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal, stats

from .device import DeviceSpec
from .recorder import Recording
from .transport import ContiguousRecord
from .triggering import anchor_frame

__all__ = [
    "Epoch",
    "SineFitResult",
    "VepMetrics",
    "ComparisonStats",
    "TrialSet",
    "MetricKind",
    "DegenerateDataError",
    "EmptyResultError",
    "highpass",
    "epoch_sine",
    "reject_artifacts",
    "fit_sine_phase",
    "epoch_vep",
    "vep_average",
    "vep_metrics",
    "session_vep_metrics",
    "percent_difference",
    "one_sample_ttest",
    "ttest_from_summary",
]

HIGHPASS_ORDER = 6  # twelfth-order response after forward-backward filtering


class DegenerateDataError(ValueError):
    """Statistic undefined on this input (zero variance, empty window)."""


class EmptyResultError(ValueError):
    """An operation rejected or skipped every input item."""


@dataclass
class Epoch:
    """A fixed-length single-channel signal window in microvolts."""

    values: np.ndarray
    start_frame: int
    clean: bool = True


@dataclass(frozen=True)
class SineFitResult:
    """Phase in (-pi, pi] minimizing the residual against the delivered
    sinusoid, and the RMSE at that phase."""

    phase_rad: float
    rmse_uv: float


@dataclass(frozen=True)
class VepMetrics:
    """Averaged-trace metrics: peak-to-peak amplitude on [0, 200] ms,
    post/pre variance ratio in dB, and the latency of the largest-magnitude
    extremum."""

    amplitude_uv: float
    snr_db: float
    peak_time_ms: float


@dataclass(frozen=True)
class ComparisonStats:
    """Per-channel symmetric percent differences with summary statistics.

    ``t_statistic`` and ``p_value`` are NaN when the differences have zero
    variance (the t-test is degenerate there).
    """

    d_percent: np.ndarray
    mean_d: float
    std_d: float
    t_statistic: float
    p_value: float


class MetricKind:
    AMPLITUDE = "amplitude"
    SNR = "snr"
    PEAK_TIME = "peak_time"
    ALL = (AMPLITUDE, SNR, PEAK_TIME)


@dataclass
class TrialSet:
    """Per-trigger epochs, all channels, aligned to their anchors.

    ``values_uv`` has shape (n_trials, n_samples, n_channels).
    ``clean`` flags trials free of transport gaps; only clean trials enter
    averages. ``pre_samples`` is the index of the anchor (t = 0) within
    each trial window. ``n_skipped`` counts triggers too close to the
    session edges to yield a full window.
    """

    values_uv: np.ndarray
    clean: np.ndarray
    pre_samples: int
    sample_rate_hz: float
    n_skipped: int = 0

    @property
    def n_trials(self) -> int:
        return self.values_uv.shape[0]

    @property
    def n_clean(self) -> int:
        return int(np.sum(self.clean))


# --- filtering ---------------------------------------------------------------


def _design_highpass(cutoff_hz: float, fs: float) -> np.ndarray:
    return signal.butter(HIGHPASS_ORDER, cutoff_hz, btype="highpass", fs=fs, output="sos")


def _warmup_samples(sos: np.ndarray) -> int:
    return 3 * (2 * sos.shape[0] + 1)


def highpass(
    record: ContiguousRecord,
    cutoff_hz: float = 3.0,
    edge_guard_s: float | None = None,
) -> ContiguousRecord:
    """Zero-phase high-pass filter, applied per contiguous segment.

    The response attenuates at least 60 dB at half the cutoff and deviates
    under 0.5 dB above 1.5x the cutoff; forward-backward application keeps
    features at their original latencies.

    A data boundary gives the filter no way to estimate sub-cutoff content,
    so each segment end carries a settling transient. The guard region
    (default 3.6 filter time constants, about 0.57 / cutoff seconds) at
    both ends of every segment is therefore marked unusable, as is any
    segment too short to keep an interior. Unusable frames join the output
    gap list and are masked, never returned as plausible-looking values.
    """
    fs = record.sample_rate_hz
    if cutoff_hz <= 0 or cutoff_hz >= fs / 2:
        raise ValueError(f"cutoff_hz must be in (0, Nyquist), got {cutoff_hz} at fs={fs}")
    if edge_guard_s is None:
        edge_guard_s = 3.6 / (2.0 * math.pi * cutoff_hz)
    if edge_guard_s < 0:
        raise ValueError(f"edge_guard_s must be nonnegative, got {edge_guard_s}")
    sos = _design_highpass(cutoff_hz, fs)
    warmup = _warmup_samples(sos)
    guard = int(math.ceil(edge_guard_s * fs))

    out = np.full_like(record.values_uv, np.nan)
    gaps = list(record.gaps)
    for a, b in record.segments():
        if b - a <= max(warmup, 2 * guard):
            gaps.append((a, b))  # unusable: no interior beyond the settling regions
            continue
        padlen = min(b - a - 1, max(warmup, 2 * guard))
        filtered = signal.sosfiltfilt(sos, record.values_uv[a:b], axis=0, padlen=padlen)
        out[a + guard : b - guard] = filtered[guard : (b - a) - guard]
        if guard:
            gaps.append((a, a + guard))
            gaps.append((b - guard, b))
    gaps.sort()
    return ContiguousRecord(values_uv=out, gaps=gaps, sample_rate_hz=fs)


# --- sine pipeline -----------------------------------------------------------


def epoch_sine(
    record: ContiguousRecord,
    freq_hz: float,
    spec: DeviceSpec,
    max_epochs: int = 200,
    channel: int = 0,
) -> list[Epoch]:
    """Segment one channel into one-period epochs.

    Epoch k spans frames [round(k*fs/f), round((k+1)*fs/f)), so lengths
    alternate around the (generally non-integer) period. Epochs that
    overlap a transport gap are skipped; the first ``max_epochs`` clean
    epochs are returned (fewer if the record runs out).
    """
    if freq_hz <= 0:
        raise ValueError(f"freq_hz must be positive, got {freq_hz}")
    if not 0 <= channel < record.channel_count:
        raise ValueError(f"channel {channel} out of range")
    period = spec.sample_rate_hz / freq_hz
    n = record.n_frames
    epochs: list[Epoch] = []
    k = 0
    while len(epochs) < max_epochs:
        a = int(math.floor(k * period + 0.5))
        b = int(math.floor((k + 1) * period + 0.5))
        if b > n:
            break
        if b > a and not record.overlaps_gap(a, b):
            window = record.values_uv[a:b, channel]
            if not np.any(np.isnan(window)):
                epochs.append(Epoch(values=window.copy(), start_frame=a, clean=True))
        k += 1
    return epochs


def reject_artifacts(epochs: list[Epoch], k_mad: float = 5.0) -> list[Epoch]:
    """Drop epochs whose peak absolute value exceeds median + k_mad * MAD
    of the peak values across epochs.

    A robust automated stand-in for by-eye artifact screening. Keeps
    epochs with peak <= threshold, so identical epochs (zero MAD) all
    survive. Requires at least 8 epochs; rejecting everything is an error.
    """
    if len(epochs) < 8:
        raise ValueError(f"need at least 8 epochs for robust statistics, got {len(epochs)}")
    peaks = np.array([float(np.max(np.abs(e.values))) for e in epochs])
    med = float(np.median(peaks))
    mad = float(np.median(np.abs(peaks - med)))
    keep = peaks <= med + k_mad * mad
    if not np.any(keep):
        raise EmptyResultError("artifact rejection removed every epoch")
    return [e for e, ok in zip(epochs, keep) if ok]


def fit_sine_phase(
    epoch: Epoch,
    amplitude_uv: float,
    freq_hz: float,
    spec: DeviceSpec,
) -> SineFitResult:
    """Fit only the phase of A*sin(2*pi*f*t + phi) to one epoch.

    Amplitude and frequency stay fixed at their delivered values; epoch
    sample times are absolute, t = (start_frame + i) / fs. The sum of
    squared residuals reduces to a closed form in five data moments, which
    is scanned on a coarse phase grid and then refined by bounded scalar
    minimization; the result matches a dense grid search to well under
    1e-3 rad.
    """
    if len(epoch.values) == 0:
        raise ValueError("cannot fit an empty epoch")
    if not epoch.clean:
        raise ValueError("refusing to fit an epoch marked unclean")
    x = np.asarray(epoch.values, dtype=float)
    t = (epoch.start_frame + np.arange(x.size)) / spec.sample_rate_hz
    theta = 2.0 * math.pi * freq_hz * t

    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    xs = float(x @ sin_t)
    xc = float(x @ cos_t)
    ss = float(sin_t @ sin_t)
    cc = float(cos_t @ cos_t)
    sc = float(sin_t @ cos_t)
    xx = float(x @ x)
    a = amplitude_uv

    def sse(phi: float) -> float:
        cp = math.cos(phi)
        sp = math.sin(phi)
        return xx - 2.0 * a * (xs * cp + xc * sp) + a * a * (ss * cp * cp + cc * sp * sp + 2.0 * sc * sp * cp)

    coarse = np.linspace(-math.pi, math.pi, 257)[1:]  # (-pi, pi], 256 points
    best = coarse[int(np.argmin([sse(p) for p in coarse]))]
    h = 2.0 * math.pi / 256
    res = optimize.minimize_scalar(sse, bounds=(best - h, best + h), method="bounded", options={"xatol": 1e-10})
    phi = float(res.x)
    phi = math.atan2(math.sin(phi), math.cos(phi))  # wrap to (-pi, pi]
    rmse = math.sqrt(max(sse(phi), 0.0) / x.size)
    return SineFitResult(phase_rad=phi, rmse_uv=rmse)


# --- flash-response pipeline ---------------------------------------------------


def epoch_vep(rec: Recording, pre_ms: float = 200.0, post_ms: float = 200.0) -> TrialSet:
    """Extract one epoch per trigger, anchored per the trigger's label mode.

    Windows span [anchor - pre, anchor + post] inclusive. Triggers whose
    window would cross a session edge are skipped and counted; trials
    overlapping transport gaps are kept but flagged unclean so averaging
    can exclude them.
    """
    if not rec.triggers:
        raise ValueError("recording has no triggers to epoch")
    fs = rec.spec.sample_rate_hz
    pre = int(math.floor(pre_ms / 1000.0 * fs + 0.5))
    post = int(math.floor(post_ms / 1000.0 * fs + 0.5))
    n = rec.record.n_frames

    windows: list[np.ndarray] = []
    flags: list[bool] = []
    skipped = 0
    for event in rec.triggers:
        anchor = anchor_frame(event, rec.spec)
        a = anchor - pre
        b = anchor + post + 1
        if a < 0 or b > n:
            skipped += 1
            continue
        windows.append(rec.record.values_uv[a:b])
        flags.append(not rec.record.overlaps_gap(a, b))
    if not windows:
        raise EmptyResultError("every trigger fell too close to a session edge")
    return TrialSet(
        values_uv=np.stack(windows),
        clean=np.array(flags, dtype=bool),
        pre_samples=pre,
        sample_rate_hz=fs,
        n_skipped=skipped,
    )


def vep_average(trials: TrialSet) -> np.ndarray:
    """Pointwise mean over clean trials; shape (n_samples, n_channels)."""
    if trials.n_clean == 0:
        raise EmptyResultError("no clean trials to average")
    return trials.values_uv[trials.clean].mean(axis=0)


def vep_metrics(
    trace: np.ndarray,
    fs: float,
    anchor_index: int | None = None,
    peak_time_override_ms: float | None = None,
) -> VepMetrics:
    """Metrics of one averaged single-channel trace spanning -pre..+post.

    amplitude = max - min on [0, 200] ms post anchor; snr_db uses the
    variance of the post window over the variance of the equally long pre
    window; peak_time is the latency of the largest-magnitude extremum in
    the post window, unless a manual override is supplied.
    """
    x = np.asarray(trace, dtype=float)
    if x.ndim != 1:
        raise ValueError("vep_metrics expects a single-channel trace")
    anchor = (x.size - 1) // 2 if anchor_index is None else anchor_index
    if not 0 < anchor < x.size - 1:
        raise ValueError("anchor index leaves no pre or post window")
    pre_len = min(anchor, x.size - 1 - anchor)

    post = x[anchor : anchor + pre_len]
    pre = x[anchor - pre_len : anchor]
    post_incl = x[anchor : anchor + pre_len + 1]

    amplitude = float(np.max(post_incl) - np.min(post_incl))
    pre_var = float(np.var(pre))
    post_var = float(np.var(post))
    if pre_var == 0.0:
        raise DegenerateDataError("pre-window variance is zero; SNR undefined")
    snr_db = 10.0 * math.log10(post_var / pre_var)

    if peak_time_override_ms is not None:
        peak_time = float(peak_time_override_ms)
    else:
        peak_idx = int(np.argmax(np.abs(post_incl)))
        peak_time = peak_idx / fs * 1000.0
    return VepMetrics(amplitude_uv=amplitude, snr_db=snr_db, peak_time_ms=peak_time)


def session_vep_metrics(
    avg: np.ndarray,
    fs: float,
    anchor_index: int | None = None,
    peak_overrides: dict[int, float] | None = None,
) -> list[VepMetrics]:
    """Per-channel metrics of an averaged (n_samples, n_channels) trace."""
    overrides = peak_overrides or {}
    return [
        vep_metrics(avg[:, c], fs, anchor_index=anchor_index, peak_time_override_ms=overrides.get(c))
        for c in range(avg.shape[1])
    ]


# --- comparison statistics ----------------------------------------------------


def percent_difference(
    safe_values: np.ndarray,
    ref_values: np.ndarray,
    metric: str,
) -> ComparisonStats:
    """Symmetric percent difference between the two recording arms.

    For amplitude and SNR, d = 100 * (ref - safe) / mean(ref, safe); for
    peak time, d = 100 * (safe - ref) / mean(safe, ref). Either way a
    negative d means the wireless arm recorded a larger amplitude/SNR or
    an earlier peak. Swapping the arms negates every d.
    """
    if metric not in MetricKind.ALL:
        raise ValueError(f"unknown metric {metric!r}")
    s = np.asarray(safe_values, dtype=float)
    r = np.asarray(ref_values, dtype=float)
    if s.shape != r.shape:
        raise ValueError(f"channel counts differ: {s.shape} vs {r.shape}")
    means = (s + r) / 2.0
    if np.any(means == 0.0):
        raise DegenerateDataError("channel with zero mean(safe, reference); percent difference undefined")
    if metric == MetricKind.PEAK_TIME:
        d = 100.0 * (s - r) / means
    else:
        d = 100.0 * (r - s) / means
    mean_d = float(np.mean(d))
    std_d = float(np.std(d, ddof=1)) if d.size > 1 else 0.0
    if d.size >= 2:
        try:
            t_stat, p_value = one_sample_ttest(d)
        except DegenerateDataError:
            t_stat, p_value = math.nan, math.nan
    else:
        t_stat, p_value = math.nan, math.nan
    return ComparisonStats(d_percent=d, mean_d=mean_d, std_d=std_d, t_statistic=t_stat, p_value=p_value)


def one_sample_ttest(d: np.ndarray) -> tuple[float, float]:
    """Two-tailed one-sample t-test of the mean against zero.

    t = mean / (std / sqrt(n)) with the sample std (ddof = 1); p comes
    from the t distribution with n - 1 degrees of freedom. Zero variance
    is a degenerate case and raises.
    """
    x = np.asarray(d, dtype=float)
    if x.size < 2:
        raise ValueError(f"t-test needs at least 2 values, got {x.size}")
    std = float(np.std(x, ddof=1))
    if std == 0.0:
        raise DegenerateDataError("zero variance; t statistic undefined")
    return ttest_from_summary(float(np.mean(x)), std, x.size)


def ttest_from_summary(mean: float, std: float, n: int) -> tuple[float, float]:
    """One-sample t-test against zero from summary statistics."""
    if n < 2:
        raise ValueError(f"t-test needs n >= 2, got {n}")
    if std <= 0:
        raise DegenerateDataError("std must be positive")
    t = mean / (std / math.sqrt(n))
    p = 2.0 * float(stats.t.sf(abs(t), n - 1))
    return t, p
