"""Batch experiment runners.

Runs the two validation experiments end to end from a configuration,
persists every recording in the safe-csv-1 dialect, and emits machine and
human readable reports. ``analyze`` re-runs the identical analysis on
stored recordings, byte-for-byte reproducing the in-run reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import analysis
from .device import DEVICE_PRESETS, DeviceSpec, run_acquisition
from .kvconfig import read_key_value_file
from .recorder import CSV_VERSION_TAG, Recording, RecordingFormatError, read_csv, write_csv
from .siggen import (
    DEFAULT_DAC_STEP_V,
    DEFAULT_POST_DIVIDER_STEP_V,
    DacModel,
    biphasic_template,
    gen_sinusoid,
    gen_vep_session,
    sweep_frequencies,
)
from .transport import packetize, reassemble, transmit
from .triggering import (
    flag_trigger_packets,
    jitter_triggers,
    label_packet_granular,
    label_sample_accurate,
)

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "AnalysisInputError",
    "run_sine_experiment",
    "run_vep_experiment",
    "analyze",
    "sine_conditions",
    "sine_condition_row",
    "vep_comparison",
    "render_report_summary",
    "SINE_REPORT_NAME",
    "VEP_REPORT_NAME",
    "SUMMARY_NAME",
]

SINE_REPORT_NAME = "rmse_report.csv"
VEP_REPORT_NAME = "vep_report.csv"
SUMMARY_NAME = "summary.txt"

SINE_REPORT_HEADER = (
    "condition,preset,sweep,freq_hz,amplitude_uv,n_epochs,rmse_mean_uv,rmse_std_uv,"
    "packets_expected,packets_received,fraction_received"
)
VEP_REPORT_HEADER = "session,metric,channel,safe,reference,d_percent,mean_d,std_d,t,p"

# stream tags keeping per-stage random streams independent under one master seed
_NOISE, _LOSS, _JITTER, _BACKGROUND = 1, 2, 3, 4
_PRESET_RANK = {"safe": 0, "reference": 1}


class ConfigError(Exception):
    """Invalid experiment configuration; message enumerates every problem."""


class AnalysisInputError(Exception):
    """Stored recordings missing or unusable; message lists each file."""


def _child_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    """Everything a run needs; every field is overridable from a key=value
    configuration file using exactly these names. The seed is mandatory."""

    experiment: str
    seed: int
    presets: tuple[str, ...] = ("safe", "reference")
    session: str = "s1"
    start_time: str = ""
    # sine sweep
    duration_s: float = 30.0
    frequencies_hz: tuple[float, ...] = field(default_factory=lambda: tuple(sweep_frequencies()))
    amplitudes_uv: tuple[float, ...] = field(default_factory=lambda: tuple(float(a) for a in range(10, 110, 10)))
    sweep_amplitude_uv: float = 50.0
    sweep_frequency_hz: float = 20.0
    highpass_cutoff_hz: float = 3.0
    max_epochs: int = 200
    artifact_k_mad: float = 5.0
    analysis_channel: int = 0
    # signal generator
    dac_step_v: float = DEFAULT_DAC_STEP_V
    divider_ratio: float = DEFAULT_DAC_STEP_V / DEFAULT_POST_DIVIDER_STEP_V
    # flash-response session
    flash_rate_hz: float = 0.99
    vep_duration_s: float = 300.0
    background_sigma_uv: float = 20.0
    template_peak_time_ms: float = 90.0
    template_peak_to_peak_uv: float = 100.0
    jitter_range_ms: float = 40.0
    pre_ms: float = 200.0
    post_ms: float = 200.0
    # raw DeviceSpec overrides applied on top of each preset
    device_overrides: dict[str, str] = field(default_factory=dict)

    def dac(self) -> DacModel:
        return DacModel(dac_step_v=self.dac_step_v, divider_ratio=self.divider_ratio)

    def device_spec(self, preset: str) -> DeviceSpec:
        base = DEVICE_PRESETS[preset]()
        if not self.device_overrides:
            return base
        merged = {f.name: getattr(base, f.name) for f in dataclass_fields(DeviceSpec)}
        int_fields = {"adc_bits", "channel_count", "frames_per_packet"}
        for key, value in self.device_overrides.items():
            merged[key] = int(value) if key in int_fields else float(value)
        return DeviceSpec(**merged)

    def validate(self) -> None:
        errors: list[str] = []
        if self.experiment not in ("sine_sweep", "vep"):
            errors.append(f"experiment must be 'sine_sweep' or 'vep', got {self.experiment!r}")
        if not self.presets:
            errors.append("at least one preset is required")
        for p in self.presets:
            if p not in DEVICE_PRESETS:
                errors.append(f"unknown preset {p!r}; choose from {sorted(DEVICE_PRESETS)}")
        specs = []
        for p in self.presets:
            if p in DEVICE_PRESETS:
                try:
                    specs.append(self.device_spec(p))
                except (ValueError, TypeError) as exc:
                    errors.append(f"device overrides invalid for preset {p!r}: {exc}")
        if self.duration_s <= 0:
            errors.append(f"duration_s must be positive, got {self.duration_s}")
        if self.vep_duration_s <= 0:
            errors.append(f"vep_duration_s must be positive, got {self.vep_duration_s}")
        for f in self.frequencies_hz:
            if f <= 0:
                errors.append(f"frequency {f} must be positive")
            for spec in specs:
                if f >= spec.sample_rate_hz / 2:
                    errors.append(f"frequency {f} Hz is not below Nyquist of a selected preset")
        if self.sweep_frequency_hz <= 0:
            errors.append("sweep_frequency_hz must be positive")
        for a in self.amplitudes_uv:
            if a < 0:
                errors.append(f"amplitude {a} must be nonnegative")
        if self.sweep_amplitude_uv < 0:
            errors.append("sweep_amplitude_uv must be nonnegative")
        if self.highpass_cutoff_hz <= 0:
            errors.append("highpass_cutoff_hz must be positive")
        if self.max_epochs < 1:
            errors.append("max_epochs must be at least 1")
        if self.artifact_k_mad <= 0:
            errors.append("artifact_k_mad must be positive")
        for spec in specs:
            if not 0 <= self.analysis_channel < spec.channel_count:
                errors.append(f"analysis_channel {self.analysis_channel} out of range for a selected preset")
        if self.dac_step_v <= 0 or self.divider_ratio <= 0:
            errors.append("dac_step_v and divider_ratio must be positive")
        if self.flash_rate_hz <= 0:
            errors.append("flash_rate_hz must be positive")
        elif 1.0 / self.flash_rate_hz < (self.pre_ms + self.post_ms) / 1000.0:
            errors.append("flash period shorter than the pre+post analysis window")
        if self.background_sigma_uv < 0:
            errors.append("background_sigma_uv must be nonnegative")
        if self.template_peak_to_peak_uv <= 0:
            errors.append("template_peak_to_peak_uv must be positive")
        if not 0 < self.template_peak_time_ms < 200:
            errors.append("template_peak_time_ms must lie in (0, 200)")
        if self.jitter_range_ms < 0:
            errors.append("jitter_range_ms must be nonnegative")
        if self.pre_ms <= 0 or self.post_ms <= 0:
            errors.append("pre_ms and post_ms must be positive")
        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))

    @classmethod
    def from_mapping(cls, mapping: dict[str, str], experiment: str | None = None,
                     seed: int | None = None, for_analysis: bool = False) -> "ExperimentConfig":
        """Build a config from string pairs; unknown keys that are not
        DeviceSpec fields are errors, enumerated together.

        ``for_analysis`` relaxes the experiment/seed requirements for
        configs that only tune analysis parameters.
        """
        device_fields = {f.name for f in dataclass_fields(DeviceSpec)}
        float_fields = {
            "duration_s", "sweep_amplitude_uv", "sweep_frequency_hz", "highpass_cutoff_hz",
            "artifact_k_mad", "dac_step_v", "divider_ratio", "flash_rate_hz", "vep_duration_s",
            "background_sigma_uv", "template_peak_time_ms", "template_peak_to_peak_uv",
            "jitter_range_ms", "pre_ms", "post_ms",
        }
        int_fields = {"seed", "max_epochs", "analysis_channel"}
        list_fields = {"frequencies_hz", "amplitudes_uv"}
        str_fields = {"experiment", "session", "start_time"}

        kwargs: dict = {}
        overrides: dict[str, str] = {}
        errors: list[str] = []
        for key, value in mapping.items():
            try:
                if key in float_fields:
                    kwargs[key] = float(value)
                elif key in int_fields:
                    kwargs[key] = int(value)
                elif key in str_fields:
                    kwargs[key] = value
                elif key == "presets":
                    kwargs[key] = tuple(v.strip() for v in value.split(",") if v.strip())
                elif key in list_fields:
                    kwargs[key] = tuple(float(v) for v in value.split(",") if v.strip())
                elif key in device_fields:
                    overrides[key] = value
                else:
                    errors.append(f"unknown configuration key {key!r}")
            except ValueError as exc:
                errors.append(f"bad value for {key!r}: {exc}")
        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))

        if experiment is not None:
            declared = kwargs.get("experiment")
            if declared is not None and declared != experiment:
                raise ConfigError(
                    f"configuration declares experiment {declared!r} but {experiment!r} was requested"
                )
            kwargs["experiment"] = experiment
        if seed is not None:
            kwargs["seed"] = seed
        if "experiment" not in kwargs:
            if not for_analysis:
                raise ConfigError("experiment is required (config key or subcommand)")
            kwargs["experiment"] = "sine_sweep"
        if "seed" not in kwargs:
            if not for_analysis:
                raise ConfigError("seed is required for reproducibility (config key or --seed)")
            kwargs["seed"] = 0
        return cls(device_overrides=overrides, **kwargs)

    @classmethod
    def from_file(cls, path: str | Path, experiment: str | None = None,
                  seed: int | None = None, for_analysis: bool = False) -> "ExperimentConfig":
        try:
            mapping = read_key_value_file(path)
        except OSError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_mapping(mapping, experiment=experiment, seed=seed, for_analysis=for_analysis)


# --- sine sweep ---------------------------------------------------------------


def sine_conditions(cfg: ExperimentConfig) -> list[tuple[str, float, float]]:
    """(sweep kind, frequency, amplitude) per condition, frequencies first."""
    conds = [("frequency", float(f), float(cfg.sweep_amplitude_uv)) for f in cfg.frequencies_hz]
    conds += [("amplitude", float(cfg.sweep_frequency_hz), float(a)) for a in cfg.amplitudes_uv]
    return conds


def simulate_sine_condition(
    cfg: ExperimentConfig,
    condition: int,
    kind: str,
    freq_hz: float,
    amplitude_uv: float,
    preset: str,
) -> Recording:
    """Generate, acquire, transport, and reassemble one sine condition."""
    spec = cfg.device_spec(preset)
    src = gen_sinusoid(amplitude_uv, freq_hz, cfg.dac(), cfg.duration_s)
    rank = _PRESET_RANK[preset]
    frames = run_acquisition(src, spec, cfg.duration_s, _child_seed(cfg.seed, condition, rank, _NOISE))
    packets = packetize(frames, spec)
    received = transmit(packets, spec.loss_probability, _child_seed(cfg.seed, condition, rank, _LOSS))
    record = reassemble(received, spec, len(frames))
    metadata = {
        "experiment": "sine_sweep",
        "session": cfg.session,
        "condition": str(condition),
        "preset": preset,
        "sweep": kind,
        "freq_hz": repr(freq_hz),
        "amplitude_uv": repr(amplitude_uv),
        "seed": str(cfg.seed),
        "source": src.description,
    }
    if cfg.start_time:
        metadata["start_time"] = cfg.start_time
    return Recording(spec=spec, record=record, triggers=[], metadata=metadata)


def sine_condition_row(recording: Recording, cfg: ExperimentConfig) -> dict:
    """Analyze one stored sine condition into a report row.

    Used identically by the runner and by :func:`analyze`, so on-disk and
    in-run reports agree byte for byte.
    """
    md = recording.metadata
    freq = float(md["freq_hz"])
    amp = float(md["amplitude_uv"])
    filtered = analysis.highpass(recording.record, cfg.highpass_cutoff_hz)
    epochs = analysis.epoch_sine(filtered, freq, recording.spec, cfg.max_epochs, cfg.analysis_channel)
    if len(epochs) >= 8:
        epochs = analysis.reject_artifacts(epochs, cfg.artifact_k_mad)
    rmses = np.array([analysis.fit_sine_phase(e, amp, freq, recording.spec).rmse_uv for e in epochs])
    expected = math.ceil(recording.record.n_frames / recording.spec.frames_per_packet)
    received = expected - len(recording.record.gaps)
    return {
        "condition": int(md["condition"]),
        "preset": md["preset"],
        "sweep": md["sweep"],
        "freq_hz": freq,
        "amplitude_uv": amp,
        "n_epochs": int(rmses.size),
        "rmse_mean_uv": float(np.mean(rmses)) if rmses.size else math.nan,
        "rmse_std_uv": float(np.std(rmses, ddof=1)) if rmses.size > 1 else 0.0,
        "packets_expected": expected,
        "packets_received": received,
        "fraction_received": received / expected,
    }


def _sine_report_csv(rows: list[dict]) -> str:
    lines = [SINE_REPORT_HEADER]
    for r in rows:
        lines.append(
            f"{r['condition']},{r['preset']},{r['sweep']},{r['freq_hz']:g},{r['amplitude_uv']:g},"
            f"{r['n_epochs']},{r['rmse_mean_uv']:.6f},{r['rmse_std_uv']:.6f},"
            f"{r['packets_expected']},{r['packets_received']},{r['fraction_received']:.6f}"
        )
    return "\n".join(lines) + "\n"


def _sine_summary_text(rows: list[dict]) -> str:
    lines = ["sine sweep summary", ""]
    presets = sorted({r["preset"] for r in rows}, key=lambda p: _PRESET_RANK.get(p, 9))
    for preset in presets:
        sub = [r for r in rows if r["preset"] == preset]
        total_epochs = sum(r["n_epochs"] for r in sub)
        pooled = sum(r["rmse_mean_uv"] * r["n_epochs"] for r in sub) / total_epochs if total_epochs else math.nan
        expected = sum(r["packets_expected"] for r in sub)
        received = sum(r["packets_received"] for r in sub)
        lines.append(
            f"preset {preset}: grand mean rmse {pooled:.3f} uV over {total_epochs} epochs "
            f"({len(sub)} conditions); packet reception {100.0 * received / expected:.2f}% "
            f"({received}/{expected})"
        )
    lines.append("")
    lines.append(f"{'cond':>4} {'preset':<10} {'sweep':<10} {'freq_hz':>8} {'amp_uv':>7} "
                 f"{'epochs':>6} {'rmse_mean':>10} {'rmse_std':>9} {'rx_frac':>8}")
    for r in rows:
        lines.append(
            f"{r['condition']:>4} {r['preset']:<10} {r['sweep']:<10} {r['freq_hz']:>8g} "
            f"{r['amplitude_uv']:>7g} {r['n_epochs']:>6} {r['rmse_mean_uv']:>10.3f} "
            f"{r['rmse_std_uv']:>9.3f} {r['fraction_received']:>8.4f}"
        )
    return "\n".join(lines) + "\n"


def run_sine_experiment(cfg: ExperimentConfig, out_dir: str | Path) -> list[dict]:
    """Run every sweep condition for every selected preset.

    Both presets consume the identical generated source per condition,
    emulating simultaneous recording. Writes one recording per
    condition x preset plus the RMSE report and a text summary; returns
    the report rows.
    """
    cfg.validate()
    if cfg.experiment != "sine_sweep":
        raise ConfigError(f"run_sine_experiment requires experiment=sine_sweep, got {cfg.experiment!r}")
    out = Path(out_dir)
    rec_dir = out / "recordings"
    rec_dir.mkdir(parents=True, exist_ok=True)

    rows: list[dict] = []
    for ci, (kind, freq, amp) in enumerate(sine_conditions(cfg)):
        for preset in cfg.presets:
            recording = simulate_sine_condition(cfg, ci, kind, freq, amp, preset)
            write_csv(recording, rec_dir / f"sine_c{ci:03d}_{preset}.csv")
            rows.append(sine_condition_row(recording, cfg))
    rows.sort(key=lambda r: (r["condition"], _PRESET_RANK.get(r["preset"], 9)))
    (out / SINE_REPORT_NAME).write_text(_sine_report_csv(rows), encoding="utf-8")
    (out / SUMMARY_NAME).write_text(_sine_summary_text(rows), encoding="utf-8")
    return rows


# --- flash-response comparison --------------------------------------------------


@dataclass
class VepComparison:
    session: str
    safe_metrics: list[analysis.VepMetrics]
    ref_metrics: list[analysis.VepMetrics]
    stats: dict[str, analysis.ComparisonStats]
    safe_trial_counts: tuple[int, int, int]  # clean, total, skipped
    ref_trial_counts: tuple[int, int, int]
    safe_packets: tuple[int, int]  # received, expected


def run_vep_experiment(cfg: ExperimentConfig, out_dir: str | Path) -> VepComparison:
    """Run the two-arm flash-response comparison.

    The reference arm records losslessly with sample-accurate triggers
    that are then uniformly jittered to emulate packet-granular timing;
    the wireless arm records through the lossy link with packet-granular
    triggers. Both arms share the flash schedule and template; background
    and amplifier noise are arm-specific, as in sequential recordings.
    """
    cfg.validate()
    if cfg.experiment != "vep":
        raise ConfigError(f"run_vep_experiment requires experiment=vep, got {cfg.experiment!r}")
    out = Path(out_dir)
    rec_dir = out / "recordings"
    rec_dir.mkdir(parents=True, exist_ok=True)

    template = biphasic_template(cfg.template_peak_time_ms, cfg.template_peak_to_peak_uv)
    duration = cfg.vep_duration_s
    common_meta = {
        "experiment": "vep",
        "session": cfg.session,
        "seed": str(cfg.seed),
        "flash_rate_hz": repr(float(cfg.flash_rate_hz)),
        "template_peak_time_ms": repr(float(cfg.template_peak_time_ms)),
        "template_peak_to_peak_uv": repr(float(cfg.template_peak_to_peak_uv)),
    }

    # wireless arm: lossy link, packet-granular trigger labels
    spec_s = cfg.device_spec("safe")
    src_s, flash_times = gen_vep_session(
        template, cfg.flash_rate_hz, duration, cfg.background_sigma_uv,
        seed=_child_seed(cfg.seed, 0, _BACKGROUND),
    )
    frames_s = run_acquisition(src_s, spec_s, duration, _child_seed(cfg.seed, 0, _NOISE))
    packets_s = flag_trigger_packets(packetize(frames_s, spec_s), flash_times, spec_s)
    received_s = transmit(packets_s, spec_s.loss_probability, _child_seed(cfg.seed, 0, _LOSS))
    record_s = reassemble(received_s, spec_s, len(frames_s))
    rec_safe = Recording(
        spec=spec_s,
        record=record_s,
        triggers=label_packet_granular(flash_times, spec_s),
        metadata={**common_meta, "arm": "safe", "source": src_s.description},
    )

    # reference arm: lossless, sample-accurate triggers jittered late
    spec_r = cfg.device_spec("reference")
    src_r, _ = gen_vep_session(
        template, cfg.flash_rate_hz, duration, cfg.background_sigma_uv,
        seed=_child_seed(cfg.seed, 1, _BACKGROUND),
    )
    frames_r = run_acquisition(src_r, spec_r, duration, _child_seed(cfg.seed, 1, _NOISE))
    packets_r = packetize(frames_r, spec_r)
    received_r = transmit(packets_r, spec_r.loss_probability, _child_seed(cfg.seed, 1, _LOSS))
    record_r = reassemble(received_r, spec_r, len(frames_r))
    jittered = jitter_triggers(flash_times, cfg.jitter_range_ms, _child_seed(cfg.seed, 1, _JITTER))
    rec_ref = Recording(
        spec=spec_r,
        record=record_r,
        triggers=label_sample_accurate(jittered, spec_r),
        metadata={**common_meta, "arm": "reference", "source": src_r.description},
    )

    if cfg.start_time:
        rec_safe.metadata["start_time"] = cfg.start_time
        rec_ref.metadata["start_time"] = cfg.start_time
    write_csv(rec_safe, rec_dir / "vep_safe.csv")
    write_csv(rec_ref, rec_dir / "vep_reference.csv")

    comparison = vep_comparison(rec_safe, rec_ref, cfg)
    (out / VEP_REPORT_NAME).write_text(_vep_report_csv(comparison), encoding="utf-8")
    (out / SUMMARY_NAME).write_text(_vep_summary_text(comparison), encoding="utf-8")
    return comparison


def vep_comparison(rec_safe: Recording, rec_ref: Recording, cfg: ExperimentConfig) -> VepComparison:
    """Analyze a stored arm pair into the comparison report structure."""
    trials_s = analysis.epoch_vep(rec_safe, cfg.pre_ms, cfg.post_ms)
    trials_r = analysis.epoch_vep(rec_ref, cfg.pre_ms, cfg.post_ms)
    avg_s = analysis.vep_average(trials_s)
    avg_r = analysis.vep_average(trials_r)
    metrics_s = analysis.session_vep_metrics(avg_s, rec_safe.spec.sample_rate_hz, anchor_index=trials_s.pre_samples)
    metrics_r = analysis.session_vep_metrics(avg_r, rec_ref.spec.sample_rate_hz, anchor_index=trials_r.pre_samples)

    attr = {
        analysis.MetricKind.AMPLITUDE: "amplitude_uv",
        analysis.MetricKind.SNR: "snr_db",
        analysis.MetricKind.PEAK_TIME: "peak_time_ms",
    }
    stats: dict[str, analysis.ComparisonStats] = {}
    for metric in analysis.MetricKind.ALL:
        safe_vals = np.array([getattr(m, attr[metric]) for m in metrics_s])
        ref_vals = np.array([getattr(m, attr[metric]) for m in metrics_r])
        stats[metric] = analysis.percent_difference(safe_vals, ref_vals, metric)

    expected = math.ceil(rec_safe.record.n_frames / rec_safe.spec.frames_per_packet)
    received = expected - len(rec_safe.record.gaps)
    return VepComparison(
        session=rec_safe.metadata.get("session", ""),
        safe_metrics=metrics_s,
        ref_metrics=metrics_r,
        stats=stats,
        safe_trial_counts=(trials_s.n_clean, trials_s.n_trials, trials_s.n_skipped),
        ref_trial_counts=(trials_r.n_clean, trials_r.n_trials, trials_r.n_skipped),
        safe_packets=(received, expected),
    )


def _vep_report_csv(cmp: VepComparison) -> str:
    attr = {
        analysis.MetricKind.AMPLITUDE: "amplitude_uv",
        analysis.MetricKind.SNR: "snr_db",
        analysis.MetricKind.PEAK_TIME: "peak_time_ms",
    }
    lines = [VEP_REPORT_HEADER]
    for metric in analysis.MetricKind.ALL:
        st = cmp.stats[metric]
        for c in range(len(cmp.safe_metrics)):
            s_val = getattr(cmp.safe_metrics[c], attr[metric])
            r_val = getattr(cmp.ref_metrics[c], attr[metric])
            lines.append(
                f"{cmp.session},{metric},{c + 1},{s_val:.6f},{r_val:.6f},{st.d_percent[c]:.6f},,,,"
            )
        lines.append(
            f"{cmp.session},{metric},all,,,,{st.mean_d:.6f},{st.std_d:.6f},"
            f"{st.t_statistic:.6f},{st.p_value:.6g}"
        )
    return "\n".join(lines) + "\n"


def _vep_summary_text(cmp: VepComparison) -> str:
    def fmt(values: list[float]) -> str:
        arr = np.asarray(values)
        return f"{arr.mean():8.2f} +/- {arr.std(ddof=1):6.2f}"

    s_clean, s_total, s_skip = cmp.safe_trial_counts
    r_clean, r_total, r_skip = cmp.ref_trial_counts
    rx, expected = cmp.safe_packets
    lines = [
        f"flash-response comparison summary (session {cmp.session})",
        "",
        f"trials: safe {s_clean} clean of {s_total} ({s_skip} skipped), "
        f"reference {r_clean} clean of {r_total} ({r_skip} skipped)",
        f"safe-arm packet reception: {100.0 * rx / expected:.2f}% ({rx}/{expected})",
        "",
        f"{'metric':<14} {'safe':>19} {'reference':>19} {'d % (mean+/-std)':>21} {'t':>8} {'p':>9}",
    ]
    attr = {
        analysis.MetricKind.AMPLITUDE: ("amplitude_uv", "amplitude_uv"),
        analysis.MetricKind.SNR: ("snr_db", "snr_db"),
        analysis.MetricKind.PEAK_TIME: ("peak_time_ms", "peak_time_ms"),
    }
    for metric in analysis.MetricKind.ALL:
        st = cmp.stats[metric]
        name = attr[metric][0]
        s_vals = [getattr(m, name) for m in cmp.safe_metrics]
        r_vals = [getattr(m, name) for m in cmp.ref_metrics]
        lines.append(
            f"{name:<14} {fmt(s_vals):>19} {fmt(r_vals):>19} "
            f"{st.mean_d:9.2f} +/- {st.std_d:6.2f} {st.t_statistic:8.3f} {st.p_value:9.4g}"
        )
    lines.append("")
    lines.append("sign convention: negative d means larger amplitude/SNR or earlier peak on the safe arm;")
    lines.append("packet-granular epochs anchor at the labeled packet's completion, so both arms lag the")
    lines.append("flash by an approximately uniform delay of up to one packet span.")
    return "\n".join(lines) + "\n"


# --- offline analysis -----------------------------------------------------------


def _is_recording_file(path: Path) -> tuple[bool, str | None]:
    """(is a recording-family file, error message or None)."""
    try:
        with path.open("r", encoding="utf-8") as fh:
            first = fh.readline().strip()
    except OSError as exc:
        return False, f"{path}: unreadable ({exc})"
    if not first.startswith("# safe-csv-"):
        return False, None  # not a recording file at all; ignore
    if first != f"# {CSV_VERSION_TAG}":
        return True, f"{path}: unsupported version tag {first[2:]!r}"
    return True, None


def analyze(path_or_dir: str | Path, out_dir: str | Path, cfg: ExperimentConfig | None = None) -> None:
    """Re-run the analysis on stored recordings without re-simulation.

    Scans for safe-csv-1 files (other CSVs are ignored), groups them by
    experiment, and writes the same report files a run writes. Results
    are identical to the in-run analysis because the CSV round-trip is
    exact. Unsupported recording versions or unreadable files are
    reported per file; an input with no recordings at all is an error.
    """
    root = Path(path_or_dir)
    if root.is_dir():
        candidates = sorted(root.rglob("*.csv"))
    elif root.exists():
        candidates = [root]
    else:
        raise AnalysisInputError(f"input path does not exist: {root}")

    recordings: list[Recording] = []
    errors: list[str] = []
    for p in candidates:
        is_rec, err = _is_recording_file(p)
        if err:
            errors.append(err)
            continue
        if not is_rec:
            continue
        try:
            recordings.append(read_csv(p))
        except RecordingFormatError as exc:
            errors.append(str(exc))
    if errors:
        raise AnalysisInputError("unusable recording files:\n  " + "\n  ".join(errors))
    if not recordings:
        raise AnalysisInputError(f"no {CSV_VERSION_TAG} recordings found under {root}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    sine_recs = [r for r in recordings if r.metadata.get("experiment") == "sine_sweep"]
    vep_recs = [r for r in recordings if r.metadata.get("experiment") == "vep"]

    summaries: list[str] = []
    if sine_recs:
        acfg = cfg or ExperimentConfig(experiment="sine_sweep", seed=0)
        rows = [sine_condition_row(r, acfg) for r in sine_recs]
        rows.sort(key=lambda r: (r["condition"], _PRESET_RANK.get(r["preset"], 9)))
        (out / SINE_REPORT_NAME).write_text(_sine_report_csv(rows), encoding="utf-8")
        summaries.append(_sine_summary_text(rows))
    if vep_recs:
        acfg = cfg or ExperimentConfig(experiment="vep", seed=0)
        by_session: dict[str, dict[str, Recording]] = {}
        for r in vep_recs:
            arm = r.metadata.get("arm", "")
            by_session.setdefault(r.metadata.get("session", ""), {})[arm] = r
        report_lines = [VEP_REPORT_HEADER]
        for session in sorted(by_session):
            arms = by_session[session]
            if "safe" not in arms or "reference" not in arms:
                raise AnalysisInputError(
                    f"session {session!r}: need both 'safe' and 'reference' arm recordings, found {sorted(arms)}"
                )
            comparison = vep_comparison(arms["safe"], arms["reference"], acfg)
            report_lines.extend(_vep_report_csv(comparison).splitlines()[1:])
            summaries.append(_vep_summary_text(comparison))
        (out / VEP_REPORT_NAME).write_text("\n".join(report_lines) + "\n", encoding="utf-8")
    (out / SUMMARY_NAME).write_text("".join(summaries), encoding="utf-8")


def render_report_summary(out_dir: str | Path) -> str:
    """Human-readable rendering of the reports already in a directory.

    Prefers the stored summary; falls back to re-rendering the sine report
    CSV when only that is present.
    """
    out = Path(out_dir)
    summary_path = out / SUMMARY_NAME
    if summary_path.exists():
        return summary_path.read_text(encoding="utf-8")
    parts: list[str] = []
    sine_path = out / SINE_REPORT_NAME
    vep_path = out / VEP_REPORT_NAME
    if sine_path.exists():
        lines = sine_path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != SINE_REPORT_HEADER:
            raise AnalysisInputError(f"{sine_path}: unrecognized report header")
        rows = []
        for ln in lines[1:]:
            c = ln.split(",")
            rows.append({
                "condition": int(c[0]), "preset": c[1], "sweep": c[2], "freq_hz": float(c[3]),
                "amplitude_uv": float(c[4]), "n_epochs": int(c[5]), "rmse_mean_uv": float(c[6]),
                "rmse_std_uv": float(c[7]), "packets_expected": int(c[8]),
                "packets_received": int(c[9]), "fraction_received": float(c[10]),
            })
        parts.append(_sine_summary_text(rows))
    if vep_path.exists():
        parts.append(vep_path.read_text(encoding="utf-8"))
    if not parts:
        raise AnalysisInputError(f"no report files found in {out}")
    return "".join(parts)
