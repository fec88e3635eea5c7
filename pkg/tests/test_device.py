import math
from dataclasses import replace

import numpy as np
import pytest

from safesim import (
    DeviceSpec,
    adc_quantize,
    constant_source,
    gen_sinusoid,
    ramp_source,
    reference_device_spec,
    run_acquisition,
    safe_device_spec,
    sample_frame,
)
from safesim.device import frame_count

SPEC = safe_device_spec()


def test_defaults_match_hardware_profile():
    assert SPEC.sample_rate_hz == 1024.0
    assert SPEC.adc_step_uv == 0.125
    assert SPEC.adc_bits == 16
    assert SPEC.interchannel_skew_us == 10.0
    assert SPEC.channel_count == 6
    assert SPEC.frames_per_packet == 41
    assert SPEC.noise_sigma_uv == 9.4
    assert SPEC.loss_probability == 0.05
    assert SPEC.full_scale_uv == 4096.0


def test_reference_preset():
    ref = reference_device_spec()
    assert ref.sample_rate_hz == 1200.0
    assert ref.interchannel_skew_us == 0.0
    assert ref.noise_sigma_uv == 4.0
    assert ref.loss_probability == 0.0


def test_spec_validation_errors():
    with pytest.raises(ValueError):
        DeviceSpec(sample_rate_hz=0)
    with pytest.raises(ValueError):
        DeviceSpec(adc_step_uv=-0.1)
    with pytest.raises(ValueError):
        DeviceSpec(loss_probability=1.5)
    # skew * channels must stay inside one frame period
    with pytest.raises(ValueError):
        DeviceSpec(interchannel_skew_us=200.0, channel_count=6)


def test_spec_from_key_value_file(tmp_path):
    path = tmp_path / "device.cfg"
    path.write_text(
        "# device overrides\n"
        "sample_rate_hz = 2048\n"
        "adc_step_uv = 0.25\n"
        "adc_bits = 12\n"
        "channel_count = 4\n",
        encoding="utf-8",
    )
    spec = DeviceSpec.from_file(path)
    assert spec.sample_rate_hz == 2048.0
    assert spec.adc_bits == 12
    assert spec.full_scale_uv == 0.25 * 2**11
    with pytest.raises(ValueError):
        DeviceSpec.from_mapping({"not_a_field": "1"})


def test_quantize_examples():
    assert adc_quantize(0.0, SPEC) == 0.0
    assert adc_quantize(1.0, SPEC) == 1.0  # code 8 at 0.125 uV/step
    assert adc_quantize(5000.0, SPEC) == 4095.875  # clamped to code 32767
    assert adc_quantize(-5000.0, SPEC) == -4096.0  # clamped to code -32768


def test_quantize_rounds_half_away_from_zero():
    assert adc_quantize(0.0625, SPEC) == 0.125
    assert adc_quantize(-0.0625, SPEC) == -0.125


def test_quantize_idempotent_and_bounded():
    rng = np.random.default_rng(0)
    v = rng.uniform(-4096, 4095.8, size=5000)
    q = adc_quantize(v, SPEC)
    assert np.array_equal(adc_quantize(q, SPEC), q)
    assert np.all(np.abs(v - q) <= SPEC.adc_step_uv / 2 + 1e-12)
    codes = q / SPEC.adc_step_uv
    assert np.allclose(codes, np.round(codes))


def test_quantize_rejects_non_finite():
    with pytest.raises(ValueError):
        adc_quantize(float("nan"), SPEC)
    with pytest.raises(ValueError):
        adc_quantize(np.array([1.0, float("inf")]), SPEC)


def test_sample_frame_skew_on_ramp():
    # 1 uV/us ramp: adjacent channels differ by skew * slope = 10 uV
    src = ramp_source(1.0, 1.0)
    spec = replace(SPEC, noise_sigma_uv=0.0)
    frame = sample_frame(src, 0, spec, np.random.default_rng(0))
    diffs = np.diff(frame.channel_values_uv)
    assert np.allclose(diffs, 10.0, atol=spec.adc_step_uv)


def test_sample_frame_constant_zero():
    src = constant_source(0.0, 1.0)
    spec = replace(SPEC, noise_sigma_uv=0.0)
    frame = sample_frame(src, 100, spec, np.random.default_rng(1))
    assert np.all(frame.channel_values_uv == 0.0)


def test_sample_frame_beyond_duration():
    src = constant_source(0.0, 0.01)
    with pytest.raises(ValueError):
        sample_frame(src, 1024, SPEC, np.random.default_rng(0))


def test_acquisition_frame_counts():
    assert frame_count(30.0, SPEC) == 30720
    assert frame_count(0.5, SPEC) == 512
    assert frame_count(300.0, SPEC) == 307200  # five-minute session


def test_acquisition_counts_and_indices():
    src = constant_source(1.0, 0.5)
    frames = run_acquisition(src, SPEC, 0.5, seed=3)
    assert len(frames) == 512
    assert [f.frame_index for f in frames[:4]] == [0, 1, 2, 3]
    assert frames[-1].frame_index == 511


def test_acquisition_duration_errors():
    src = constant_source(0.0, 1.0)
    with pytest.raises(ValueError):
        run_acquisition(src, SPEC, 0.0, seed=0)
    with pytest.raises(ValueError):
        run_acquisition(src, SPEC, -1.0, seed=0)
    with pytest.raises(ValueError):
        run_acquisition(src, SPEC, 2.0, seed=0)  # beyond source duration


def test_acquisition_deterministic():
    src = gen_sinusoid(50.0, 20.0, duration_s=1.0)
    a = run_acquisition(src, SPEC, 1.0, seed=42)
    b = run_acquisition(src, SPEC, 1.0, seed=42)
    assert all(np.array_equal(x.channel_values_uv, y.channel_values_uv) for x, y in zip(a, b))
    c = run_acquisition(src, SPEC, 1.0, seed=43)
    assert any(not np.array_equal(x.channel_values_uv, y.channel_values_uv) for x, y in zip(a, c))


def test_noiseless_skewless_acquisition_equals_quantized_analytic():
    spec = replace(SPEC, noise_sigma_uv=0.0, interchannel_skew_us=0.0)
    src = gen_sinusoid(50.0, 20.0, duration_s=1.0)
    frames = run_acquisition(src, spec, 1.0, seed=0)
    t = np.arange(len(frames)) / spec.sample_rate_hz
    expected = adc_quantize(src.voltage_uv(0, t), spec)
    got = np.array([f.channel_values_uv[0] for f in frames])
    assert np.array_equal(got, expected)


def test_batched_acquisition_matches_frame_by_frame():
    # one shared noise stream must produce identical values either way
    src = gen_sinusoid(30.0, 40.0, duration_s=0.1)
    frames = run_acquisition(src, SPEC, 0.1, seed=7)
    rng = np.random.default_rng(7)
    singles = [sample_frame(src, i, SPEC, rng) for i in range(len(frames))]
    for a, b in zip(frames, singles):
        assert np.array_equal(a.channel_values_uv, b.channel_values_uv)


def test_skew_phase_shift_at_200_hz():
    # channel 5 lags channel 0 by 50 us = 1% of a 200 Hz period (3.6 deg)
    from safesim import fit_sine_phase
    from helpers import make_epoch

    spec = replace(SPEC, noise_sigma_uv=0.0)
    src = gen_sinusoid(50.0, 200.0, duration_s=1.0)
    frames = run_acquisition(src, spec, 1.0, seed=0)
    values = np.stack([f.channel_values_uv for f in frames])
    phases = []
    for c in (0, 5):
        fit = fit_sine_phase(make_epoch(values[:, c]), 50.0, 200.0, spec)
        phases.append(fit.phase_rad)
    shift_deg = math.degrees(phases[1] - phases[0])
    assert abs(shift_deg - 3.6) < 0.1
