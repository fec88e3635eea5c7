"""Walk through the amplifier front-end model.

Shows ADC quantization on the 0.125 uV grid, sequential-sampling skew
between channels, and how additive input noise shapes a recorded sinusoid.
Saves figures to demos/output/.
"""

from dataclasses import replace
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from safesim import adc_quantize, gen_sinusoid, ramp_source, run_acquisition, safe_device_spec

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = safe_device_spec()
print(f"device: {spec.channel_count} channels at {spec.sample_rate_hz:g} Hz, "
      f"{spec.adc_bits}-bit ADC, {spec.adc_step_uv} uV/step "
      f"(full scale +/-{spec.full_scale_uv:g} uV)")

# 1) quantization staircase
v = np.linspace(-1.0, 1.0, 2001)
q = adc_quantize(v, spec)
print(f"quantization: 1.0 uV -> code {1.0 / spec.adc_step_uv:g}, "
      f"max error {np.max(np.abs(v - q)):.4f} uV (half step = {spec.adc_step_uv / 2})")

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(v, q, lw=0.8)
ax.plot(v, v, "--", lw=0.6, color="gray")
ax.set_xlabel("input (uV)")
ax.set_ylabel("quantized (uV)")
ax.set_title("ADC staircase at 0.125 uV/step")
fig.tight_layout()
fig.savefig(OUT / "01_staircase.png", dpi=120)

# 2) sequential sampling skew on a fast ramp
ramp = ramp_source(1.0, 0.1)  # 1 uV/us
noiseless = replace(spec, noise_sigma_uv=0.0)
frames = run_acquisition(ramp, noiseless, 0.002, seed=0)
print("ramp frame 0 channel values (uV):", frames[0].channel_values_uv)
print("adjacent channels differ by slope * skew = 10 uV")

# 3) a noisy 20 Hz recording vs the clean generated signal
src = gen_sinusoid(50.0, 20.0, duration_s=1.0)
frames = run_acquisition(src, spec, 1.0, seed=1)
values = np.stack([f.channel_values_uv for f in frames])
t = np.arange(len(frames)) / spec.sample_rate_hz

fig, ax = plt.subplots(figsize=(9, 4))
ax.plot(t[:512], values[:512, 0], lw=0.7, label=f"recorded (sigma={spec.noise_sigma_uv} uV)")
ax.plot(t[:512], src.voltage_uv(0, t[:512]), lw=1.2, label="generated")
ax.set_xlabel("time (s)")
ax.set_ylabel("voltage (uV)")
ax.set_title("50 uV, 20 Hz sinusoid through the front end")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "01_noisy_sine.png", dpi=120)
print(f"figures saved under {OUT}")
