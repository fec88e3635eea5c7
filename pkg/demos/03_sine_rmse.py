"""Sinusoid validation: phase-only fits and noise-floor RMSE.

Runs a reduced frequency sweep on both device presets, fitting a sinusoid
of the delivered amplitude and frequency to each one-period epoch with
only the phase free. The residual RMSE estimates each amplifier's noise:
about 9.4 uV for the wireless preset, 4.0 uV for the bench preset.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from safesim import ExperimentConfig
from safesim.experiments import simulate_sine_condition, sine_condition_row, sine_conditions

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = ExperimentConfig(
    experiment="sine_sweep",
    seed=42,
    frequencies_hz=(10.0, 20.0, 40.0, 90.0, 130.0, 190.0),
    amplitudes_uv=(20.0, 50.0, 100.0),
    duration_s=15.0,
    max_epochs=120,
)

results: dict[str, list[dict]] = {}
for preset in cfg.presets:
    rows = []
    for ci, (kind, freq, amp) in enumerate(sine_conditions(cfg)):
        recording = simulate_sine_condition(cfg, ci, kind, freq, amp, preset)
        rows.append(sine_condition_row(recording, cfg))
    results[preset] = rows
    pooled = sum(r["rmse_mean_uv"] * r["n_epochs"] for r in rows) / sum(r["n_epochs"] for r in rows)
    print(f"{preset}: grand mean rmse {pooled:.2f} uV over {len(rows)} conditions")

fig, ax = plt.subplots(figsize=(8, 4.5))
for preset, marker in (("safe", "o"), ("reference", "s")):
    freq_rows = [r for r in results[preset] if r["sweep"] == "frequency"]
    ax.errorbar(
        [r["freq_hz"] for r in freq_rows],
        [r["rmse_mean_uv"] for r in freq_rows],
        yerr=[r["rmse_std_uv"] for r in freq_rows],
        marker=marker,
        capsize=3,
        label=preset,
    )
ax.axhline(9.4, color="C0", ls=":", lw=0.8)
ax.axhline(4.0, color="C1", ls=":", lw=0.8)
ax.set_xlabel("frequency (Hz)")
ax.set_ylabel("fit RMSE (uV)")
ax.set_title("epoch RMSE by frequency (50 uV sinusoids)")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "03_rmse_sweep.png", dpi=120)
print(f"figure saved under {OUT}")
