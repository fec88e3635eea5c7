"""Shared test utilities, including independent oracles.

The phase-fit oracle deliberately evaluates residuals by direct summation
over a dense phase grid, a different route from the closed-form moment
expression used by the implementation.
"""

from __future__ import annotations

import math

import numpy as np

from safesim import ContiguousRecord, DeviceSpec, Epoch


def grid_search_phase(
    values: np.ndarray,
    start_frame: int,
    amplitude_uv: float,
    freq_hz: float,
    fs: float,
    n_grid: int = 10_000,
) -> tuple[float, float]:
    """Dense grid-search oracle for the phase-only sine fit.

    Evaluates the sum of squared residuals directly at ``n_grid`` phases
    covering (-pi, pi] and returns (argmin phase, rmse at that phase).
    """
    x = np.asarray(values, dtype=float)
    t = (start_frame + np.arange(x.size)) / fs
    theta = 2.0 * math.pi * freq_hz * t
    phis = -math.pi + 2.0 * math.pi * (np.arange(1, n_grid + 1) / n_grid)
    residuals = x[None, :] - amplitude_uv * np.sin(theta[None, :] + phis[:, None])
    sse = np.sum(residuals**2, axis=1)
    k = int(np.argmin(sse))
    return float(phis[k]), float(math.sqrt(sse[k] / x.size))


def circular_distance(a: float, b: float) -> float:
    d = a - b
    return abs(math.atan2(math.sin(d), math.cos(d)))


def single_channel_record(values: np.ndarray, fs: float) -> ContiguousRecord:
    v = np.asarray(values, dtype=float).reshape(-1, 1)
    return ContiguousRecord(values_uv=v.copy(), gaps=[], sample_rate_hz=fs)


def make_epoch(values: np.ndarray, start_frame: int = 0) -> Epoch:
    return Epoch(values=np.asarray(values, dtype=float), start_frame=start_frame, clean=True)


def noiseless_spec(spec: DeviceSpec) -> DeviceSpec:
    from dataclasses import replace

    return replace(spec, noise_sigma_uv=0.0, loss_probability=0.0)
