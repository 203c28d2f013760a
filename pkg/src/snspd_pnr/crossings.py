"""Threshold-crossing primitives shared by the filter and edge-timing stages."""

from __future__ import annotations

import numpy as np

from .errors import NoCrossingError


def first_upward_crossing(v: np.ndarray, threshold: float, t0: float, dt: float) -> float:
    """Linearly interpolated time of the first upward crossing of ``threshold``.

    If the record starts at or above the threshold, or an interpolation cell
    is degenerate (flat at the threshold), the time of the first sample at or
    above the threshold is returned instead.
    """
    above = np.nonzero(v >= threshold)[0]
    if above.size == 0:
        raise NoCrossingError("waveform never reaches the threshold")
    j = int(above[0])
    if j == 0:
        return t0
    v0, v1 = v[j - 1], v[j]
    if v1 == v0:
        return t0 + j * dt
    return t0 + (j - 1) * dt + (threshold - v0) / (v1 - v0) * dt


def last_downward_crossing(v: np.ndarray, threshold: float, t0: float, dt: float) -> float:
    """Linearly interpolated time of the last downward crossing of ``threshold``."""
    above = np.nonzero(v >= threshold)[0]
    if above.size == 0:
        raise NoCrossingError("waveform never reaches the threshold")
    j = int(above[-1])
    if j == v.size - 1:
        raise NoCrossingError("waveform still above the threshold at the end of the record")
    v0, v1 = v[j], v[j + 1]
    return t0 + j * dt + (v0 - threshold) / (v0 - v1) * dt


def hysteresis_upward_crossings(v: np.ndarray, high: float, low: float) -> int:
    """Count upward crossings of ``high`` with re-arming below ``low``.

    The counter starts armed; after a crossing it only re-arms once the
    signal has dropped to or below ``low``.
    """
    if not low < high:
        raise ValueError("hysteresis level must lie below the counting threshold")
    state = np.zeros(v.size, dtype=np.int8)
    state[v >= high] = 1
    state[v <= low] = -1
    nz = state[state != 0]
    if nz.size == 0:
        return 0
    armed_hits = (nz == 1) & np.concatenate(([True], nz[:-1] == -1))
    return int(armed_hits.sum())


def quantize_time(t: float, resolution: float) -> float:
    """Quantize ``t`` to multiples of ``resolution``, rounding half away from zero."""
    if resolution <= 0:
        return t
    return float(np.sign(t) * np.floor(abs(t) / resolution + 0.5) * resolution)
