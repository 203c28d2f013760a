"""Trace filtering and windowing.

Rejects records that carry no usable pulse before any statistics are
computed: zero-traces (no detection after the trigger), multi-peak records
from imperfect pulse picking, and pulses at the wrong delay relative to the
trigger. Accepted traces are truncated to the analysis window and their
baseline mean is subtracted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .crossings import first_upward_crossing, hysteresis_upward_crossings
from .errors import EmptyResultError
from .waveform import Trace, TraceSet


class TraceClass(Enum):
    ACCEPT = "accept"
    ZERO_TRACE = "zero_trace"
    MULTI_PEAK = "multi_peak"
    WRONG_DELAY = "wrong_delay"


@dataclass(frozen=True)
class FilterPolicy:
    """Acceptance rules for raw traces.

    ``baseline_region`` is an index range (start, stop) of pre-pulse samples
    used to estimate the noise level. A trace is a zero-trace when its peak
    above baseline stays below ``zero_trace_k`` times the baseline sigma.
    Peak counting uses an upward-crossing counter at
    ``peak_count_threshold_frac`` of the peak with re-arming at
    ``hysteresis_frac`` of the peak, and the half-height rise time must fall
    inside ``delay_window`` (trigger-relative seconds).
    """

    window_length: int
    baseline_region: tuple[int, int]
    delay_window: tuple[float, float]
    zero_trace_k: float = 5.0
    peak_count_threshold_frac: float = 0.5
    hysteresis_frac: float = 0.10

    def __post_init__(self):
        if self.window_length < 1:
            raise ValueError("window_length must be at least 1")
        a, b = self.baseline_region
        if not (0 <= a < b):
            raise ValueError("baseline_region must be a non-empty (start, stop) index range")
        if not 0 < self.peak_count_threshold_frac < 1:
            raise ValueError("peak_count_threshold_frac must be in (0, 1)")
        if not 0 < self.hysteresis_frac < self.peak_count_threshold_frac:
            raise ValueError("hysteresis_frac must be in (0, peak_count_threshold_frac)")
        if not self.zero_trace_k > 0:
            raise ValueError("zero_trace_k must be positive")
        if not self.delay_window[0] < self.delay_window[1]:
            raise ValueError("delay_window must be an increasing (t_min, t_max) pair")

    def validate_for_length(self, n_samples: int):
        if self.window_length > n_samples:
            raise ValueError("window_length exceeds trace length")
        if self.baseline_region[1] > n_samples:
            raise ValueError("baseline_region out of trace bounds")


@dataclass
class FilterReport:
    accepted: int
    rejected_zero: int
    rejected_multipeak: int
    rejected_delay: int
    baseline_sigma: float

    @property
    def total(self) -> int:
        return self.accepted + self.rejected_zero + self.rejected_multipeak + self.rejected_delay


def estimate_baseline(trace: Trace, region: tuple[int, int]) -> tuple[float, float]:
    """Mean and population standard deviation over an index range."""
    a, b = region
    if not (0 <= a < b <= len(trace)):
        raise ValueError("baseline region empty or out of trace bounds")
    seg = trace.samples[a:b]
    # Population convention (divide by N): fixed for reproducibility.
    return float(seg.mean()), float(seg.std(ddof=0))


def _classify_core(
    v: np.ndarray,
    sigma: float,
    peak: float,
    policy: FilterPolicy,
    t0: float,
    dt: float,
) -> TraceClass:
    """Classification given the baseline-subtracted samples ``v``."""
    if peak <= 0 or peak < policy.zero_trace_k * sigma:
        return TraceClass.ZERO_TRACE
    high = policy.peak_count_threshold_frac * peak
    low = policy.hysteresis_frac * peak
    if hysteresis_upward_crossings(v, high, low) > 1:
        return TraceClass.MULTI_PEAK
    t_half = first_upward_crossing(v, 0.5 * peak, t0, dt)
    t_min, t_max = policy.delay_window
    if not t_min <= t_half <= t_max:
        return TraceClass.WRONG_DELAY
    return TraceClass.ACCEPT


def classify_trace(trace: Trace, policy: FilterPolicy) -> TraceClass:
    """Classify one trace; checks run zero -> multi-peak -> delay, first match wins."""
    policy.validate_for_length(len(trace))
    mean, sigma = estimate_baseline(trace, policy.baseline_region)
    v = trace.samples - mean
    return _classify_core(v, sigma, float(v.max()), policy, trace.t0, trace.sample_period)


def window_and_align(trace_set: TraceSet, policy: FilterPolicy) -> tuple[TraceSet, FilterReport]:
    """Filter a trace set, truncate accepted traces and subtract baselines.

    Accepted traces keep the first ``window_length`` samples (the trigger
    -relative origin is unchanged) with their per-trace baseline mean
    removed. Rejections are tallied per category; the report's
    ``baseline_sigma`` is the median per-trace baseline sigma of the input.
    """
    if len(trace_set) == 0:
        raise ValueError("trace set must be non-empty")
    policy.validate_for_length(trace_set.n_samples)
    a, b = policy.baseline_region
    samples = trace_set.samples
    means = samples[:, a:b].mean(axis=1)
    sigmas = samples[:, a:b].std(axis=1, ddof=0)
    peaks = samples.max(axis=1) - means

    counts = {cls: 0 for cls in TraceClass}
    accepted_idx = []
    for i in range(len(trace_set)):
        # Cheap zero-trace check first; the crossing checks need the full row.
        if peaks[i] <= 0 or peaks[i] < policy.zero_trace_k * sigmas[i]:
            cls = TraceClass.ZERO_TRACE
        else:
            v = samples[i] - means[i]
            cls = _classify_core(
                v, float(sigmas[i]), float(peaks[i]), policy, trace_set.t0, trace_set.sample_period
            )
        counts[cls] += 1
        if cls is TraceClass.ACCEPT:
            accepted_idx.append(i)

    report = FilterReport(
        accepted=counts[TraceClass.ACCEPT],
        rejected_zero=counts[TraceClass.ZERO_TRACE],
        rejected_multipeak=counts[TraceClass.MULTI_PEAK],
        rejected_delay=counts[TraceClass.WRONG_DELAY],
        baseline_sigma=float(np.median(sigmas)),
    )
    if not accepted_idx:
        raise EmptyResultError("no traces accepted; downstream analysis undefined")

    idx = np.array(accepted_idx, dtype=np.int64)
    windowed = samples[idx, : policy.window_length] - means[idx, None]
    out = TraceSet(
        samples=windowed,
        sample_period=trace_set.sample_period,
        t0=trace_set.t0,
        ids=trace_set.ids[idx],
        mean_photon_number_label=trace_set.mean_photon_number_label,
        source=trace_set.source,
    )
    return out, report
