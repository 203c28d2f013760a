"""Edge-timing analysis path.

Extracts the trigger-relative times of the rising and falling threshold
crossings of each pulse, the way a constant-threshold time tagger would
record them. The resulting (t_rise, t_fall) pairs feed the same
discrimination pipeline as the principal-component weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .crossings import first_upward_crossing, last_downward_crossing, quantize_time
from .errors import FitFailureError, NoCrossingError
from .pca import WeightPoint
from .waveform import Trace, TraceSet


class ThresholdMode(Enum):
    ABSOLUTE_VOLTS = "absolute"
    FRACTION_OF_MEDIAN_PEAK = "fraction"


@dataclass(frozen=True)
class ThresholdPolicy:
    """Threshold definition for edge extraction.

    In fraction mode the threshold is ``value`` times the median peak of the
    analysed traces (half peak height separates photon numbers best, and an
    absolute level would be hardware-specific). ``timing_resolution`` > 0
    quantizes reported times to that grid, rounding half away from zero.
    """

    mode: ThresholdMode = ThresholdMode.FRACTION_OF_MEDIAN_PEAK
    value: float = 0.5
    timing_resolution: float = 0.0

    def __post_init__(self):
        if self.mode is ThresholdMode.FRACTION_OF_MEDIAN_PEAK and not 0 < self.value < 1:
            raise ValueError("fraction-mode threshold must lie in (0, 1)")
        if self.timing_resolution < 0:
            raise ValueError("timing_resolution must be nonnegative")


@dataclass
class EdgePair:
    """Trigger-relative rising- and falling-edge crossing times of one trace."""

    t_rise: float
    t_fall: float
    trace_id: int = -1

    def __post_init__(self):
        if not self.t_fall > self.t_rise:
            raise ValueError("t_fall must be later than t_rise")


def _extract_at_threshold(v: np.ndarray, threshold: float, t0: float, dt: float,
                          resolution: float, trace_id: int) -> EdgePair:
    if threshold >= v.max():
        raise NoCrossingError("threshold at or above the trace peak")
    t_rise = first_upward_crossing(v, threshold, t0, dt)
    t_fall = last_downward_crossing(v, threshold, t0, dt)
    if resolution > 0:
        t_rise = quantize_time(t_rise, resolution)
        t_fall = quantize_time(t_fall, resolution)
    return EdgePair(t_rise=t_rise, t_fall=t_fall, trace_id=trace_id)


def extract_edges(trace: Trace, policy: ThresholdPolicy) -> EdgePair:
    """Rising and falling crossing times of a single (accepted) trace.

    The rising time is the linearly interpolated first upward crossing; the
    falling time is the last downward crossing, which is robust to noise
    ripples near the threshold on the slow falling tail. In fraction mode
    the threshold is resolved against this trace's own peak.
    """
    if policy.mode is ThresholdMode.FRACTION_OF_MEDIAN_PEAK:
        threshold = policy.value * float(trace.samples.max())
    else:
        threshold = policy.value
    return _extract_at_threshold(
        trace.samples, threshold, trace.t0, trace.sample_period,
        policy.timing_resolution, trace.id,
    )


def edge_points(trace_set: TraceSet, policy: ThresholdPolicy) -> tuple[list[WeightPoint], int]:
    """Map each trace to a (t_rise, t_fall) weight point.

    Returns the points in input order plus a tally of traces dropped because
    they never cross the threshold (or end above it). In fraction mode the
    threshold is ``value`` times the median peak over the whole set, applied
    as one absolute level to every trace.
    """
    if policy.mode is ThresholdMode.FRACTION_OF_MEDIAN_PEAK:
        threshold = policy.value * float(np.median(trace_set.samples.max(axis=1)))
    else:
        threshold = policy.value

    points: list[WeightPoint] = []
    dropped = 0
    for i in range(len(trace_set)):
        try:
            pair = _extract_at_threshold(
                trace_set.samples[i], threshold, trace_set.t0,
                trace_set.sample_period, policy.timing_resolution, int(trace_set.ids[i]),
            )
        except (NoCrossingError, ValueError):
            dropped += 1
            continue
        points.append(WeightPoint(pair.t_rise, pair.t_fall, trace_id=pair.trace_id))
    return points, dropped


def sweep_thresholds(trace_set: TraceSet, fractions, k: int, n_min: int,
                     timing_resolution: float = 0.0, nbar_hint: float | None = None,
                     coarse_step: float = 2.0) -> list[dict]:
    """Score a range of fractional thresholds by prior-weighted confidence.

    Runs the full edge extraction + angle search at each threshold; intended
    for the CLI sweep mode, so the default angle grid is coarse.
    """
    from .discriminate import find_optimal_angle

    rows = []
    for frac in fractions:
        policy = ThresholdPolicy(
            mode=ThresholdMode.FRACTION_OF_MEDIAN_PEAK,
            value=float(frac),
            timing_resolution=timing_resolution,
        )
        points, dropped = edge_points(trace_set, policy)
        row = {"threshold_fraction": float(frac), "dropped": dropped}
        try:
            model, mix = find_optimal_angle(
                points, k, n_min, nbar_hint=nbar_hint, coarse_step=coarse_step
            )
            row.update(score=model.score, angle=model.angle,
                       n_max_resolved=mix.n_max_resolved)
        except (FitFailureError, ValueError):
            row.update(score=float("nan"), angle=float("nan"), n_max_resolved=-1)
        rows.append(row)
    return rows
