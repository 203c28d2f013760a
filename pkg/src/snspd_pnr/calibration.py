"""Mean-photon-number calibration from count rates."""

from __future__ import annotations

import math

from .errors import SaturationError


def calibrate_nbar(count_rate: float, repetition_rate: float) -> float:
    """Mean detected photon number per pulse from click statistics.

    Assuming Poisson statistics of the source, a click probability
    CR/RR implies n_bar = -ln(1 - CR/RR).
    """
    if repetition_rate <= 0:
        raise ValueError("repetition_rate must be positive")
    if count_rate < 0:
        raise ValueError("count_rate must be nonnegative")
    if count_rate >= repetition_rate:
        raise SaturationError(
            "count rate at or above the repetition rate; mean photon number diverges"
        )
    return -math.log1p(-count_rate / repetition_rate)
