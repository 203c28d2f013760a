"""Photon-number extraction from superconducting-nanowire detector waveforms.

Two analysis paths share one discrimination stage: full-waveform records are
projected onto a fitted principal-component basis, while edge-timing records
reduce each pulse to its rising/falling threshold-crossing times. Either way
the 2-D points are collapsed along an optimised projection angle, fitted with
a Poisson-tied Gaussian mixture, and scored with per-photon-number
assignment confidences.
"""

from .calibration import calibrate_nbar
from .discriminate import (
    ConfidenceReport,
    Hist2D,
    MixtureInit,
    PoissonMixture,
    ProjectionModel,
    classify_values,
    confidence,
    find_optimal_angle,
    fit_mixture,
    hist2d,
    prior_weighted_confidence,
    project_angle,
)
from .edges import EdgePair, ThresholdMode, ThresholdPolicy, edge_points, extract_edges
from .errors import (
    DegenerateDataError,
    EmptyResultError,
    FitFailureError,
    InsufficientDataError,
    NoCrossingError,
    PnrError,
    SaturationError,
    WaveformParseError,
)
from .pca import PcaBasis, WeightPoint, fit_pca, project, project_set, select_training
from .preprocess import (
    FilterPolicy,
    FilterReport,
    TraceClass,
    classify_trace,
    estimate_baseline,
    window_and_align,
)
from .waveform import (
    LabeledTrace,
    Source,
    SyntheticBatch,
    SyntheticConfig,
    Trace,
    TraceSet,
    generate_synthetic,
    poisson_pmf,
    pulse_waveform,
)

__version__ = "0.1.0"
