"""Principal-component basis fitting and trace projection.

The basis is the top eigenvectors of the sample covariance of mean-centered
traces, computed through an SVD of the centered data matrix for numerical
stability. Projecting a trace onto the first two components yields the
weight pair (w1, w2) that the discrimination stage works with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError
from .waveform import Trace, TraceSet


@dataclass
class PcaBasis:
    """Orthonormal principal components of a training set.

    ``components`` rows follow a fixed sign convention: the largest-magnitude
    element of each component is positive. ``explained_variance`` uses the
    sample-covariance normalisation (divide by N - 1).
    """

    mean_trace: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_samples(self) -> int:
        return self.components.shape[1]


@dataclass
class WeightPoint:
    """Coordinates of one trace in a 2-D analysis plane.

    Either principal-component weights (w1, w2) or edge times
    (t_rise, t_fall), depending on the path that produced it.
    """

    w1: float
    w2: float
    trace_id: int = -1

    def __post_init__(self):
        if not (np.isfinite(self.w1) and np.isfinite(self.w2)):
            raise ValueError("weights must be finite")


def fit_pca(training: TraceSet, n_components: int) -> PcaBasis:
    """Fit an orthonormal component basis to a training trace set.

    Traces are expected to be windowed and baseline-subtracted already.
    Deterministic: identical input gives identical output, and the result is
    invariant (to float roundoff) under permutation of the training traces.
    """
    if n_components < 1:
        raise ValueError("n_components must be at least 1")
    x = training.samples
    n = x.shape[0]
    if n < n_components + 1:
        raise InsufficientDataError(
            f"need at least {n_components + 1} traces to fit {n_components} components, got {n}"
        )
    if n_components > min(n - 1, x.shape[1]):
        raise InsufficientDataError(
            f"{n_components} components not identifiable from {n} traces of length {x.shape[1]}"
        )
    mean = x.mean(axis=0)
    centered = x - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    variances = svals**2 / (n - 1)
    total = float(variances.sum())
    # Relative threshold: identical traces leave only float roundoff behind.
    if total <= 1e-24 * max(float((x * x).mean()), 1e-300):
        raise DegenerateDataError("training traces carry no variance")

    components = vt[:n_components].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaBasis(
        mean_trace=mean,
        components=components,
        explained_variance=variances[:n_components],
        explained_variance_ratio=variances[:n_components] / total,
    )


def project_matrix(basis: PcaBasis, samples: np.ndarray) -> np.ndarray:
    """Project (n_traces, n_samples) rows onto the first two components."""
    if basis.n_components < 2:
        raise ValueError("projection needs a basis with at least 2 components")
    if samples.shape[-1] != basis.n_samples:
        raise ValueError(
            f"trace length {samples.shape[-1]} does not match basis length {basis.n_samples}"
        )
    return (samples - basis.mean_trace) @ basis.components[:2].T


def project(basis: PcaBasis, trace: Trace) -> WeightPoint:
    """Weights of one trace: w_i = <trace - mean, component_i> for i = 1, 2."""
    w = project_matrix(basis, trace.samples[None, :])[0]
    return WeightPoint(float(w[0]), float(w[1]), trace_id=trace.id)


def project_set(basis: PcaBasis, trace_set: TraceSet) -> list[WeightPoint]:
    """Project every trace of a set, preserving order and trace ids."""
    w = project_matrix(basis, trace_set.samples)
    return [
        WeightPoint(float(a), float(b), trace_id=int(i))
        for (a, b), i in zip(w, trace_set.ids)
    ]


def select_training(sets, per_group: int = 1000) -> TraceSet:
    """Concatenate the first ``per_group`` traces of each (filtered) set.

    Using a fixed-size leading subset per mean-photon-number group keeps the
    fit cheap; more samples did not improve it in practice.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one trace set")
    period = sets[0].sample_period
    length = sets[0].n_samples
    rows = []
    for ts in sets:
        if ts.sample_period != period or ts.n_samples != length:
            raise ValueError("training sets must share sample period and trace length")
        rows.append(ts.samples[:per_group])
    return TraceSet(
        samples=np.concatenate(rows, axis=0),
        sample_period=period,
        t0=sets[0].t0,
        source=sets[0].source,
    )
