"""Waveform records and the synthetic detector-pulse generator.

The generator is the ground-truth oracle for the rest of the pipeline. Each
detection event is modelled as a double-exponential voltage pulse

    v(t) = A(n) * (1 - exp(-(t - t_n)/tau_rise)) * exp(-(t - t_n)/tau_fall)

for t > t_n and zero before, riding on white Gaussian noise. The photon
number n of an event is drawn from a Poisson distribution, and it enters the
pulse in two ways: the amplitude A(n) = amp_base - (n-1)*amp_step shrinks
linearly with n (floored at amp_base/10), and the onset
t_n = t_rise_base - (n-1)*t_rise_step advances linearly with n (plus Gaussian
timing jitter). Higher photon number therefore means an earlier rising edge
and a lower peak, which is exactly the structure the analysis stages are
designed to pick up.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Source(str, Enum):
    MEASURED = "measured"
    SYNTHETIC = "synthetic"


@dataclass
class Trace:
    """One uniformly sampled voltage record of a detection event."""

    samples: np.ndarray
    sample_period: float
    t0: float = 0.0
    id: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be positive")
        if not np.isfinite(self.samples).all():
            raise ValueError("samples must be finite")

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        """Trigger-relative sample times."""
        return self.t0 + self.sample_period * np.arange(self.samples.size)


@dataclass
class TraceSet:
    """An ordered collection of equally shaped traces.

    ``samples`` is a (n_traces, n_samples) array; all traces share one
    sample period and trigger-relative origin.
    """

    samples: np.ndarray
    sample_period: float
    t0: float = 0.0
    ids: np.ndarray | None = None
    mean_photon_number_label: float | None = None
    source: Source = Source.MEASURED

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty (n_traces, n_samples) array")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be positive")
        if self.ids is None:
            self.ids = np.arange(self.samples.shape[0], dtype=np.int64)
        else:
            self.ids = np.asarray(self.ids, dtype=np.int64)
            if self.ids.shape != (self.samples.shape[0],):
                raise ValueError("ids must have one entry per trace")
        if self.mean_photon_number_label is not None and self.mean_photon_number_label < 0:
            raise ValueError("mean photon number label must be nonnegative")
        if not np.isfinite(self.samples).all():
            raise ValueError("samples must be finite")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def trace(self, i: int) -> Trace:
        return Trace(
            self.samples[i],
            self.sample_period,
            t0=self.t0,
            id=int(self.ids[i]),
        )

    def __iter__(self):
        return (self.trace(i) for i in range(len(self)))

    @classmethod
    def from_traces(cls, traces, **kwargs) -> "TraceSet":
        traces = list(traces)
        if not traces:
            raise ValueError("need at least one trace")
        period = traces[0].sample_period
        t0 = traces[0].t0
        length = len(traces[0])
        for tr in traces:
            if len(tr) != length or tr.sample_period != period:
                raise ValueError("all traces must share length and sample period")
        return cls(
            samples=np.stack([tr.samples for tr in traces]),
            sample_period=period,
            t0=t0,
            ids=np.array([tr.id for tr in traces], dtype=np.int64),
            **kwargs,
        )


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic pulse ensemble.

    Defaults mirror a fast-oscilloscope readout of a nanowire detector:
    8 ps sampling, 1 ns / 20 ns rise and fall constants and a ~0.37 V
    single-photon amplitude. The per-photon decrement and edge advance are
    oracle conventions, not hardware claims.
    """

    n_bar: float = 1.5
    amp_base: float = 0.37
    amp_step: float = 0.035
    t_rise_base: float = 18e-9
    t_rise_step: float = 0.5e-9
    tau_rise: float = 1e-9
    tau_fall: float = 20e-9
    jitter_sigma: float = 20e-12
    noise_sigma: float = 0.0268
    sample_period: float = 8e-12
    n_samples: int = 30000
    rng_seed: int = 0

    def __post_init__(self):
        if not self.n_bar > 0:
            raise ValueError("n_bar must be positive")
        if not self.amp_base > 0:
            raise ValueError("amp_base must be positive")
        if self.amp_step < 0 or self.t_rise_step < 0:
            raise ValueError("amp_step and t_rise_step must be nonnegative")
        for name in ("t_rise_base", "tau_rise", "tau_fall", "sample_period"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.tau_rise < self.tau_fall:
            raise ValueError("tau_rise must be smaller than tau_fall")
        if self.jitter_sigma < 0 or self.noise_sigma < 0:
            raise ValueError("noise and jitter sigmas must be nonnegative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")

    @property
    def amp_floor(self) -> float:
        return self.amp_base / 10.0

    def amplitude(self, n: int) -> float:
        """Pulse amplitude for photon number n >= 1, floored at amp_base/10."""
        return max(self.amp_base - (n - 1) * self.amp_step, self.amp_floor)

    def onset(self, n: int) -> float:
        """Nominal (jitter-free) pulse onset time for photon number n >= 1."""
        return self.t_rise_base - (n - 1) * self.t_rise_step


@dataclass
class LabeledTrace:
    """A trace plus its true photon number; true_n = 0 means noise only."""

    trace: Trace
    true_n: int

    def __post_init__(self):
        if self.true_n < 0:
            raise ValueError("true_n must be nonnegative")


def pulse_waveform(cfg: SyntheticConfig, n: int, jitter: float = 0.0) -> np.ndarray:
    """Noise-free pulse samples for photon number ``n`` (zeros for n = 0)."""
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    out = np.zeros(cfg.n_samples)
    if n == 0:
        return out
    t = cfg.sample_period * np.arange(cfg.n_samples)
    u = t - (cfg.onset(n) + jitter)
    m = u > 0
    out[m] = cfg.amplitude(n) * (1.0 - np.exp(-u[m] / cfg.tau_rise)) * np.exp(-u[m] / cfg.tau_fall)
    return out


@dataclass
class SyntheticBatch(Sequence):
    """Generated records with ground-truth labels.

    Behaves as a sequence of :class:`LabeledTrace`; the bulk arrays are
    available directly for vectorised work. ``amp_floor_engaged`` marks
    records whose raw amplitude fell below the amp_base/10 floor.
    """

    trace_set: TraceSet
    true_n: np.ndarray
    amp_floor_engaged: np.ndarray

    def __len__(self):
        return len(self.trace_set)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return LabeledTrace(self.trace_set.trace(i), int(self.true_n[i]))


def generate_synthetic(cfg: SyntheticConfig, count: int) -> SyntheticBatch:
    """Draw ``count`` labelled records from the synthetic pulse ensemble.

    Each record draws n ~ Poisson(n_bar); n = 0 gives pure noise, n >= 1 a
    double-exponential pulse with amplitude A(n) and onset t_n as described
    in the module docstring. Output is deterministic for a fixed rng_seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(cfg.rng_seed)
    ns = rng.poisson(cfg.n_bar, size=count)
    jitters = rng.normal(0.0, cfg.jitter_sigma, size=count)
    data = rng.normal(0.0, cfg.noise_sigma, size=(count, cfg.n_samples))

    t = cfg.sample_period * np.arange(cfg.n_samples)
    floor_engaged = np.zeros(count, dtype=bool)
    for i in np.nonzero(ns >= 1)[0]:
        n = int(ns[i])
        raw_amp = cfg.amp_base - (n - 1) * cfg.amp_step
        floor_engaged[i] = raw_amp < cfg.amp_floor
        amp = max(raw_amp, cfg.amp_floor)
        u = t - (cfg.onset(n) + jitters[i])
        m = u > 0
        data[i, m] += amp * (1.0 - np.exp(-u[m] / cfg.tau_rise)) * np.exp(-u[m] / cfg.tau_fall)

    trace_set = TraceSet(
        samples=data,
        sample_period=cfg.sample_period,
        t0=0.0,
        mean_photon_number_label=cfg.n_bar,
        source=Source.SYNTHETIC,
    )
    return SyntheticBatch(trace_set, ns.astype(np.int64), floor_engaged)


def poisson_pmf(n: int, n_bar: float) -> float:
    """P(N = n) for N ~ Poisson(n_bar)."""
    if n < 0 or int(n) != n:
        raise ValueError("n must be a nonnegative integer")
    if not n_bar > 0:
        raise ValueError("n_bar must be positive")
    n = int(n)
    return math.exp(n * math.log(n_bar) - n_bar - math.lgamma(n + 1))
